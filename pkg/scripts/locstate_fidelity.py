"""Fidelity of the second-order localized state along J = Jp at L = 4m + 2."""
import argparse
from dataclasses import dataclass

import numpy as np

from sawtooth.cli import locstate_point


@dataclass
class Config:
    L: int = 10
    start: float = -1.0
    stop: float = -0.05
    num: int = 20


def run(cfg: Config) -> list[list[float]]:
    rows = [locstate_point(cfg.L, x, x) for x in np.linspace(cfg.start, cfg.stop, cfg.num)]
    for j, _, F, idx, energy, _ in rows:
        print(f"J=Jp={j:+.3f}  F={F:.4f}  eigenstate {idx} at E={energy:+.4f}")
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-L", type=int, default=Config.L)
    ap.add_argument("--start", type=float, default=Config.start)
    ap.add_argument("--stop", type=float, default=Config.stop)
    ap.add_argument("--num", type=int, default=Config.num)
    a = ap.parse_args()
    run(Config(a.L, a.start, a.stop, a.num))
