"""Time-averaged return probability over a (J/V, Jp/V) grid.

Thin wrapper over ``sawtooth sweep`` with the averaging window 1000/V and a
coarse default grid; pass ``--threads`` to use several processes.
"""
import argparse
import sys
from dataclasses import dataclass

from sawtooth.cli import main


@dataclass
class Config:
    L: int = 12
    j_range: str = "-2:0:21"
    jp_range: str = "-2:2:41"
    t_max: float = 1000.0
    samples: int = 10001
    threads: int = 1
    out: str = "out/phase_diagram"
    with_r: bool = False


def run(cfg: Config) -> int:
    argv = ["sweep", "-L", str(cfg.L), f"--x-values={cfg.j_range}", f"--y-values={cfg.jp_range}",
            "--tmax", str(cfg.t_max), "--samples", str(cfg.samples), "--threads", str(cfg.threads),
            "--out", cfg.out]
    if cfg.with_r:
        argv.append("--with-r")
    return main(argv)


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-L", type=int, default=Config.L)
    for f in ("j_range", "jp_range", "t_max", "samples", "threads", "out"):
        default = getattr(Config, f)
        ap.add_argument(f"--{f.replace('_', '-')}", dest=f, type=type(default), default=default)
    ap.add_argument("--with-r", action="store_true")
    sys.exit(run(Config(**vars(ap.parse_args()))))
