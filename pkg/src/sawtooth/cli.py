"""Command-line pipelines: quench, sweep, spectrum, locstate, lifetime, states.

Configuration is one JSON document; command-line flags override its keys.
Every CSV gets a ``.json`` sidecar with the resolved configuration, its hash
and a timestamp, so CSV bodies stay byte-identical across reruns.

Exit codes: 0 success, 2 invalid configuration, 3 capacity, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basis import (
    MAX_SITES,
    block_state,
    build_ph_sector,
    build_sector_basis,
    domain_wall_state,
    from_pattern,
    popcount,
    to_pattern,
)
from .entanglement import _block_layout, entropy_series, schmidt_entropy
from .errors import CapacityError, InvalidArgument, NumericalError
from .evolve import (
    DENSE_LIMIT,
    diagonalize,
    eigenstate_expectations,
    expectation_series,
    fock_vector,
    krylov_evolve,
    lift,
    localization_lifetime,
    microcanonical_average,
    return_probability,
    thermalization_deviation,
    time_grid,
)
from .hamiltonian import (
    CONVENTIONS,
    ModelParams,
    build_hamiltonian,
    build_observable_hopping,
    project_to_ph_sector,
)
from .localization import build_phi_loc, fidelity, find_localized_eigenstate
from .spectral_stats import (
    alpha_indicator,
    brody_fit,
    histogram,
    peak_position,
    r_statistic,
    unfold,
)

log = logging.getLogger(__name__)

EXPERIMENTS = ("quench", "sweep", "spectrum", "locstate", "lifetime", "states")
TIME_UNITS = ("inv_V", "inv_J")
# longest averaging window, in units of 1/|V|
WINDOW_CAP = 1e5
MICROCANONICAL_WIDTH = 1.5

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_NUMERICAL = 0, 2, 3, 4


class ConfigError(InvalidArgument):
    pass


@dataclass
class ExperimentConfig:
    experiment: str = "quench"
    L: int = 12
    J: float = -0.3
    Jp: float = -0.3
    V: float = 1.0
    initial_state: str = "domain_wall"
    tmax: float = 200.0
    samples: int = 2001
    time_unit: str = "inv_V"
    output_dir: str = "out"
    interaction_convention: str = "plain"
    threads: int = 1
    cut: int | None = None
    method: str = "auto"
    dense_limit: int = DENSE_LIMIT
    # sweep: grid over (x_param, Jp) with the remaining coupling fixed
    fixed: str = "V"
    x_values: list[float] = field(default_factory=list)
    y_values: list[float] = field(default_factory=list)
    with_r: bool = False
    with_delta0: bool = False
    # spectrum / locstate
    points: list[list[float]] = field(default_factory=list)
    parity: int = 1
    poly_degree: int = 10
    eigenvalues: str | None = None
    # lifetime
    sizes: list[int] = field(default_factory=lambda: [8, 10, 12])
    threshold: float = 0.05

    @property
    def model(self) -> ModelParams:
        return ModelParams(self.L, self.J, self.Jp, self.V)

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        if self.L % 2 or not 2 <= self.L <= MAX_SITES:
            raise ConfigError(f"L must be even in [2, {MAX_SITES}], got {self.L}")
        if self.interaction_convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}")
        if self.time_unit not in TIME_UNITS:
            raise ConfigError(f"time_unit must be one of {TIME_UNITS}")
        if self.samples < 2 or not self.tmax > 0:
            raise ConfigError("need samples >= 2 and tmax > 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.method not in ("auto", "dense", "krylov"):
            raise ConfigError("method must be auto, dense or krylov")
        if self.fixed not in ("V", "J"):
            raise ConfigError("fixed must be 'V' or 'J'")
        if self.parity not in (1, -1):
            raise ConfigError("parity must be +1 or -1")
        if self.cut is not None and not 1 <= self.cut <= self.L - 1:
            raise ConfigError(f"cut must lie in [1, {self.L - 1}]")
        return self

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.as_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path: str | Path | None, overrides: dict) -> ExperimentConfig:
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return ExperimentConfig(**data).validate()


def parse_values(text: str) -> list[float]:
    """'a:b:n' for n evenly spaced values, otherwise a comma list."""
    text = text.strip()
    if not text:
        return []
    if ":" in text:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num)).tolist()
    return [float(x) for x in text.split(",") if x.strip()]


def parse_points(text: str) -> list[list[float]]:
    """'J,Jp;J,Jp;...' in units of V."""
    points = []
    for chunk in text.split(";"):
        if chunk.strip():
            vals = [float(x) for x in chunk.split(",")]
            if len(vals) != 2:
                raise ConfigError(f"point {chunk!r} must be 'J_over_V,Jp_over_V'")
            points.append(vals)
    return points


def resolve_initial_state(name: str, L: int) -> int:
    if name == "domain_wall":
        return domain_wall_state(L)
    if name.startswith("block:"):
        return block_state(L, int(name.split(":", 1)[1]))
    if len(name) != L:
        raise ConfigError(f"initial pattern {name!r} must have {L} characters")
    state = from_pattern(name)
    if popcount(state) != L // 2:
        raise ConfigError("initial pattern must be at half filling")
    return state


def evolution_window(cfg: ExperimentConfig, J: float | None = None, V: float | None = None) -> float:
    """Duration ``tmax`` converted from the configured unit, capped at WINDOW_CAP/|V|."""
    J = cfg.J if J is None else J
    V = cfg.V if V is None else V
    scale = abs(V) if cfg.time_unit == "inv_V" else abs(J)
    if scale == 0:
        scale = abs(V) or 1.0
    window = cfg.tmax / scale
    if V != 0:
        window = min(window, WINDOW_CAP / abs(V))
    return window


# ----------------------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return "" if x is None else str(x)


def write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])
    return path


def write_sidecar(csv_path: Path, cfg: ExperimentConfig, extra: dict | None = None) -> Path:
    meta = {
        "code_version": __version__,
        "config": cfg.as_dict(),
        "config_sha256": cfg.digest(),
        "interaction_convention": cfg.interaction_convention,
        "time_unit": cfg.time_unit,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    meta.update(extra or {})
    side = csv_path.with_suffix(".json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default))
    return side


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(type(x))


# ----------------------------------------------------------------------------- pipelines


def _sector(cfg: ExperimentConfig, params: ModelParams):
    basis = build_sector_basis(params.L, params.L // 2)
    H = build_hamiltonian(params, basis, cfg.interaction_convention)
    return basis, H


def _krylov_trajectory(H, basis, O, psi0, times, cut):
    layout = _block_layout(basis, cut)
    psi = psi0.astype(complex)
    P, S, Ov = [], [], []
    prev = 0.0
    for t in times:
        psi = krylov_evolve(H, psi, t - prev)
        prev = t
        P.append(abs(np.vdot(psi0, psi)) ** 2)
        S.append(schmidt_entropy(psi, basis, cut, layout))
        Ov.append(O.expectation(psi))
    return np.array(P), np.array(S), np.array(Ov)


def run_quench(cfg: ExperimentConfig) -> dict[str, Path]:
    params = cfg.model
    basis, H = _sector(cfg, params)
    psi0 = fock_vector(basis, resolve_initial_state(cfg.initial_state, cfg.L))
    O = build_observable_hopping(cfg.L, basis)
    cut = cfg.L // 2 if cfg.cut is None else cfg.cut
    window = evolution_window(cfg)
    times = time_grid(window, cfg.samples)
    method = cfg.method
    if method == "auto" and basis.dim > cfg.dense_limit:
        raise CapacityError(
            f"sector dimension {basis.dim} exceeds dense limit {cfg.dense_limit}; "
            "rerun with --method krylov"
        )
    if method == "krylov":
        P, S, Ov = _krylov_trajectory(H, basis, O, psi0, times, cut)
    else:
        spec = diagonalize(H, cfg.dense_limit)
        P = return_probability(spec, psi0, times).values
        S = entropy_series(spec, psi0, times, basis, cut).values
        Ov = expectation_series(spec, psi0, O, times).values
    out = Path(cfg.output_dir)
    path = write_csv(out / "trajectory.csv", ["t", "P", "S_ent", "O"], zip(times, P, S, Ov))
    write_sidecar(path, cfg, {
        "grid": {"t_max": window, "samples": cfg.samples},
        "initial_pattern": to_pattern(resolve_initial_state(cfg.initial_state, cfg.L), cfg.L),
        "method": "krylov" if method == "krylov" else "dense",
        "window_capped": bool(cfg.V) and window == WINDOW_CAP / abs(cfg.V),
    })
    return {"trajectory": path}


def sweep_point(cfg: ExperimentConfig, x: float, y: float) -> list:
    """One row of the sweep grid: x is J (fixed V) or V (fixed J), y is Jp."""
    if cfg.fixed == "V":
        params = ModelParams(cfg.L, x, y, cfg.V)
    else:
        params = ModelParams(cfg.L, cfg.J, y, x)
    basis, H = _sector(cfg, params)
    psi0 = fock_vector(basis, resolve_initial_state(cfg.initial_state, cfg.L))
    spec = diagonalize(H, cfg.dense_limit)
    window = evolution_window(cfg, params.J, params.V)
    p_avg = return_probability(spec, psi0, time_grid(window, cfg.samples)).mean()
    row = [params.J, params.Jp, params.V, window, p_avg]
    if cfg.with_r:
        sector = build_ph_sector(basis, cfg.parity)
        Hsym = build_hamiltonian(params, basis, "symmetrized")
        row.append(r_statistic(np.linalg.eigvalsh(project_to_ph_sector(Hsym, sector).to_dense())).mean)
    if cfg.with_delta0:
        row.append(_delta0(params, basis, H, spec, psi0))
    return row


def _delta0(params, basis, H, spec, psi0) -> float:
    O = build_observable_hopping(params.L, basis)
    o_diag = eigenstate_expectations(spec, O)
    de = float(np.sum(o_diag * np.abs(spec.vectors.T @ psi0) ** 2))
    me = microcanonical_average(spec, o_diag, H.expectation(psi0), MICROCANONICAL_WIDTH * abs(params.V))
    return thermalization_deviation(de, me.value)


def _sweep_task(args):
    cfg, x, y = args
    return sweep_point(cfg, x, y)


def map_ordered(fn, tasks: list, threads: int) -> list:
    """Apply ``fn`` to ``tasks``; results come back in task order for any worker count."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def run_sweep(cfg: ExperimentConfig) -> dict[str, Path]:
    if not cfg.x_values or not cfg.y_values:
        raise ConfigError("sweep needs non-empty x_values and y_values")
    tasks = [(cfg, x, y) for x in cfg.x_values for y in cfg.y_values]
    rows = map_ordered(_sweep_task, tasks, cfg.threads)
    header = ["J", "Jp", "V", "window", "P_avg"]
    if cfg.with_r:
        header.append("r_mean")
    if cfg.with_delta0:
        header.append("delta0")
    path = write_csv(Path(cfg.output_dir) / "grid.csv", header, rows)
    write_sidecar(path, cfg, {"grid": {"fixed": cfg.fixed, "x": cfg.x_values, "y": cfg.y_values}})
    return {"grid": path}


def spectrum_statistics(energies, poly_degree: int = 10):
    """Histogram rows and the stats row (alpha, beta, peak, r_mean, n_levels, n_degenerate)."""
    energies = np.sort(np.asarray(energies, dtype=float))
    unfolded = unfold(energies, poly_degree=poly_degree)
    hist = histogram(unfolded.spacings)
    r = r_statistic(energies)
    stats = [
        alpha_indicator(hist),
        brody_fit(unfolded.spacings),
        peak_position(hist),
        r.mean,
        len(energies),
        r.n_degenerate,
    ]
    return hist, stats, unfolded.method


def sector_spectrum(params: ModelParams, parity: int = 1) -> np.ndarray:
    basis = build_sector_basis(params.L, params.L // 2)
    H = build_hamiltonian(params, basis, "symmetrized")
    block = project_to_ph_sector(H, build_ph_sector(basis, parity))
    return np.linalg.eigvalsh(block.to_dense())


def _spectrum_task(args):
    cfg, point = args
    params = ModelParams.from_ratios(cfg.L, point[0], point[1], cfg.V)
    return spectrum_statistics(sector_spectrum(params, cfg.parity), cfg.poly_degree)


def _write_spectrum(out: Path, cfg, hist, stats, method, extra) -> dict[str, Path]:
    h = write_csv(out / "spacing_hist.csv", ["s", "P"], zip(hist.centers, hist.densities))
    s = write_csv(
        out / "stats.csv",
        ["alpha", "beta", "peak", "r_mean", "n_levels", "n_degenerate"],
        [stats],
    )
    for p in (h, s):
        write_sidecar(p, cfg, dict(extra, unfolding=method))
    return {"spacing_hist": h, "stats": s}


def run_spectrum(cfg: ExperimentConfig) -> dict[str, Path]:
    out = Path(cfg.output_dir)
    if cfg.eigenvalues:
        energies = np.loadtxt(cfg.eigenvalues, ndmin=1)
        hist, stats, method = spectrum_statistics(energies, cfg.poly_degree)
        return _write_spectrum(out, cfg, hist, stats, method, {"source": str(cfg.eigenvalues)})
    points = cfg.points or [[cfg.J / cfg.V, cfg.Jp / cfg.V]]
    results = map_ordered(_spectrum_task, [(cfg, p) for p in points], cfg.threads)
    files = {}
    for k, (point, (hist, stats, method)) in enumerate(zip(points, results)):
        target = out if len(points) == 1 else out / f"point_{k:03d}"
        extra = {"J_over_V": point[0], "Jp_over_V": point[1], "parity": cfg.parity}
        for name, p in _write_spectrum(target, cfg, hist, stats, method, extra).items():
            files[f"{name}_{k}"] = p
    return files


def locstate_point(L: int, j: float, jp: float, V: float = 1.0) -> list:
    """F for one (J/V, Jp/V): localized eigenstate of the particle-hole even block."""
    params = ModelParams.from_ratios(L, j, jp, V)
    basis = build_sector_basis(L, L // 2)
    sector = build_ph_sector(basis, 1)
    H = build_hamiltonian(params, basis, "symmetrized")
    spec = lift(diagonalize(project_to_ph_sector(H, sector)), sector)
    psi_dw = fock_vector(basis, domain_wall_state(L))
    idx, _ = find_localized_eigenstate(spec, psi_dw)
    phi = build_phi_loc(params, basis)
    return [j, jp, fidelity(phi, spec, idx), idx, spec.energies[idx], fidelity(phi, spec, idx, raw=True)]


def _locstate_task(args):
    return locstate_point(*args)


def run_locstate(cfg: ExperimentConfig) -> dict[str, Path]:
    points = cfg.points
    if not points:
        raise ConfigError("locstate needs a non-empty grid of (J/V, Jp/V) points")
    rows = map_ordered(_locstate_task, [(cfg.L, j, jp, cfg.V) for j, jp in points], cfg.threads)
    path = write_csv(
        Path(cfg.output_dir) / "locstate.csv",
        ["J_over_V", "Jp_over_V", "F", "eigindex", "energy", "F_raw"],
        rows,
    )
    write_sidecar(path, cfg, {"parity_sector": 1, "interaction_convention_used": "symmetrized"})
    return {"locstate": path}


def lifetime_point(cfg: ExperimentConfig, L: int):
    params = ModelParams(L, cfg.J, cfg.Jp, cfg.V)
    basis, H = _sector(cfg, params)
    spec = diagonalize(H, cfg.dense_limit)
    psi0 = fock_vector(basis, domain_wall_state(L))
    window = evolution_window(cfg)
    P = return_probability(spec, psi0, time_grid(window, cfg.samples))
    return localization_lifetime(P, cfg.threshold), window


def _lifetime_task(args):
    return lifetime_point(*args)


def run_lifetime(cfg: ExperimentConfig) -> dict[str, Path]:
    if not cfg.sizes:
        raise ConfigError("lifetime needs at least one system size")
    results = map_ordered(_lifetime_task, [(cfg, L) for L in cfg.sizes], cfg.threads)
    rows = []
    for L, (t_star, window) in zip(cfg.sizes, results):
        censored = t_star is None
        rows.append([L, window if censored else t_star, censored, window])
    finite = [r[1] for r in rows if not r[2]]
    monotone = len(finite) == len(rows) and all(a < b for a, b in zip(finite, finite[1:]))
    path = write_csv(
        Path(cfg.output_dir) / "lifetime.csv", ["L", "t_star", "censored", "window"], rows
    )
    write_sidecar(path, cfg, {"monotone_increasing": monotone, "threshold": cfg.threshold})
    return {"lifetime": path, "monotone": monotone}


def appendix_states(L: int) -> list[tuple[str, str]]:
    rows = [("domain_wall", to_pattern(domain_wall_state(L), L))]
    for block in range(L // 2 - 1, 0, -1):
        try:
            rows.append((f"block:{block}", to_pattern(block_state(L, block), L)))
        except InvalidArgument:
            continue
    return rows


RUNNERS = {
    "quench": run_quench,
    "sweep": run_sweep,
    "spectrum": run_spectrum,
    "locstate": run_locstate,
    "lifetime": run_lifetime,
}


# ----------------------------------------------------------------------------- argparse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("-L", type=int, dest="L")
    common.add_argument("--J", type=float)
    common.add_argument("--Jp", type=float)
    common.add_argument("--V", type=float)
    common.add_argument("--tmax", type=float)
    common.add_argument("--samples", type=int)
    common.add_argument("--time-unit", dest="time_unit", choices=TIME_UNITS)
    common.add_argument("--threads", type=int)
    common.add_argument("--out", dest="output_dir")
    common.add_argument("--convention", dest="interaction_convention", choices=CONVENTIONS)
    common.add_argument("--cut", type=int)
    common.add_argument("--initial", dest="initial_state",
                        help="domain_wall, block:<len> or a 0/1 pattern")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="sawtooth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)

    q = sub.add_parser("quench", parents=[common], help="P(t), S_ent(t), O(t) after a quench")
    q.add_argument("--method", choices=("auto", "dense", "krylov"))

    s = sub.add_parser("sweep", parents=[common], help="time-averaged P over a parameter grid")
    s.add_argument("--fixed", choices=("V", "J"))
    s.add_argument("--x-values", help="J values (fixed V) or V values (fixed J): a:b:n or list")
    s.add_argument("--y-values", help="Jp values: a:b:n or list")
    s.add_argument("--with-r", action="store_true", default=None)
    s.add_argument("--with-delta0", action="store_true", default=None)

    sp = sub.add_parser("spectrum", parents=[common], help="level statistics of one PH sector")
    sp.add_argument("--points", help="'J/V,Jp/V;J/V,Jp/V;...'")
    sp.add_argument("--parity", type=int, choices=(1, -1))
    sp.add_argument("--poly-degree", type=int)
    sp.add_argument("--eigenvalues", help="plain-text file, one eigenvalue per line")

    loc = sub.add_parser("locstate", parents=[common], help="fidelity of the perturbative state")
    loc.add_argument("--points", help="'J/V,Jp/V;...'")
    loc.add_argument("--ratios", help="J/V = Jp/V values: a:b:n or list")

    lt = sub.add_parser("lifetime", parents=[common], help="t* versus system size")
    lt.add_argument("--sizes", help="comma list of L values")
    lt.add_argument("--threshold", type=float)

    sub.add_parser("states", parents=[common], help="print domain-wall and block patterns")
    return parser


def _overrides(ns: argparse.Namespace) -> dict:
    d = dict(vars(ns))
    for key in ("config", "verbose"):
        d.pop(key, None)
    if d.get("x_values") is not None:
        d["x_values"] = parse_values(d["x_values"])
    if d.get("y_values") is not None:
        d["y_values"] = parse_values(d["y_values"])
    if d.get("points") is not None:
        d["points"] = parse_points(d["points"])
    ratios = d.pop("ratios", None)
    if ratios is not None:
        d["points"] = [[x, x] for x in parse_values(ratios)]
    if d.get("sizes") is not None:
        d["sizes"] = [int(x) for x in d["sizes"].split(",") if x.strip()]
    return d


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(ns.config, _overrides(ns))
        if cfg.experiment == "states":
            for name, pattern in appendix_states(cfg.L):
                print(f"{name},{pattern}")
            return EXIT_OK
        files = RUNNERS[cfg.experiment](cfg)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InvalidArgument as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for name, value in files.items():
        print(f"{name}: {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
