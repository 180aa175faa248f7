"""Exact time evolution inside one particle-number sector.

Everything here works from a full eigendecomposition (``SpectralData``)
except :func:`krylov_evolve`, which only needs matrix-vector products and is
the route for sectors beyond the dense limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .basis import PHSectorBasis
from .errors import (
    CapacityError,
    ConvergenceError,
    EmptyWindow,
    InvalidArgument,
    UndefinedResult,
)
from .hamiltonian import SparseOperator

DENSE_LIMIT = 20000
LOW_STATISTICS = 100
_NORM_TOL = 1e-10
# bound on the (times x levels) complex work array, in elements
_CHUNK_ELEMENTS = 1 << 22


@dataclass(frozen=True)
class SpectralData:
    energies: np.ndarray = field(repr=False)
    vectors: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.energies)


@dataclass(frozen=True)
class TimeSeries:
    times: np.ndarray
    values: np.ndarray
    name: str = "value"

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise InvalidArgument("times and values differ in length")
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise InvalidArgument("times must be strictly increasing")

    def mean(self, t_min: float = -np.inf, t_max: float = np.inf) -> float:
        sel = (self.times >= t_min) & (self.times <= t_max)
        return float(np.mean(self.values[sel]))


@dataclass(frozen=True)
class QuenchSpec:
    initial: int
    t_max: float
    n_samples: int = 2001
    time_unit: str = "inv_V"

    def __post_init__(self):
        if self.n_samples < 2 or not self.t_max > 0:
            raise InvalidArgument("need n_samples >= 2 and t_max > 0")

    def grid(self) -> np.ndarray:
        return time_grid(self.t_max, self.n_samples)


def time_grid(t_max: float, n_samples: int) -> np.ndarray:
    if n_samples < 2 or not t_max > 0:
        raise InvalidArgument("need n_samples >= 2 and t_max > 0")
    return np.linspace(0.0, t_max, n_samples)


def diagonalize(H: SparseOperator | np.ndarray, dense_limit: int = DENSE_LIMIT) -> SpectralData:
    m = H.to_dense() if isinstance(H, SparseOperator) else np.asarray(H, dtype=float)
    if m.shape[0] > dense_limit:
        raise CapacityError(
            f"sector dimension {m.shape[0]} exceeds dense limit {dense_limit}; "
            "use the Krylov propagator instead"
        )
    energies, vectors = scipy.linalg.eigh(m)
    return SpectralData(energies, vectors)


def lift(spec: SpectralData, sector: PHSectorBasis) -> SpectralData:
    """Express eigenvectors of a particle-hole block in the parent Fock basis."""
    return SpectralData(spec.energies, np.asarray(sector.transform @ spec.vectors))


def _check_normalized(psi: np.ndarray) -> None:
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > _NORM_TOL:
        raise InvalidArgument(f"initial state has norm {norm:.12g}, expected 1")


def fock_vector(basis, state: int) -> np.ndarray:
    v = np.zeros(basis.dim)
    v[basis.rank(state)] = 1.0
    return v


def amplitudes(spec: SpectralData, psi0: np.ndarray) -> np.ndarray:
    """C^nu = <psi_nu | psi0>."""
    psi0 = np.asarray(psi0)
    if psi0.shape[0] != spec.dim:
        raise InvalidArgument(f"state length {psi0.shape[0]} != spectrum dim {spec.dim}")
    _check_normalized(psi0)
    return spec.vectors.T @ psi0


def _time_chunks(times: np.ndarray, width: int):
    step = max(1, _CHUNK_ELEMENTS // max(width, 1))
    for start in range(0, len(times), step):
        yield slice(start, start + step)


def _phases(energies: np.ndarray, t: np.ndarray) -> np.ndarray:
    return np.exp(-1j * np.outer(t, energies))


def evolve_states(spec: SpectralData, psi0: np.ndarray, times) -> np.ndarray:
    """Rows are psi(t) in the original basis, one per entry of ``times``."""
    c = amplitudes(spec, psi0)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    out = np.empty((len(times), spec.dim), dtype=complex)
    for sl in _time_chunks(times, spec.dim):
        out[sl] = (_phases(spec.energies, times[sl]) * c) @ spec.vectors.T
    # t = 0 is the initial state itself, without the round trip through the eigenbasis
    out[times == 0.0] = psi0
    return out


def return_probability(spec: SpectralData, psi0: np.ndarray, times) -> TimeSeries:
    """P(t) = |sum_nu |C^nu|^2 exp(-i E_nu t)|^2."""
    weights = np.abs(amplitudes(spec, psi0)) ** 2
    times = np.asarray(times, dtype=float)
    values = np.empty(len(times))
    for sl in _time_chunks(times, spec.dim):
        values[sl] = np.abs(_phases(spec.energies, times[sl]) @ weights) ** 2
    return TimeSeries(times, np.clip(values, 0.0, 1.0), "P")


def short_time_decay_rate(H: SparseOperator, psi0: np.ndarray) -> float:
    """Energy spread sqrt(<H^2> - <H>^2); sets the initial quadratic decay of P(t)."""
    psi0 = np.asarray(psi0)
    h_psi = H.apply(psi0)
    second = float(np.real(np.vdot(h_psi, h_psi)))
    first = float(np.real(np.vdot(psi0, h_psi)))
    return math.sqrt(max(second - first * first, 0.0))


def time_averaged_return_probability(
    spec: SpectralData, psi0: np.ndarray, window_T: float, n_samples: int = 10001
) -> float:
    if not window_T > 0:
        raise InvalidArgument("window_T must be positive")
    return return_probability(spec, psi0, time_grid(window_T, n_samples)).mean()


def infinite_time_return_probability(spec: SpectralData, psi0: np.ndarray) -> float:
    """sum_nu |C^nu|^4, the long-time mean of P(t) for a nondegenerate spectrum."""
    return float(np.sum(np.abs(amplitudes(spec, psi0)) ** 4))


def localization_lifetime(P: TimeSeries, threshold: float = 0.05) -> float | None:
    """First time P drops below ``threshold``, linearly interpolated; ``None`` if never."""
    below = np.flatnonzero(P.values < threshold)
    if below.size == 0:
        return None
    k = int(below[0])
    if k == 0:
        return float(P.times[0])
    t0, t1 = P.times[k - 1], P.times[k]
    p0, p1 = P.values[k - 1], P.values[k]
    return float(t0 + (p0 - threshold) / (p0 - p1) * (t1 - t0))


def eigenbasis_matrix(spec: SpectralData, O: SparseOperator) -> np.ndarray:
    """O_{mu nu} = <psi_mu|O|psi_nu>."""
    if O.dim != spec.dim:
        raise InvalidArgument(f"observable dim {O.dim} != spectrum dim {spec.dim}")
    return spec.vectors.T @ (O.csr @ spec.vectors)


def eigenstate_expectations(spec: SpectralData, O: SparseOperator) -> np.ndarray:
    """Diagonal O_{nu nu} without forming the full eigenbasis matrix."""
    if O.dim != spec.dim:
        raise InvalidArgument(f"observable dim {O.dim} != spectrum dim {spec.dim}")
    return np.einsum("kn,kn->n", spec.vectors, O.csr @ spec.vectors)


def expectation_series(spec: SpectralData, psi0: np.ndarray, O: SparseOperator, times) -> TimeSeries:
    """<O(t)> = sum_{mu,nu} O_{mu nu} C^mu* C^nu exp(-i (E_nu - E_mu) t)."""
    o_eig = eigenbasis_matrix(spec, O)
    c = amplitudes(spec, psi0)
    times = np.asarray(times, dtype=float)
    values = np.empty(len(times))
    for sl in _time_chunks(times, spec.dim):
        a = _phases(spec.energies, times[sl]) * c
        values[sl] = np.real(np.einsum("tm,mn,tn->t", a.conj(), o_eig, a, optimize=True))
    return TimeSeries(times, values, "O")


def diagonal_ensemble_average(spec: SpectralData, psi0: np.ndarray, O: SparseOperator) -> float:
    weights = np.abs(amplitudes(spec, psi0)) ** 2
    return float(np.sum(eigenstate_expectations(spec, O) * weights))


@dataclass(frozen=True)
class MicrocanonicalResult:
    value: float
    count: int
    low_statistics: bool

    def __iter__(self):
        yield self.value
        yield self.count


def microcanonical_average(
    spec: SpectralData, O: SparseOperator | np.ndarray, E_ini: float, delta_E: float
) -> MicrocanonicalResult:
    """Mean of O_{nu nu} over eigenstates with |E_ini - E_nu| < delta_E.

    ``O`` may be an operator or a precomputed vector of eigenstate
    expectations.
    """
    if not delta_E > 0:
        raise InvalidArgument("delta_E must be positive")
    diag = eigenstate_expectations(spec, O) if isinstance(O, SparseOperator) else np.asarray(O)
    window = np.abs(E_ini - spec.energies) < delta_E
    count = int(window.sum())
    if count == 0:
        raise EmptyWindow(f"no eigenstates within {delta_E} of E={E_ini}")
    return MicrocanonicalResult(float(np.mean(diag[window])), count, count < LOW_STATISTICS)


def thermalization_deviation(O_DE: float, O_ME: float) -> float:
    """|(O_DE - O_ME) / (O_DE + O_ME)|."""
    denom = O_DE + O_ME
    if denom == 0.0:
        raise UndefinedResult(f"O_DE + O_ME vanishes (O_DE={O_DE}, O_ME={O_ME})")
    return abs((O_DE - O_ME) / denom)


def _lanczos(H: SparseOperator, v: np.ndarray, m: int):
    """Orthonormal Krylov basis (rows) and tridiagonal coefficients.

    Full reorthogonalization; stops early on an invariant subspace.  Returns
    the basis, alpha, beta and the residual coupling beta_m.
    """
    n = len(v)
    basis = np.zeros((m, n), dtype=complex)
    alpha = np.zeros(m)
    beta = np.zeros(m)
    basis[0] = v
    for j in range(m):
        w = H.apply(basis[j])
        alpha[j] = np.real(np.vdot(basis[j], w))
        w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        w = w - basis[: j + 1].T @ (basis[: j + 1].conj() @ w)
        b = np.linalg.norm(w)
        if j + 1 == m:
            return basis, alpha, beta[: m - 1], b
        if b < 1e-13:
            k = j + 1
            return basis[:k], alpha[:k], beta[: k - 1], 0.0
        beta[j] = b
        basis[j + 1] = w / b
    raise AssertionError("unreachable")


def krylov_evolve(
    H: SparseOperator,
    psi: np.ndarray,
    dt: float,
    subspace_dim: int = 30,
    tol: float = 1e-10,
    max_substeps: int = 100000,
) -> np.ndarray:
    """psi(t + dt) = exp(-i H dt) psi via Lanczos with adaptive sub-steps.

    Each sub-step is shrunk until the a-posteriori error estimate
    beta_m |[exp(-i T tau) e_1]_m| drops below ``tol``.
    """
    psi = np.asarray(psi, dtype=complex)
    if psi.shape[0] != H.dim:
        raise InvalidArgument(f"vector length {psi.shape[0]} != operator dim {H.dim}")
    _check_normalized(psi)
    if dt == 0:
        return psi.copy()
    m = max(2, min(subspace_dim, H.dim))
    remaining = float(dt)
    sign = 1.0 if dt > 0 else -1.0
    tau = remaining
    steps = 0
    while remaining * sign > 0:
        steps += 1
        if steps > max_substeps:
            raise ConvergenceError(f"Krylov propagation needed more than {max_substeps} sub-steps")
        basis, alpha, beta, resid = _lanczos(H, psi, m)
        evals, evecs = scipy.linalg.eigh_tridiagonal(alpha, beta) if len(alpha) > 1 else (
            alpha, np.ones((1, 1)))
        tau = sign * min(abs(tau), abs(remaining))
        while True:
            y = evecs @ (np.exp(-1j * evals * tau) * evecs[0])
            err = resid * abs(y[-1])
            if err < tol:
                break
            tau *= 0.5
            if abs(tau) < abs(dt) * 1e-14:
                raise ConvergenceError("Krylov step size underflow")
        psi = y @ basis
        psi /= np.linalg.norm(psi)
        remaining -= tau
        # cautious regrowth of the step after an accepted one
        tau *= 2.0 if err < 0.01 * tol else 1.0
    return psi
