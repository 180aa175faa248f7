"""Bipartite entanglement of sector states across a chain cut.

The left part is sites 1..cut (the low ``cut`` bits), the right part the
remaining sites.  Any J' bond straddling the cut is simply severed.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import SectorBasis
from .errors import InvalidArgument
from .evolve import SpectralData, TimeSeries, evolve_states

ZERO_EIGENVALUE = 1e-14


@dataclass(frozen=True)
class ReducedDensityMatrix:
    matrix: np.ndarray = field(repr=False)

    @property
    def dim_left(self) -> int:
        return self.matrix.shape[0]


def _split(basis: SectorBasis, cut: int):
    if not 1 <= cut <= basis.L - 1:
        raise InvalidArgument(f"cut must lie in [1, {basis.L - 1}], got {cut}")
    left = basis.states & ((1 << cut) - 1)
    right = basis.states >> cut
    return left, right


def amplitude_matrix(psi: np.ndarray, basis: SectorBasis, cut: int) -> np.ndarray:
    """A[left_pattern, right_pattern] = <left, right|psi>."""
    left, right = _split(basis, cut)
    A = np.zeros((1 << cut, 1 << (basis.L - cut)), dtype=np.result_type(psi, float))
    A[left, right] = psi
    return A


def _check_state(psi: np.ndarray, basis: SectorBasis) -> np.ndarray:
    psi = np.asarray(psi)
    if psi.shape[0] != basis.dim:
        raise InvalidArgument(f"state length {psi.shape[0]} != basis dim {basis.dim}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise InvalidArgument(f"state has norm {norm:.12g}, expected 1")
    return psi


def reduced_density_matrix(
    psi: np.ndarray, basis: SectorBasis, cut: int | None = None, side: str = "left"
) -> ReducedDensityMatrix:
    """rho_L = Tr_R |psi><psi| (or rho_R for ``side='right'``)."""
    psi = _check_state(psi, basis)
    cut = basis.L // 2 if cut is None else cut
    A = amplitude_matrix(psi, basis, cut)
    if side == "right":
        A = A.T
    elif side != "left":
        raise InvalidArgument(f"side must be 'left' or 'right', got {side!r}")
    return ReducedDensityMatrix(A @ A.conj().T)


def _entropy_from_probs(p: np.ndarray) -> float:
    p = p[p > ZERO_EIGENVALUE]
    # rounding can push a pure-state eigenvalue just above 1
    return max(0.0, -float(np.sum(p * np.log(p))))


def entanglement_entropy(rho: ReducedDensityMatrix) -> float:
    """Von Neumann entropy in nats."""
    return _entropy_from_probs(np.linalg.eigvalsh(rho.matrix))


def _block_layout(basis: SectorBasis, cut: int):
    """Group sector states by particle number on the left.

    Returns per-block (row index, column index) arrays into a compact
    amplitude block for each left particle number.
    """
    left, right = _split(basis, cut)
    n_left = np.array([bin(int(x)).count("1") for x in range(1 << cut)])[left]
    blocks = []
    for n in np.unique(n_left):
        sel = np.flatnonzero(n_left == n)
        _, rows = np.unique(left[sel], return_inverse=True)
        _, cols = np.unique(right[sel], return_inverse=True)
        blocks.append((sel, rows, cols, rows.max() + 1, cols.max() + 1))
    return blocks


def schmidt_entropy(psi: np.ndarray, basis: SectorBasis, cut: int | None = None, _layout=None) -> float:
    """Entropy from singular values of the particle-number blocks of psi."""
    cut = basis.L // 2 if cut is None else cut
    layout = _layout if _layout is not None else _block_layout(basis, cut)
    probs = []
    for sel, rows, cols, nr, nc in layout:
        block = np.zeros((nr, nc), dtype=psi.dtype)
        block[rows, cols] = psi[sel]
        probs.append(np.linalg.svd(block, compute_uv=False) ** 2)
    return _entropy_from_probs(np.concatenate(probs))


def entropy_series(
    spec: SpectralData, psi0: np.ndarray, times, basis: SectorBasis, cut: int | None = None
) -> TimeSeries:
    times = np.asarray(times, dtype=float)
    cut = basis.L // 2 if cut is None else cut
    layout = _block_layout(basis, cut)
    values = np.empty(len(times))
    step = 256
    for start in range(0, len(times), step):
        states = evolve_states(spec, psi0, times[start : start + step])
        for k, psi in enumerate(states):
            values[start + k] = schmidt_entropy(psi, basis, cut, layout)
    return TimeSeries(times, values, "S_ent")
