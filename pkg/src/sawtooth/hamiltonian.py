"""Sawtooth-ladder Hamiltonian for hardcore bosons on an open chain.

The ladder is flattened to sites 1..L.  Nearest-neighbour bonds (i, i+1)
carry hopping J and interaction V; odd (A) sites are additionally linked to
the next A site by hopping Jp across bonds (i, i+2).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .basis import PHSectorBasis, SectorBasis, complement_permutation
from .errors import InvalidArgument, SymmetryViolation

CONVENTIONS = ("plain", "symmetrized")


@dataclass(frozen=True)
class ModelParams:
    L: int
    J: float
    Jp: float
    V: float

    def __post_init__(self):
        if self.L < 2 or self.L % 2:
            raise InvalidArgument(f"L must be even and >= 2, got {self.L}")

    @classmethod
    def from_ratios(cls, L: int, J_over_V: float, Jp_over_V: float, V: float = 1.0):
        return cls(L, J_over_V * V, Jp_over_V * V, V)


def hopping_bonds(L: int, J: float, Jp: float) -> list[tuple[int, int, float]]:
    """(site_a, site_b, amplitude) with 0-based sites, zero amplitudes skipped."""
    bonds = [(i, i + 1, J) for i in range(L - 1)]
    # 0-based even index == 1-based odd site (A leg)
    bonds += [(i, i + 2, Jp) for i in range(0, L - 2, 2)]
    return [b for b in bonds if b[2] != 0.0]


@dataclass(frozen=True)
class SparseOperator:
    """Real symmetric matrix: diagonal plus strictly-upper-triangle entries."""

    dim: int
    diag: np.ndarray = field(repr=False)
    rows: np.ndarray = field(repr=False)
    cols: np.ndarray = field(repr=False)
    vals: np.ndarray = field(repr=False)

    @property
    def offdiag(self):
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.vals.tolist()))

    @cached_property
    def csr(self) -> sp.csr_matrix:
        upper = sp.coo_matrix((self.vals, (self.rows, self.cols)), shape=(self.dim, self.dim))
        full = upper + upper.T + sp.diags(self.diag)
        return sp.csr_matrix(full)

    def to_dense(self) -> np.ndarray:
        return self.csr.toarray()

    def apply(self, v: np.ndarray) -> np.ndarray:
        return apply(self, v)

    def expectation(self, v: np.ndarray) -> float:
        return float(np.real(np.vdot(v, self.csr @ v)))

    @classmethod
    def from_matrix(cls, m, drop_tol: float = 1e-15) -> "SparseOperator":
        m = sp.csr_matrix(m).tocoo()  # sums duplicates
        scale = np.abs(m.data).max() if m.nnz else 0.0
        keep = (m.row < m.col) & (np.abs(m.data) > drop_tol * scale)
        order = np.lexsort((m.col[keep], m.row[keep]))
        return cls(
            m.shape[0],
            np.asarray(m.tocsr().diagonal(), dtype=float),
            m.row[keep][order].astype(np.int64),
            m.col[keep][order].astype(np.int64),
            m.data[keep][order].astype(float),
        )

    def dump(self, path: str | Path) -> None:
        """Coordinate text dump, upper triangle including the diagonal."""
        with open(path, "w") as fh:
            fh.write(f"# dim={self.dim} sym=upper\n")
            for k in np.flatnonzero(self.diag):
                fh.write(f"{k} {k} {self.diag[k]:.17g}\n")
            for r, c, v in zip(self.rows, self.cols, self.vals):
                fh.write(f"{r} {c} {v:.17g}\n")


def load_operator(path: str | Path) -> SparseOperator:
    with open(path) as fh:
        header = fh.readline()
        dim = int(header.split("dim=")[1].split()[0])
        data = np.loadtxt(fh, ndmin=2)
    diag = np.zeros(dim)
    if data.size == 0:
        return SparseOperator(dim, diag, *(np.zeros(0, dtype=np.int64),) * 2, np.zeros(0))
    r, c, v = data[:, 0].astype(np.int64), data[:, 1].astype(np.int64), data[:, 2]
    on = r == c
    diag[r[on]] = v[on]
    return SparseOperator(dim, diag, r[~on], c[~on], v[~on])


def apply(H: SparseOperator, v: np.ndarray) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[0] != H.dim:
        raise InvalidArgument(f"vector length {v.shape[0]} != operator dim {H.dim}")
    return H.csr @ v


def _hopping_entries(basis: SectorBasis, bonds):
    rows, cols, vals = [], [], []
    states = basis.states
    for a, b, amp in bonds:
        na = (states >> a) & 1
        nb = (states >> b) & 1
        movable = np.flatnonzero(na != nb)
        targets = states[movable] ^ ((1 << a) | (1 << b))
        tidx = basis.rank_array(targets)
        upper = movable < tidx
        rows.append(movable[upper])
        cols.append(tidx[upper])
        vals.append(np.full(int(upper.sum()), float(amp)))
    if not rows:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, np.zeros(0)
    rows, cols, vals = map(np.concatenate, (rows, cols, vals))
    order = np.lexsort((cols, rows))
    return rows[order], cols[order], vals[order]


def interaction_diagonal(basis: SectorBasis, V: float, convention: str = "plain") -> np.ndarray:
    if convention not in CONVENTIONS:
        raise InvalidArgument(f"unknown interaction convention {convention!r}")
    n = basis.occupations().astype(float)
    if convention == "symmetrized":
        n -= 0.5
    return V * np.sum(n[:, :-1] * n[:, 1:], axis=1)


def build_hamiltonian(
    params: ModelParams, basis: SectorBasis, interaction_convention: str = "plain"
) -> SparseOperator:
    if basis.L != params.L:
        raise InvalidArgument(f"basis has L={basis.L}, parameters have L={params.L}")
    diag = interaction_diagonal(basis, params.V, interaction_convention)
    rows, cols, vals = _hopping_entries(basis, hopping_bonds(params.L, params.J, params.Jp))
    return SparseOperator(basis.dim, diag, rows, cols, vals)


def build_observable_hopping(L: int, basis: SectorBasis) -> SparseOperator:
    """(1/L) sum_i (X_i X_{i+1} + Y_i Y_{i+1}) = (2/L) sum_i (c+_i c_{i+1} + h.c.)."""
    if basis.L != L:
        raise InvalidArgument(f"basis has L={basis.L}, expected {L}")
    bonds = [(i, i + 1, 2.0 / L) for i in range(L - 1)]
    rows, cols, vals = _hopping_entries(basis, bonds)
    return SparseOperator(basis.dim, np.zeros(basis.dim), rows, cols, vals)


def build_single_particle_hamiltonian(params: ModelParams) -> np.ndarray:
    h = np.zeros((params.L, params.L))
    for a, b, amp in hopping_bonds(params.L, params.J, params.Jp):
        h[a, b] = h[b, a] = amp
    return h


def cl_state(L: int, cell: int) -> np.ndarray:
    """Compact localized single-particle state of cell ``cell`` (1-based).

    Amplitudes (1/2, -1/sqrt(2), 1/2) on chain sites (2c, 2c+1, 2c+2): the
    inner A site carries the node and its two B neighbours the wings.  With
    J = sqrt(2) Jp the leakage onto the outer A sites cancels.
    """
    if L < 4 or L % 2:
        raise InvalidArgument(f"L must be even and >= 4, got {L}")
    if not 1 <= cell <= L // 2 - 1:
        raise InvalidArgument(f"cell must be in [1, {L // 2 - 1}], got {cell}")
    v = np.zeros(L)
    centre = 2 * cell  # 0-based index of site 2c+1
    v[centre - 1] = 0.5
    v[centre] = -np.sqrt(0.5)
    v[centre + 1] = 0.5
    return v


def ph_commutator_norm(H: SparseOperator, basis: SectorBasis) -> float:
    """max |(P H P - H)_{ij}| for the complement permutation P."""
    perm = complement_permutation(basis)
    m = H.csr
    diff = m[perm][:, perm] - m
    return float(np.abs(diff.data).max()) if diff.nnz else 0.0


def project_to_ph_sector(
    H: SparseOperator, sector: PHSectorBasis, tol: float = 1e-10
) -> SparseOperator:
    violation = ph_commutator_norm(H, sector.parent)
    if violation > tol:
        raise SymmetryViolation(
            f"Hamiltonian does not commute with the particle-hole map "
            f"(max deviation {violation:.3g}); use the symmetrized convention"
        )
    U = sector.transform
    block = (U.T @ H.csr @ U).tocoo()
    return SparseOperator.from_matrix(block, drop_tol=1e-14)
