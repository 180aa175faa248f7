"""Second-order perturbative localized eigenstate near the Ising limit.

Around the domain-wall state the leading corrections move the particle on
the last occupied site (an A site when L = 4m + 2) one site to the right
(NN hop, amplitude ~ J/V) or two sites to the right (A-A hop, ~ Jp/V).  The
state is symmetrized under particle-hole complement.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import SectorBasis, build_sector_basis, domain_wall_state, ph_complement
from .errors import InvalidArgument
from .evolve import SpectralData
from .hamiltonian import ModelParams

DEGENERACY_GAP = 1e-10


class UnsupportedSize(InvalidArgument):
    pass


@dataclass(frozen=True)
class PerturbativeState:
    vector: np.ndarray = field(repr=False)
    c2: float
    c3: float
    basis: SectorBasis = field(repr=False)
    raw_norm: float = 1.0  # norm of the unrenormalized expansion with its 1/sqrt(2) prefactor

    @property
    def raw_vector(self) -> np.ndarray:
        return self.vector * self.raw_norm


def wall_patterns(L: int) -> tuple[int, int, int]:
    """Domain wall and the two one-particle displacements of its last particle."""
    dw = domain_wall_state(L)
    edge = L // 2 - 1  # 0-based last occupied site
    shifted_nn = dw ^ (1 << edge) ^ (1 << (edge + 1))
    shifted_nnn = dw ^ (1 << edge) ^ (1 << (edge + 2))
    return dw, shifted_nn, shifted_nnn


def build_phi_loc(params: ModelParams, basis: SectorBasis | None = None) -> PerturbativeState:
    L = params.L
    if L % 4 != 2:
        raise UnsupportedSize(f"perturbative state is defined for L = 4m+2, got L={L}")
    if params.V == 0:
        raise InvalidArgument("V must be nonzero")
    if basis is None:
        basis = build_sector_basis(L, L // 2)
    j, jp = params.J / params.V, params.Jp / params.V
    c2 = j + jp * j
    c3 = jp + j * j
    v = np.zeros(basis.dim)
    for pattern, amp in zip(wall_patterns(L), (1.0, c2, c3)):
        v[basis.rank(pattern)] += amp
        v[basis.rank(ph_complement(pattern, L))] += amp
    raw_norm = np.linalg.norm(v) / np.sqrt(2.0)
    return PerturbativeState(v / np.linalg.norm(v), c2, c3, basis, float(raw_norm))


def find_localized_eigenstate(spec: SpectralData, psi_dw: np.ndarray) -> tuple[int, float]:
    """Eigenstate with the largest |<psi_dw|psi_nu>|; near-ties go to the lower energy."""
    overlaps = np.abs(spec.vectors.T @ psi_dw)
    best = overlaps.max()
    # energies ascend, so the first near-maximal index has the lowest energy
    idx = int(np.flatnonzero(overlaps >= best - 1e-12)[0])
    return idx, float(overlaps[idx])


def degenerate_cluster(energies: np.ndarray, idx: int, gap: float = DEGENERACY_GAP) -> np.ndarray:
    """Indices chained to ``idx`` by level spacings below ``gap``."""
    lo = hi = idx
    while lo > 0 and energies[lo] - energies[lo - 1] < gap:
        lo -= 1
    while hi + 1 < len(energies) and energies[hi + 1] - energies[hi] < gap:
        hi += 1
    return np.arange(lo, hi + 1)


def fidelity(
    phi: PerturbativeState | np.ndarray,
    spec: SpectralData,
    idx: int,
    gap: float = DEGENERACY_GAP,
    raw: bool = False,
) -> float:
    """|<phi_loc|psi_idx>|, projected onto the whole degenerate eigenspace of ``idx``.

    ``raw=True`` uses the expansion exactly as written (1/sqrt(2) prefactor,
    not renormalized), so the value may exceed 1 for large couplings.
    """
    if isinstance(phi, PerturbativeState):
        vec = phi.raw_vector if raw else phi.vector
    else:
        vec = np.asarray(phi)
    cluster = degenerate_cluster(spec.energies, idx, gap)
    proj = spec.vectors[:, cluster].T @ vec
    value = float(np.linalg.norm(proj))
    return value if raw else min(value, 1.0)
