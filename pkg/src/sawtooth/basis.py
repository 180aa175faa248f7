"""Hardcore-boson Fock space at fixed particle number.

A Fock state is a plain ``int``: bit ``i-1`` holds the occupation of chain
site ``i`` (sites 1..L).  Odd sites belong to the A (base) leg, even sites to
the B (apex) leg.  Patterns are written as '1'/'0' strings with site 1 first,
so the integer 0b0011 on four sites is the pattern ``"1100"``.

States inside a sector are ordered by integer value.  For words of fixed
popcount this is colexicographic order, and the rank of a word with set bits
at positions p_0 < p_1 < ... is sum_k C(p_k, k+1).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgument

MAX_SITES = 24

FockState = int


def _check_length(L: int, max_sites: int = MAX_SITES) -> None:
    if L < 2 or L % 2 or L > max_sites:
        raise InvalidArgument(f"L must be even with 2 <= L <= {max_sites}, got {L}")


def to_pattern(state: FockState, L: int) -> str:
    return "".join("1" if (state >> i) & 1 else "0" for i in range(L))


def from_pattern(pattern: str) -> FockState:
    if not pattern or set(pattern) - {"0", "1"}:
        raise InvalidArgument(f"occupation pattern must be a 0/1 string, got {pattern!r}")
    return sum(1 << i for i, ch in enumerate(pattern) if ch == "1")


def popcount(state: FockState) -> int:
    return bin(state).count("1")


def _binomial_table(L: int) -> np.ndarray:
    # table[p, k] = C(p, k), with C(p, k) = 0 for k > p
    table = np.zeros((L + 1, L + 2), dtype=np.int64)
    for p in range(L + 1):
        for k in range(p + 1):
            table[p, k] = comb(p, k)
    return table


@dataclass(frozen=True)
class SectorBasis:
    """All L-site Fock states with N particles, ascending by integer value."""

    L: int
    N: int
    states: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return len(self.states)

    @cached_property
    def _binom(self) -> np.ndarray:
        return _binomial_table(self.L)

    def rank(self, state: FockState) -> int:
        """Index of ``state`` in ``states``, computed combinatorially."""
        state = int(state)
        if state < 0 or state >> self.L:
            raise InvalidArgument(f"state {state} does not fit in {self.L} bits")
        if popcount(state) != self.N:
            raise InvalidArgument(
                f"state {to_pattern(state, self.L)} has {popcount(state)} particles, "
                f"sector has {self.N}"
            )
        idx, k = 0, 0
        for p in range(self.L):
            if (state >> p) & 1:
                k += 1
                idx += int(self._binom[p, k])
        return idx

    def rank_array(self, states: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`rank`; inputs are assumed to lie in the sector."""
        states = np.asarray(states, dtype=np.int64)
        idx = np.zeros(states.shape, dtype=np.int64)
        k = np.zeros(states.shape, dtype=np.int64)
        for p in range(self.L):
            bit = (states >> p) & 1
            k += bit
            idx += bit * self._binom[p, k]
        return idx

    def unrank(self, index: int) -> FockState:
        if not 0 <= index < self.dim:
            raise InvalidArgument(f"index {index} outside [0, {self.dim})")
        state, rest = 0, int(index)
        for k in range(self.N, 0, -1):
            # largest p with C(p, k) <= rest
            p = k - 1
            while p + 1 < self.L and self._binom[p + 1, k] <= rest:
                p += 1
            rest -= int(self._binom[p, k])
            state |= 1 << p
        return state

    def occupations(self) -> np.ndarray:
        """(dim, L) 0/1 array; column ``i`` is site ``i+1``."""
        return ((self.states[:, None] >> np.arange(self.L)) & 1).astype(np.int8)


def _enumerate(L: int, N: int) -> np.ndarray:
    dim = comb(L, N)
    states = np.empty(dim, dtype=np.int64)
    if dim == 0:
        return states
    x = (1 << N) - 1
    states[0] = x
    # Gosper's hack: next larger word with the same popcount
    for i in range(1, dim):
        u = x & -x
        v = x + u
        x = v | (((v ^ x) // u) >> 2)
        states[i] = x
    return states


def build_sector_basis(L: int, N: int, max_sites: int = MAX_SITES) -> SectorBasis:
    _check_length(L, max_sites)
    if not 0 <= N <= L:
        raise InvalidArgument(f"particle number {N} outside [0, {L}]")
    return SectorBasis(L, N, _enumerate(L, N))


def domain_wall_state(L: int) -> FockState:
    """Sites 1..L/2 occupied, the rest empty."""
    if L < 2 or L % 2:
        raise InvalidArgument(f"domain wall needs even L, got {L}")
    return (1 << (L // 2)) - 1


def block_state(L: int, block_len: int) -> FockState:
    """Alternating runs of ``block_len`` occupied and empty sites, starting occupied.

    The final run is truncated at the chain end; the result must sit at half
    filling.
    """
    if L < 2 or L % 2:
        raise InvalidArgument(f"block state needs even L, got {L}")
    if block_len < 1:
        raise InvalidArgument("block_len must be positive")
    state = 0
    for i in range(L):
        if (i // block_len) % 2 == 0:
            state |= 1 << i
    if popcount(state) != L // 2:
        raise InvalidArgument(
            f"block_len={block_len} on L={L} gives {popcount(state)} particles, not {L // 2}"
        )
    return state


def ph_complement(state: FockState, L: int) -> FockState:
    return ~int(state) & ((1 << L) - 1)


@dataclass(frozen=True)
class PHSectorBasis:
    """Particle-hole symmetric/antisymmetric combinations (|n> + parity |n̄>)/sqrt(2)."""

    parent: SectorBasis
    pairs: np.ndarray = field(repr=False)  # (dim, 2) states, pairs[:, 0] < pairs[:, 1]
    parity: int

    @property
    def dim(self) -> int:
        return len(self.pairs)

    @cached_property
    def transform(self) -> sp.csr_matrix:
        """Isometry from this sector into the parent Fock basis, shape (parent.dim, dim)."""
        lo = self.parent.rank_array(self.pairs[:, 0])
        hi = self.parent.rank_array(self.pairs[:, 1])
        cols = np.arange(self.dim)
        amp = 1.0 / np.sqrt(2.0)
        data = np.concatenate([np.full(self.dim, amp), np.full(self.dim, self.parity * amp)])
        return sp.csr_matrix(
            (data, (np.concatenate([lo, hi]), np.concatenate([cols, cols]))),
            shape=(self.parent.dim, self.dim),
        )


def complement_permutation(basis: SectorBasis) -> np.ndarray:
    """perm[k] = rank of the complement of states[k] (half filling only)."""
    if 2 * basis.N != basis.L:
        raise InvalidArgument("particle-hole map needs half filling")
    mask = (1 << basis.L) - 1
    return basis.rank_array(~basis.states & mask)


def build_ph_sector(basis: SectorBasis, parity: int) -> PHSectorBasis:
    if parity not in (1, -1):
        raise InvalidArgument(f"parity must be +1 or -1, got {parity}")
    if 2 * basis.N != basis.L:
        raise InvalidArgument(
            f"particle-hole sectors need N = L/2, got N={basis.N}, L={basis.L}"
        )
    mask = (1 << basis.L) - 1
    comp = ~basis.states & mask
    keep = basis.states < comp
    pairs = np.stack([basis.states[keep], comp[keep]], axis=1)
    return PHSectorBasis(basis, pairs, parity)
