import functools

import numpy as np
import pytest

from sawtooth.basis import build_sector_basis
from sawtooth.hamiltonian import ModelParams, build_hamiltonian

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record():
    """Log one acceptance line; printed in the terminal summary."""

    def _record(criterion: str, passed: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((criterion, bool(passed), detail))
        return bool(passed)

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {criterion}  {detail}")


def spin_chain_hamiltonian(L, J, Jp, V, symmetrized=False):
    """Full 2^L matrix from Kronecker products of site operators.

    Independent of the sector code: it never touches bit ranking.  Site i
    (1-based) is tensor factor i-1 counted from the least significant bit.
    """
    lower = np.array([[0.0, 1.0], [0.0, 0.0]])  # |0><1|, annihilates a boson
    number = np.diag([0.0, 1.0])
    eye = np.eye(2)

    def site_op(op, i):
        out = np.ones((1, 1))
        for k in reversed(range(L)):
            out = np.kron(out, op if k == i else eye)
        return out

    c = [site_op(lower, i) for i in range(L)]
    n = [site_op(number, i) for i in range(L)]
    H = np.zeros((2**L, 2**L))
    for i in range(L - 1):
        H += J * (c[i].T @ c[i + 1] + c[i + 1].T @ c[i])
        ni, nj = (n[i] - 0.5 * np.eye(2**L), n[i + 1] - 0.5 * np.eye(2**L)) if symmetrized else (n[i], n[i + 1])
        H += V * ni @ nj
    for i in range(0, L - 2, 2):
        H += Jp * (c[i].T @ c[i + 2] + c[i + 2].T @ c[i])
    return H


def restrict_to_sector(full, basis):
    idx = basis.states
    return full[np.ix_(idx, idx)]


@functools.lru_cache(maxsize=None)
def sector_hamiltonian(L, J, Jp, V, convention="plain"):
    basis = build_sector_basis(L, L // 2)
    return basis, build_hamiltonian(ModelParams(L, J, Jp, V), basis, convention)
