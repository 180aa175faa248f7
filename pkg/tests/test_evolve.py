import numpy as np
import pytest
from conftest import restrict_to_sector, sector_hamiltonian, spin_chain_hamiltonian
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.sparse.linalg import expm_multiply

from sawtooth.basis import build_sector_basis, domain_wall_state
from sawtooth.errors import (
    CapacityError,
    ConvergenceError,
    EmptyWindow,
    InvalidArgument,
    UndefinedResult,
)
from sawtooth.evolve import (
    QuenchSpec,
    SpectralData,
    TimeSeries,
    amplitudes,
    diagonal_ensemble_average,
    diagonalize,
    evolve_states,
    expectation_series,
    fock_vector,
    infinite_time_return_probability,
    krylov_evolve,
    localization_lifetime,
    microcanonical_average,
    return_probability,
    short_time_decay_rate,
    thermalization_deviation,
    time_averaged_return_probability,
    time_grid,
)
from sawtooth.hamiltonian import ModelParams, SparseOperator, build_hamiltonian, build_observable_hopping


def _setup(L, J, Jp, V=1.0, convention="plain"):
    b, H = sector_hamiltonian(L, J, Jp, V, convention)
    return b, H, diagonalize(H), fock_vector(b, domain_wall_state(L))


def test_two_site_energies():
    b = build_sector_basis(2, 1)
    spec = diagonalize(build_hamiltonian(ModelParams(2, -0.8, 0.0, 1.0), b))
    assert np.allclose(spec.energies, [-0.8, 0.8], atol=1e-15)


def test_spectral_invariants():
    _, H, spec, _ = _setup(10, -0.6, 0.35)
    assert np.all(np.diff(spec.energies) >= 0)
    assert abs(spec.energies.sum() - H.diag.sum()) <= 1e-10 * abs(H.diag.sum())
    gram = spec.vectors.T @ spec.vectors
    assert np.abs(gram - np.eye(spec.dim)).max() < 1e-12
    resid = H.to_dense() @ spec.vectors - spec.vectors * spec.energies
    assert np.abs(resid).max() <= 1e-10 * np.abs(spec.energies).max()


def test_spectrum_matches_kronecker_oracle():
    L, J, Jp, V = 8, -0.45, -0.3, 1.0
    b, _, spec, _ = _setup(L, J, Jp, V)
    dense = restrict_to_sector(spin_chain_hamiltonian(L, J, Jp, V), b)
    assert np.abs(spec.energies - np.linalg.eigvalsh(dense)).max() < 1e-12


def test_capacity_limit():
    _, H = sector_hamiltonian(8, -0.5, -0.5, 1.0)
    with pytest.raises(CapacityError):
        diagonalize(H, dense_limit=10)


def test_amplitudes():
    _, _, spec, psi = _setup(8, -0.5, 0.2)
    assert np.allclose(amplitudes(spec, spec.vectors[:, 7]), np.eye(spec.dim)[7], atol=1e-13)
    assert abs(np.sum(amplitudes(spec, psi) ** 2) - 1) < 1e-12
    rng = np.random.default_rng(3)
    v = rng.normal(size=spec.dim)
    v /= np.linalg.norm(v)
    assert abs(np.sum(amplitudes(spec, v) ** 2) - 1) < 1e-12
    with pytest.raises(InvalidArgument):
        amplitudes(spec, 2 * v)


def test_ising_limit_domain_wall_is_eigenstate():
    _, _, spec, psi = _setup(12, 0.0, 0.0)
    c = amplitudes(spec, psi)
    assert np.count_nonzero(np.abs(c) > 1e-12) == 1
    P = return_probability(spec, psi, time_grid(100.0, 101))
    assert np.allclose(P.values, 1.0, atol=1e-12)
    assert time_averaged_return_probability(spec, psi, 1000.0, 1001) == pytest.approx(1.0, abs=1e-12)


def test_return_probability_basic():
    _, _, spec, psi = _setup(10, -0.5, -0.4)
    P = return_probability(spec, psi, time_grid(50.0, 501))
    assert P.values[0] == pytest.approx(1.0, abs=1e-12)
    assert np.all((P.values >= 0) & (P.values <= 1))
    # eigenstate input
    P_eig = return_probability(spec, spec.vectors[:, 3], time_grid(50.0, 51))
    assert np.allclose(P_eig.values, 1.0, atol=1e-12)


def test_return_probability_even_in_time():
    _, _, spec, psi = _setup(10, -0.5, -0.4)
    t = np.linspace(0.1, 20, 50)
    fwd = return_probability(spec, psi, t).values
    bwd = return_probability(spec, psi, -t[::-1]).values[::-1]
    assert np.abs(fwd - bwd).max() < 1e-12


@pytest.mark.parametrize("L", [8, 12])
def test_short_time_decay_rate(L):
    J, Jp = -0.37, 0.52
    b, H, _, psi = _setup(L, J, Jp)
    dense = restrict_to_sector(spin_chain_hamiltonian(L, J, Jp, 1.0), b) if L <= 8 else H.to_dense()
    h_psi = dense @ psi
    oracle = np.sqrt(h_psi @ h_psi - (psi @ h_psi) ** 2)
    omega = short_time_decay_rate(H, psi)
    assert abs(omega - oracle) < 1e-10
    assert abs(omega - np.hypot(J, Jp)) < 1e-10


def test_short_time_decay_rate_ising():
    _, H, _, psi = _setup(10, 0.0, 0.0)
    assert short_time_decay_rate(H, psi) == 0.0


def test_quadratic_short_time_law():
    _, H, spec, psi = _setup(10, -0.6, -0.3)
    omega = short_time_decay_rate(H, psi)
    t = np.linspace(0, 0.05 / omega, 201)
    P = return_probability(spec, psi, t).values
    # least squares for 1 - P = a t^2 + b t^4
    design = np.stack([t**2, t**4], axis=1)
    (a, _), *_ = np.linalg.lstsq(design, 1 - P, rcond=None)
    assert a == pytest.approx(omega**2, rel=0.01)


def test_finite_window_average_close_to_infinite_time_value():
    _, _, spec, psi = _setup(10, -0.7, -0.45)
    finite = time_averaged_return_probability(spec, psi, 1000.0, 10001)
    oracle = float(np.sum(np.abs(spec.vectors.T @ psi) ** 4))
    assert infinite_time_return_probability(spec, psi) == pytest.approx(oracle, abs=1e-14)
    assert abs(finite - oracle) < 0.02


def test_time_average_grid_converged():
    _, _, spec, psi = _setup(12, -0.3, -0.3)
    coarse = time_averaged_return_probability(spec, psi, 1000.0, 10001)
    fine = time_averaged_return_probability(spec, psi, 1000.0, 20001)
    assert abs(coarse - fine) < 1e-3


class TestLifetime:
    def test_not_crossed(self):
        assert localization_lifetime(TimeSeries(np.arange(5.0), np.ones(5))) is None

    def test_interpolation(self):
        P = TimeSeries(np.array([0.0, 1.0, 2.0]), np.array([1.0, 0.2, 0.04]))
        assert localization_lifetime(P) == pytest.approx(1.9375, abs=1e-15)

    def test_first_crossing_wins(self):
        P = TimeSeries(np.arange(5.0), np.array([1.0, 0.0, 1.0, 0.0, 1.0]))
        assert localization_lifetime(P, threshold=0.5) == pytest.approx(0.5)


def test_time_series_validation():
    with pytest.raises(InvalidArgument):
        TimeSeries(np.array([0.0, 1.0]), np.array([1.0]))
    with pytest.raises(InvalidArgument):
        TimeSeries(np.array([0.0, 0.0]), np.array([1.0, 1.0]))
    with pytest.raises(InvalidArgument):
        QuenchSpec(initial=3, t_max=10.0, n_samples=1)
    assert len(QuenchSpec(initial=3, t_max=10.0, n_samples=11).grid()) == 11


def test_expectation_series_trivial_cases():
    b, H, spec, psi = _setup(8, -0.5, -0.5)
    ident = SparseOperator.from_matrix(np.eye(b.dim))
    t = time_grid(20.0, 41)
    assert np.allclose(expectation_series(spec, psi, ident, t).values, 1.0, atol=1e-12)
    O = build_observable_hopping(8, b)
    eig = spec.vectors[:, 11]
    const = expectation_series(spec, eig, O, t).values
    assert np.allclose(const, O.expectation(eig), atol=1e-12)
    with pytest.raises(InvalidArgument):
        expectation_series(spec, psi, build_observable_hopping(6, build_sector_basis(6, 3)), t)


def test_expectation_series_matches_direct_evolution():
    b, H, spec, psi = _setup(8, -0.5, 0.3)
    O = build_observable_hopping(8, b)
    t = np.array([0.0, 0.7, 3.1, 9.4])
    direct = [O.expectation(s) for s in evolve_states(spec, psi, t)]
    assert np.allclose(expectation_series(spec, psi, O, t).values, direct, atol=1e-12)


def test_diagonal_ensemble_trivial():
    b, H, spec, psi = _setup(8, -0.5, -0.5)
    assert diagonal_ensemble_average(spec, psi, SparseOperator.from_matrix(np.eye(b.dim))) == pytest.approx(1.0)
    O = build_observable_hopping(8, b)
    eig = spec.vectors[:, 5]
    assert diagonal_ensemble_average(spec, eig, O) == pytest.approx(O.expectation(eig), abs=1e-12)


def test_diagonal_ensemble_energy_equals_initial_energy():
    _, H, spec, psi = _setup(10, -0.5, -0.2)
    assert abs(diagonal_ensemble_average(spec, psi, H) - H.expectation(psi)) < 1e-10


def test_diagonal_ensemble_matches_long_time_average():
    b, H, spec, psi = _setup(10, -0.5, -0.5)
    O = build_observable_hopping(10, b)
    series = expectation_series(spec, psi, O, time_grid(5000.0, 50001))
    assert abs(series.values.mean() - diagonal_ensemble_average(spec, psi, O)) < 1e-2


def test_microcanonical_trivial():
    b, H, spec, psi = _setup(8, -0.5, -0.5)
    const = np.full(spec.dim, 0.25)
    assert microcanonical_average(spec, const, 0.0, 0.5).value == pytest.approx(0.25)
    width = spec.energies[-1] - spec.energies[0] + 1
    O = build_observable_hopping(8, b)
    res = microcanonical_average(spec, O, spec.energies.mean(), width)
    assert res.count == spec.dim
    assert res.value == pytest.approx(np.trace(spec.vectors.T @ O.to_dense() @ spec.vectors) / spec.dim)
    value, count = res
    assert count == spec.dim


def test_microcanonical_errors_and_flags():
    _, _, spec, _ = _setup(8, -0.5, -0.5)
    with pytest.raises(EmptyWindow):
        microcanonical_average(spec, np.zeros(spec.dim), 1e3, 0.1)
    with pytest.raises(InvalidArgument):
        microcanonical_average(spec, np.zeros(spec.dim), 0.0, 0.0)
    small = microcanonical_average(spec, np.zeros(spec.dim), spec.energies[0], 1e-3)
    assert small.low_statistics


def test_microcanonical_window_population_L14():
    b, H, spec, psi = _setup(14, -0.5, -0.5)
    e_ini = H.expectation(psi)
    oracle = int(np.sum(np.abs(np.linalg.eigvalsh(H.to_dense()) - e_ini) < 1.5))
    res = microcanonical_average(spec, build_observable_hopping(14, b), e_ini, 1.5)
    assert res.count == oracle >= 100
    assert not res.low_statistics


def test_thermalization_deviation():
    assert thermalization_deviation(0.4, 0.4) == 0.0
    assert thermalization_deviation(3.0, 1.0) == 0.5
    with pytest.raises(UndefinedResult):
        thermalization_deviation(1.0, -1.0)


class TestKrylov:
    def test_zero_step(self):
        _, H, _, psi = _setup(8, -0.5, -0.5)
        assert np.array_equal(krylov_evolve(H, psi, 0.0), psi)

    def test_eigenstate_only_gains_a_phase(self):
        _, H, spec, _ = _setup(8, -0.5, -0.5)
        v = spec.vectors[:, 9]
        out = krylov_evolve(H, v, 3.7)
        assert abs(abs(np.vdot(v, out)) - 1) < 1e-12

    def test_matches_spectral_propagation(self):
        _, H, spec, psi = _setup(12, -0.5, -0.5)
        out = krylov_evolve(H, psi, 10.0)
        exact = evolve_states(spec, psi, [10.0])[0]
        assert np.abs(out - exact).max() < 1e-8
        assert abs(abs(np.vdot(psi, out)) ** 2 - abs(np.vdot(psi, exact)) ** 2) < 1e-8
        assert abs(np.linalg.norm(out) - 1) < 1e-12

    def test_matches_scipy_expm_multiply(self):
        # independent oracle that never diagonalizes
        _, H, _, psi = _setup(14, -0.6, 0.3)
        out = krylov_evolve(H, psi, 4.0)
        ref = expm_multiply(-4.0j * H.csr, psi.astype(complex))
        assert np.abs(out - ref).max() < 1e-8

    def test_time_reversal(self):
        _, H, _, psi = _setup(10, -0.8, 0.4)
        there = krylov_evolve(H, psi, 6.0)
        back = krylov_evolve(H, there, -6.0)
        assert np.abs(back - psi).max() < 1e-9

    def test_non_convergence(self):
        _, H, _, psi = _setup(10, -0.8, 0.4)
        with pytest.raises(ConvergenceError):
            krylov_evolve(H, psi, 100.0, subspace_dim=4, max_substeps=2)

    def test_rejects_unnormalized(self):
        _, H, _, psi = _setup(8, -0.5, -0.5)
        with pytest.raises(InvalidArgument):
            krylov_evolve(H, 2 * psi, 1.0)


@settings(max_examples=10, deadline=None)
@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.integers(0, 2**31))
def test_unitarity_and_energy_conservation(J, Jp, seed):
    b = build_sector_basis(8, 4)
    H = build_hamiltonian(ModelParams(8, J, Jp, 1.0), b)
    spec = diagonalize(H)
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=b.dim)
    psi /= np.linalg.norm(psi)
    e0 = H.expectation(psi)
    t = np.linspace(0, 30, 16)
    states = evolve_states(spec, psi, t)
    assert np.abs(np.linalg.norm(states, axis=1) - 1).max() < 1e-12
    energies = [H.expectation(s) for s in states]
    assert np.abs(np.array(energies) - e0).max() <= 1e-10 * max(1.0, abs(e0))
    k = psi.astype(complex)
    for dt in np.diff(t)[:4]:
        k = krylov_evolve(H, k, dt)
        assert abs(np.linalg.norm(k) - 1) < 1e-12
        assert abs(H.expectation(k) - e0) <= 1e-10 * max(1.0, abs(e0))


def test_spectral_data_dim():
    assert SpectralData(np.zeros(3), np.eye(3)).dim == 3
