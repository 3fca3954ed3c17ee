import numpy as np
import pytest
from hypothesis import given, strategies as st

from conserved_qfi.operators import (
    PureState, SpectralError, SpectralState, adjoint_power, anticommutator, as_hermitian,
    commutator, covariance, evolve, expectation, expm_hermitian, hermiticity_defect, psd_sqrt,
    random_hermitian, random_mixed_state, random_pure_state, random_unitary, spectral, variance,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 6)


def test_as_hermitian_rejects_non_hermitian():
    a = np.array([[0, 1], [0, 0]], dtype=complex)
    assert hermiticity_defect(a) > 0.1
    with pytest.raises(ValueError):
        as_hermitian(a)


def test_as_hermitian_rejects_non_square():
    with pytest.raises(ValueError):
        as_hermitian(np.zeros((2, 3)))


def test_commutator_shape_mismatch():
    with pytest.raises(ValueError):
        commutator(np.eye(2), np.eye(3))


def test_adjoint_power_limits(rng):
    h = random_hermitian(3, rng)
    a = random_hermitian(3, rng)
    np.testing.assert_allclose(adjoint_power(h, a, 0), a)
    np.testing.assert_allclose(adjoint_power(h, a, 2), commutator(h, commutator(h, a)), atol=1e-12)
    with pytest.raises(ValueError):
        adjoint_power(h, a, 10_000)


def test_evolve_zero_time_is_identity(rng):
    h = random_hermitian(4, rng)
    np.testing.assert_allclose(evolve(h, 0.0), np.eye(4), atol=1e-14)


def test_pauli_z_evolution():
    # exp(-i sz pi/2) = -i sz
    sz = np.diag([1.0, -1.0]).astype(complex)
    np.testing.assert_allclose(evolve(sz, np.pi / 2), -1j * sz, atol=1e-14)


def test_spectral_state_validation():
    with pytest.raises(ValueError):
        SpectralState(np.array([0.5, 0.6]), np.eye(2, dtype=complex))
    with pytest.raises(ValueError):
        SpectralState(np.array([1.2, -0.2]), np.eye(2, dtype=complex))


def test_spectral_state_support_and_rank():
    s = SpectralState(np.array([1.0, 0.0, 0.0]), np.eye(3, dtype=complex))
    assert s.rank == 1
    assert list(s.support) == [0]


def test_pure_state_normalized_rejects_zero():
    with pytest.raises(ValueError):
        PureState.normalized(np.zeros(3))


def test_expectation_dimension_mismatch(rng):
    with pytest.raises(ValueError):
        expectation(random_pure_state(3, rng), np.eye(2))


def test_psd_sqrt_squares_back(rng):
    rho = random_mixed_state(4, rng)
    r = psd_sqrt(rho)
    np.testing.assert_allclose(r @ r, rho.density, atol=1e-12)


@given(seeds, dims)
def test_unitarity_of_evolution(seed, d):
    rng = np.random.default_rng(seed)
    h = random_hermitian(d, rng, scale=3.0)
    u = evolve(h, float(rng.uniform(-5, 5)))
    np.testing.assert_allclose(u.conj().T @ u, np.eye(d), atol=1e-11)


@given(seeds, dims)
def test_evolve_matches_scipy(seed, d):
    from scipy.linalg import expm

    rng = np.random.default_rng(seed)
    h = random_hermitian(d, rng)
    np.testing.assert_allclose(evolve(h, 0.7), expm(-0.7j * h), atol=1e-11)


@given(seeds, dims)
def test_spectral_reconstructs(seed, d):
    rng = np.random.default_rng(seed)
    h = random_hermitian(d, rng)
    e, v = spectral(h)
    np.testing.assert_allclose(v @ np.diag(e) @ v.conj().T, h, atol=1e-12)


@given(seeds, dims)
def test_jacobi_identity(seed, d):
    rng = np.random.default_rng(seed)
    a, b, c = (random_hermitian(d, rng) for _ in range(3))
    total = (commutator(a, commutator(b, c)) + commutator(b, commutator(c, a))
             + commutator(c, commutator(a, b)))
    assert np.abs(total).max() < 1e-11


@given(seeds, dims)
def test_anticommutator_hermitian(seed, d):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(d, rng), random_hermitian(d, rng)
    assert hermiticity_defect(anticommutator(a, b)) < 1e-12


@given(seeds, dims)
def test_mixed_state_roundtrip(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_mixed_state(d, rng)
    again = SpectralState.from_density(rho.density)
    np.testing.assert_allclose(again.density, rho.density, atol=1e-12)
    assert abs(rho.probs.sum() - 1.0) < 1e-12


@given(seeds, dims)
def test_variance_nonnegative_and_covariance_symmetric(seed, d):
    rng = np.random.default_rng(seed)
    state = random_mixed_state(d, rng)
    a, b = random_hermitian(d, rng), random_hermitian(d, rng)
    assert variance(state, a) >= -1e-12
    assert abs(covariance(state, a, b) - covariance(state, b, a)) < 1e-12


def test_random_unitary_is_unitary(rng):
    u = random_unitary(5, rng)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(5), atol=1e-12)


def test_expm_hermitian_scale(rng):
    h = random_hermitian(3, rng)
    np.testing.assert_allclose(expm_hermitian(h, -1j * 0.4), evolve(h, 0.4), atol=1e-13)


def test_spectral_error_is_linalg_error():
    assert issubclass(SpectralError, np.linalg.LinAlgError)
