import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from conserved_qfi.models import h1_bundle, h2_bundle, h3_bundle, optomech_bundle
from conserved_qfi.operators import commutator, random_hermitian, random_unitary
from conserved_qfi.structure import (
    CommutingParameterError, StructureError, build_v, estimate_omega_sq, restrict, verify,
)
from conftest import su2_pair

coord = st.floats(-2.0, 2.0)
vec3 = st.tuples(coord, coord, coord)


@given(a=vec3, c=vec3, two_j=st.integers(1, 4), seed=st.integers(0, 2**16))
def test_su2_pairs_pass(a, c, two_j, seed):
    a, c = np.array(a), np.array(c)
    assume(np.linalg.norm(np.cross(a, c)) > 1e-2)
    u = random_unitary(two_j + 1, np.random.default_rng(seed))
    h, dh = su2_pair(a, c, two_j, u)
    s = verify(h, dh)
    assert s.passed
    assert s.omega_sq == pytest.approx(a @ a, rel=1e-10)
    # V = -(a.c) a.J commutes with H
    np.testing.assert_allclose(s.v, -(a @ c) * h, atol=1e-9)


@pytest.mark.parametrize("a, c", [
    ((0.0, 1.0, 0.0), (0.0, 1e-9, 1.0)),
    ((0.5, 1e-5, 0.0), (0.0, 1e-5, 0.5)),
])
def test_nearly_vanishing_v_passes(a, c):
    # V = -(a.c) H is far below the terms it cancels out of
    h, dh = su2_pair(np.array(a), np.array(c), 1, random_unitary(2, np.random.default_rng(0)))
    s = verify(h, dh)
    assert s.passed
    assert np.linalg.norm(s.v) < 1e-8


@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(2, 6))
def test_omega_sq_estimate_non_negative(seed, dim):
    rng = np.random.default_rng(seed)
    h, dh = random_hermitian(dim, rng), random_hermitian(dim, rng)
    assert estimate_omega_sq(h, dh) >= 0.0


@given(seed=st.integers(0, 2**32 - 1))
def test_build_v_conserved_iff_residual_small(seed):
    rng = np.random.default_rng(seed)
    h, dh = random_hermitian(4, rng), random_hermitian(4, rng)
    s = verify(h, dh)
    lhs = np.linalg.norm(commutator(s.v, h)) / (np.linalg.norm(s.v) * np.linalg.norm(h))
    assert s.conservation_residual == pytest.approx(lhs, rel=1e-12)


def test_random_pair_fails_without_raising(rng):
    s = verify(random_hermitian(5, rng), random_hermitian(5, rng))
    assert not s.passed
    assert max(s.conservation_residual, s.eigenop_residual) > 1e-3
    with pytest.raises(StructureError) as err:
        s.require()
    assert err.value.residual > 1e-3


def test_commuting_pair():
    h = np.diag([1.0, 2.0, 5.0]).astype(complex)
    s = verify(h, 0.3 * h)
    assert s.commuting and s.passed
    assert np.all(s.v == 0)
    with pytest.raises(CommutingParameterError):
        estimate_omega_sq(h, h)


def test_explicit_omega_sq_wrong_value_fails():
    h, dh = su2_pair([0.0, 0.0, 1.0], [1.0, 0.0, 0.0], 1)
    assert verify(h, dh, 1.0).passed
    assert not verify(h, dh, 1.3).passed


def test_restrict_selects_block():
    a = np.arange(16.0).reshape(4, 4)
    np.testing.assert_array_equal(restrict(a, [1, 3]), [[5, 7], [13, 15]])
    assert restrict(a, None) is a


@pytest.mark.parametrize("bundle, which", [
    (h1_bundle(B=0.7), "B"),
    (h2_bundle(), "Bp"),
    (h2_bundle(), "Bm"),
    (h3_bundle(chi=0.8, B=1.3), "B"),
    (optomech_bundle(), "m"),
    (optomech_bundle(param="l"), "l"),
    (optomech_bundle(full=True), "m"),
])
def test_models_estimated_matches_analytic(bundle, which):
    est = bundle.structure(which)
    ana = bundle.structure(which, analytic=True)
    assert est.passed and ana.passed
    assert est.omega_sq == pytest.approx(bundle.analytic_omega_sq(which), rel=1e-9)
    np.testing.assert_allclose(restrict(est.v, bundle.keep), restrict(ana.v, bundle.keep), atol=1e-9)


def test_optomech_v_scalar_only_on_kept_levels():
    m = optomech_bundle()
    s = m.structure()
    c = s.v_scalar(m.keep)
    assert c == pytest.approx(m.params["wb"] * m.g() * m.g_prime(), rel=1e-9)
    # the top levels feel the truncation
    assert s.v_scalar(None) is None


def test_optomech_full_fails_without_keep():
    m = optomech_bundle()
    assert not verify(m.h(), m.dh()).passed


def test_build_v_hermitian(rng):
    h, dh = random_hermitian(4, rng), random_hermitian(4, rng)
    v = build_v(h, dh, 1.7)
    np.testing.assert_allclose(v, v.conj().T, atol=0)
