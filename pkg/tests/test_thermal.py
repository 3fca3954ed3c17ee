from fractions import Fraction
from math import pi

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conserved_qfi.charop import ConvergenceError
from conserved_qfi.models import h1_bundle, h2_bundle
from conserved_qfi.operators import expectation
from conserved_qfi.qfi import family_sld_oracle, sld_residual
from conserved_qfi.thermal import (
    bernoulli, qfi_thermal, qfi_thermal_reference, r_function, sld_bernoulli_series,
    sld_coefficient, sld_high_temperature, sld_thermal_closed, sld_zero_temperature,
    spectral_spread, sz_correlation, thermal_family, thermal_spec, thermal_state,
)
from conftest import rel_fro, su2_pair

# [DERIVED] SLD oracle on the thermal family
H1_THERMAL_B05_BETA1 = 1.09182606078941


def _mod_identity(a):
    d = a.shape[0]
    return a - np.trace(a) / d * np.eye(d)


def test_bernoulli_numbers():
    assert [bernoulli(n) for n in range(5)] == [1, Fraction(-1, 2), Fraction(1, 6), 0, Fraction(-1, 30)]
    assert bernoulli(12) == Fraction(-691, 2730)
    assert bernoulli(31) == 0
    with pytest.raises(ValueError):
        bernoulli(-1)


def test_sld_coefficients():
    assert sld_coefficient(0) == pytest.approx(1.0, rel=1e-15)
    assert sld_coefficient(1) == pytest.approx(-1 / 12, rel=1e-15)
    assert sld_coefficient(2) == pytest.approx(1 / 120, rel=1e-14)


def test_r_function_limits():
    assert r_function(2.0, 0.0) == pytest.approx(4 / 3, rel=1e-15)
    w = 3.0
    assert r_function(50.0, w) == pytest.approx((1 - 1 / (50 * w)) / w**2, rel=1e-12)
    # both branches agree at the switch point
    lo, hi = r_function(1.0, 0.1 - 1e-10), r_function(1.0, 0.1 + 1e-10)
    assert abs(lo - hi) < 1e-10
    with pytest.raises(ValueError):
        r_function(1.0, -1.0)


@given(beta=st.floats(0.01, 20.0), w=st.floats(0.0, 10.0))
def test_r_function_range(beta, w):
    r = r_function(beta, w)
    assert r >= 0.0
    assert r * w * w <= 1 + 1e-12


def test_thermal_spec_large_beta_stable():
    h = np.diag([0.0, 1000.0]).astype(complex)
    s = thermal_spec(h, 10.0)
    assert np.isfinite(s.log_z)
    np.testing.assert_allclose(s.state.density, np.diag([1.0, 0.0]), atol=1e-300)
    with pytest.raises(ValueError):
        thermal_spec(h, 0.0)


def test_h1_thermal_frozen():
    m = h1_bundle(B=0.5)
    assert qfi_thermal(m.h(), m.dh(), 1.0, m.structure()) == pytest.approx(
        H1_THERMAL_B05_BETA1, rel=1e-8)


@pytest.mark.parametrize("bundle, which, beta", [
    (h1_bundle(B=0.5), "B", 1.0),
    (h1_bundle(B=1.7), "B", 0.2),
    (h1_bundle(B=0.3), "B", 8.0),
    (h2_bundle(), "Bp", 2.0),
    (h2_bundle(), "Bm", 0.5),
])
def test_closed_sld_solves_equation(bundle, which, beta):
    s = bundle.structure(which)
    theta = bundle.params[which]
    L_or, f_or, drho = family_sld_oracle(thermal_family(bundle.h_of(which), beta), theta)
    rho = thermal_state(bundle.h(), beta)
    L = sld_thermal_closed(bundle.h(), bundle.dh(which), beta, s)
    assert sld_residual(rho, L, drho) < 1e-7
    assert abs(expectation(rho, L)) < 1e-12
    assert qfi_thermal(bundle.h(), bundle.dh(which), beta, s) == pytest.approx(f_or, rel=1e-6)


def test_reference_sld_does_not_solve_equation():
    m = h1_bundle(B=0.5)
    _, _, drho = family_sld_oracle(thermal_family(m.h_of(), 1.0), 0.5)
    rho = thermal_state(m.h(), 1.0)
    L = sld_thermal_closed(m.h(), m.dh(), 1.0, m.structure(), reference=True)
    assert sld_residual(rho, L, drho) > 1e-2


def test_reference_scalar_differs_from_computed():
    m = h1_bundle(B=0.5)
    ref = qfi_thermal_reference(m.h(), m.dh(), 1.0, m.structure())
    assert abs(ref / H1_THERMAL_B05_BETA1 - 1) > 1e-2


def test_zero_and_high_temperature_limits():
    m = h1_bundle(B=0.5)
    s = m.structure()
    hot = sld_thermal_closed(m.h(), m.dh(), 1e-3, s)
    assert rel_fro(_mod_identity(hot), _mod_identity(sld_high_temperature(m.dh(), 1e-3))) < 1e-8
    for beta in (50.0, 200.0):
        cold = sld_thermal_closed(m.h(), m.dh(), beta, s)
        lim = sld_zero_temperature(s.v, s.omega, beta)
        err = np.linalg.norm(_mod_identity(cold - lim)) / np.linalg.norm(_mod_identity(cold))
        assert err < 4.0 / (beta * s.omega)


@given(a=st.tuples(*[st.floats(-1, 1)] * 3), c=st.tuples(*[st.floats(-1, 1)] * 3),
       beta=st.floats(0.05, 1.5))
def test_bernoulli_series_matches_closed_inside_radius(a, c, beta):
    a, c = np.array(a), np.array(c)
    if np.linalg.norm(np.cross(a, c)) < 1e-2:
        return
    h, dh = su2_pair(a, c, 2)
    spread = spectral_spread(h)
    if beta * spread >= 0.9 * pi:
        return
    from conserved_qfi.structure import verify
    ser = sld_bernoulli_series(h, dh, beta)
    assert ser.radius_ratio < 0.9
    assert rel_fro(ser.value, sld_thermal_closed(h, dh, beta, verify(h, dh))) < 1e-7


def test_bernoulli_series_diverges_outside_radius():
    m = h1_bundle(B=0.5)
    beta = 1.2 * pi / spectral_spread(m.h())
    with pytest.raises(ConvergenceError):
        sld_bernoulli_series(m.h(), m.dh(), beta)


def test_sz_correlation_limits():
    assert sz_correlation(1e-9, 2.0, 1.0) == pytest.approx(0.0, abs=1e-9)
    assert sz_correlation(1e4, 2.0, 1.0) == pytest.approx(1.0)
    assert sz_correlation(1e4, 1.0, 2.0) == pytest.approx(-1.0)


def test_sz_correlation_matches_gibbs():
    from conserved_qfi.models.spins import SZSZ
    m = h2_bundle()
    for beta in (0.3, 2.0):
        rho = thermal_state(m.h(), beta)
        assert m.reference_correlation(beta) == pytest.approx(expectation(rho, SZSZ).real, rel=1e-12)
