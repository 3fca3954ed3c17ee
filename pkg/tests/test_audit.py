import numpy as np
import pytest

from conserved_qfi.audit import AUDITS, AuditEntry, AuditPoint, run_audit


@pytest.fixture(scope="module")
def report():
    return {e.formula: e for e in run_audit()}


def test_every_entry_has_full_grid(report):
    assert set(report) == set(AUDITS)
    for e in report.values():
        assert len(e.points) == 10
        assert np.all(np.isfinite(e.ratios))


@pytest.mark.parametrize("name", ["h1_fmax", "h1_prefactor_16_3", "h2_offdiag", "optomech_vacuum_curve"])
def test_stable_factor_four(name, report):
    assert report[name].matches_expected
    assert report[name].mean_ratio == pytest.approx(4.0, rel=1e-6)


def test_cavity_length_maximum_ratio_eight(report):
    e = report["optomech_fmax_l"]
    assert e.stable and not e.matches_expected
    assert e.mean_ratio == pytest.approx(8.0, rel=1e-6)


def test_mass_maximum_scales_wrongly(report):
    e = report["optomech_fmax_m"]
    assert not e.stable
    # ratio grows like 8 wb^2: the stated form carries two extra powers of wb
    wb = np.array([p.coords["wb"] for p in e.points])
    np.testing.assert_allclose(e.ratios / wb**2, 8.0, rtol=1e-6)


def test_unstable_entries(report):
    assert not report["h3_fmax"].stable
    assert not report["h1_thermal"].stable


def test_entry_helpers():
    e = AuditEntry("x", "demo", [AuditPoint({}, 1.0, 2.0), AuditPoint({}, 2.0, 4.0)], expected=2.0)
    assert e.stable and e.matches_expected and e.spread == 0.0
    assert AuditPoint({}, 0.0, 1.0).ratio == float("inf")
    assert AuditEntry("y", "demo", [AuditPoint({}, 0.0, 1.0)]).spread == float("inf")
