import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def rel_fro(a, b) -> float:
    """Frobenius distance relative to ``1 + ||b||``."""
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / (1.0 + np.linalg.norm(b)))


def spin_matrices(two_j: int):
    """``(Jx, Jy, Jz)`` for spin ``two_j / 2`` in the ``Jz`` eigenbasis."""
    j = two_j / 2
    m = j - np.arange(two_j + 1)
    jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), 1).astype(complex)
    jx = (jp + jp.conj().T) / 2
    jy = (jp - jp.conj().T) / 2j
    return jx, jy, np.diag(m).astype(complex)


def su2_pair(a, c, two_j: int, u=None):
    """``H = a.J`` and ``dH = c.J``; the structure holds with ``Omega^2 = |a|^2``.

    ``u`` optionally rotates both into another basis.
    """
    ops = spin_matrices(two_j)
    h = sum(x * o for x, o in zip(a, ops))
    dh = sum(x * o for x, o in zip(c, ops))
    if u is not None:
        h, dh = u @ h @ u.conj().T, u @ dh @ u.conj().T
    return h, dh


# one summary line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(number: int, ok: bool, detail: str, seconds: float) -> None:
    ACCEPTANCE[number] = (ok, detail, seconds)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail, sec = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({sec:.2f} s)  {detail}")
