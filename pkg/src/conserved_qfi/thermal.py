"""Gibbs states, their symmetric logarithmic derivative and thermal QFI.

For ``rho = exp(-beta H) / Z`` with a conserved ``V`` the SLD is a linear
combination of ``V``, ``dH`` and the identity:

    L = beta [r V + (r Omega^2 - 1) dH] + beta <dH>_T,
    r = r_function(beta / 2, Omega).

The half-argument and the identity shift both matter; ``reference=True`` in
:func:`sld_thermal_closed` returns the variant without them, which is what
the reference formulas evaluate, so that the two can be compared.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, factorial, pi

import numpy as np

from .charop import ConvergenceError
from .operators import SpectralState, as_hermitian, commutator, expectation, spectral
from .structure import ConservedStructure

BERNOULLI_NMAX = 200
BERNOULLI_TAIL_TOL = 1e-14
# safety margin inside the radius beta * spread < pi
BERNOULLI_SAFETY = 0.9

_TANH_SERIES = (  # (1 - tanh(x)/x) / x^2 = sum_k a_k x^(2k)
    Fraction(1, 3), Fraction(-2, 15), Fraction(17, 315), Fraction(-62, 2835),
    Fraction(1382, 155925), Fraction(-21844, 6081075),
)


@dataclass(frozen=True, eq=False)
class ThermalSpec:
    beta: float
    h: np.ndarray
    log_z: float
    state: SpectralState

    @property
    def z(self) -> float:
        return float(np.exp(self.log_z))


def thermal_spec(h, beta: float) -> ThermalSpec:
    """Gibbs state and ``ln Z``, stabilized by shifting energies by their minimum."""
    if not (beta > 0 and np.isfinite(beta)):
        raise ValueError("beta must be positive and finite")
    e, q = spectral(as_hermitian(h))
    w = np.exp(-beta * (e - e[0]))
    s = w.sum()
    return ThermalSpec(beta, h, float(-beta * e[0] + np.log(s)), SpectralState(w / s, q))


def thermal_state(h, beta: float) -> SpectralState:
    return thermal_spec(h, beta).state


def thermal_family(h_of_theta, beta: float):
    """``theta -> thermal_state(H(theta), beta)``, for the finite-difference oracles."""
    return lambda theta: thermal_state(h_of_theta(theta), beta)


# ---------------------------------------------------------------------------


def r_function(beta, omega):
    """``r = Omega^-2 [1 - tanh(beta Omega) / (beta Omega)]``, in ``[0, Omega^-2]``.

    Written as ``beta^2 g(beta Omega)`` so the ``Omega -> 0`` limit
    ``beta^2 / 3`` comes out directly.
    """
    beta = np.asarray(beta, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ValueError("omega must be non-negative")
    x = beta * omega
    small = np.abs(x) < 0.1
    xs = np.where(small, x, 0.0)
    ser = np.zeros_like(xs)
    for a in reversed(_TANH_SERIES):
        ser = ser * xs * xs + float(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (1.0 - np.tanh(x) / x) / x**2
    out = beta**2 * np.where(small, ser, direct)
    return out if out.ndim else float(out)


def sld_thermal_closed(h, dh, beta: float, structure: ConservedStructure,
                       reference: bool = False) -> np.ndarray:
    """Closed-form SLD of ``exp(-beta H(theta)) / Z(theta)``.

    With ``reference=True`` returns ``beta [r V + (r Omega^2 - 1) dH]`` using
    the full-argument ``r(beta, Omega)`` and no identity shift.  That operator
    does not solve the SLD equation; it is kept for the audit.
    """
    structure.require()
    dh = as_hermitian(dh)
    w = structure.omega
    r = r_function(beta if reference else beta / 2, w)
    L = beta * (r * structure.v + (r * w**2 - 1.0) * dh)
    if not reference:
        rho = thermal_state(h, beta)
        L = L - expectation(rho, L).real * np.eye(dh.shape[0])
    return 0.5 * (L + L.conj().T)


def sld_zero_temperature(v, omega: float, beta: float) -> np.ndarray:
    return beta / omega**2 * np.asarray(v, dtype=complex)


def sld_high_temperature(dh, beta: float) -> np.ndarray:
    return -beta * np.asarray(dh, dtype=complex)


def qfi_thermal(h, dh, beta: float, structure: ConservedStructure) -> float:
    """``Tr(rho L^2)`` with the closed-form SLD."""
    rho = thermal_state(h, beta)
    L = sld_thermal_closed(h, dh, beta, structure)
    return float(expectation(rho, L @ L).real)


def qfi_thermal_reference(h, dh, beta: float, structure: ConservedStructure) -> float:
    """Reference scalar ``beta^2 r^2 <V^2> + Omega^-2 tanh^2 <dH^2> - (beta/Omega) r tanh <{V, dH}>``."""
    structure.require()
    rho = thermal_state(h, beta)
    v = structure.v
    dh = as_hermitian(dh)
    w = structure.omega
    r = r_function(beta, w)
    th = np.tanh(beta * w) / w if w > 0 else beta
    val = (
        beta**2 * r**2 * expectation(rho, v @ v)
        + th**2 * expectation(rho, dh @ dh)
        - beta * r * th * expectation(rho, v @ dh + dh @ v)
    )
    return float(val.real)


# ---------------------------------------------------------------------------
# Bernoulli series


_BERNOULLI = [Fraction(1)]


def bernoulli(n: int) -> Fraction:
    """Bernoulli number ``B_n`` (``B_1 = -1/2``) from ``sum_k C(m+1,k) B_k = 0``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    b = _BERNOULLI
    for m in range(len(b), n + 1):
        # odd numbers beyond B_1 vanish
        b.append(Fraction(0) if m > 1 and m % 2 else
                 -sum(comb(m + 1, k) * b[k] for k in range(m) if b[k]) / (m + 1))
    return b[n]


@lru_cache(maxsize=None)
def sld_coefficient_scaled(n: int) -> float:
    """``pi^(2n+2) * 4 (4^(n+1) - 1) B_(2n+2) / (2n+2)!``, which tends to 8."""
    c = Fraction(4 * (4 ** (n + 1) - 1)) * bernoulli(2 * n + 2) / factorial(2 * n + 2)
    # pi enters as a float; the exact rational part is converted last
    return float(c * Fraction(pi) ** (2 * n + 2))


def sld_coefficient(n: int) -> float:
    return sld_coefficient_scaled(n) / pi ** (2 * n + 2)


@dataclass(frozen=True, eq=False)
class BernoulliSeries:
    value: np.ndarray
    n_terms: int
    tail_norm: float
    radius_ratio: float  # beta * spread(H) / pi; below 1 the series converges


def spectral_spread(h) -> float:
    e, _ = spectral(as_hermitian(h))
    return float(e[-1] - e[0])


def sld_bernoulli_series(h, dh, beta: float, n_max: int = BERNOULLI_NMAX,
                         tail_tol: float = BERNOULLI_TAIL_TOL) -> BernoulliSeries:
    """Sum ``L = sum_n c_n (G^x)^(2n) dG`` for ``G = -beta H - ln Z``.

    ``(G^x)^(2n) dG = (-beta)^(2n+1) (H^x)^(2n) dH``; the ``ln Z`` derivative
    only reaches the ``n = 0`` term and is applied as an identity shift
    enforcing ``Tr(rho L) = 0``.

    The generating function is ``tanh(x/2)/(x/2)`` with ``x = beta (E_i - E_j)``,
    so the series converges only for ``beta * spread(H) < pi``.  Terms are
    scaled by ``pi`` to stay finite near the radius.  Raises
    :class:`ConvergenceError` when the tail criterion is not met.
    """
    h = as_hermitian(h)
    dh = as_hermitian(dh)
    spread = spectral_spread(h)
    ratio = beta * spread / pi
    hs = (beta / pi) * h
    term = dh.astype(complex)
    total = (-beta / pi**2) * sld_coefficient_scaled(0) * term
    small_run = 0
    last = float(np.linalg.norm(total))
    n = 0
    for n in range(1, n_max + 1):
        term = commutator(hs, commutator(hs, term))
        contrib = (-beta / pi**2) * sld_coefficient_scaled(n) * term
        total = total + contrib
        last = float(np.linalg.norm(contrib))
        if not np.isfinite(last):
            break
        scale = float(np.linalg.norm(total))
        if last <= tail_tol * scale or scale == 0.0:
            small_run += 1
            if small_run >= 2:
                break
        else:
            small_run = 0
    rho = thermal_state(h, beta)
    total = total - expectation(rho, total).real * np.eye(h.shape[0])
    total = 0.5 * (total + total.conj().T)
    if small_run < 2:
        raise ConvergenceError(
            f"Bernoulli series not converged (beta*spread/pi = {ratio:.3f}, "
            f"last term norm {last:.3e})",
            total, last, n_max,
        )
    return BernoulliSeries(total, n + 1, last, ratio)


# ---------------------------------------------------------------------------
# closed-form reference quantities for the two-spin models


def sz_correlation(beta: float, v_plus: float, v_minus: float = 1.0) -> float:
    """Reference ``<s1z s2z>_T = -1 + 2 cosh(beta v+) / (cosh(beta v+) + cosh(beta v-))``.

    ``v_minus = 1`` gives the single-field two-spin model.
    """
    # cosh ratios written with exponentials of differences to avoid overflow
    a, b = beta * abs(v_plus), beta * abs(v_minus)
    m = max(a, b)
    ca = np.exp(a - m) + np.exp(-a - m)
    cb = np.exp(b - m) + np.exp(-b - m)
    return float(-1.0 + 2.0 * ca / (ca + cb))
