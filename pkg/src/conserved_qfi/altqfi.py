"""The alternative Fisher information ``I = 4 Tr (d sqrt(rho))^2``.

For unitary families it is fixed by ``H_theta`` and ``rho0``.  For exponential
families ``rho = exp(G)`` it is the correlation ``<Gamma_- Gamma_+>`` with

    Gamma_pm = int_0^1 exp(+- s G^x / 2) dG ds.

``Gamma_+`` and ``Gamma_-`` are adjoints of each other, not Hermitian, so the
order inside the expectation matters only through which one is daggered.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .charop import FD_STEP, richardson
from .operators import (
    PureState,
    SpectralState,
    as_hermitian,
    commutator,
    expectation,
    psd_sqrt,
    spectral,
    variance,
)
from .structure import ConservedStructure
from .thermal import thermal_state

GAMMA_NMAX = 60
GAMMA_TAIL_TOL = 1e-12
QUAD_NODES = 32
GAP_WARN = 1e-8


@dataclass(frozen=True)
class AltQfiUnitary:
    trace_form: float
    spectral_form: float

    @property
    def value(self) -> float:
        return self.trace_form

    @property
    def mismatch(self) -> float:
        return abs(self.trace_form - self.spectral_form)


def alt_qfi_unitary(rho0: SpectralState | PureState, h_theta) -> AltQfiUnitary:
    """``8 Tr[H^2 rho0 - (H sqrt(rho0))^2]`` and its eigenbasis expansion."""
    h = as_hermitian(h_theta)
    if isinstance(rho0, PureState):
        v = 8.0 * variance(rho0, h)
        return AltQfiUnitary(v, v)
    s = psd_sqrt(rho0)
    hs = h @ s
    trace_form = 8.0 * float(np.trace(h @ h @ rho0.density - hs @ hs).real)

    sup = rho0.support
    p = rho0.probs[sup]
    q = rho0.vectors[:, sup]
    hq = q.conj().T @ h @ q
    total = 0.0
    for i in range(p.size):
        total += p[i] * variance(PureState.normalized(q[:, i]), h)
        for j in range(i + 1, p.size):
            total -= 2.0 * np.sqrt(p[i] * p[j]) * abs(hq[i, j]) ** 2
    return AltQfiUnitary(trace_form, 8.0 * float(total))


@dataclass(frozen=True)
class AltQfiOracle:
    value: float
    min_gap: float

    @property
    def near_degenerate(self) -> bool:
        return self.min_gap < GAP_WARN


def alt_qfi_direct_oracle(rho_of_theta, theta: float, step: float = FD_STEP) -> AltQfiOracle:
    """``4 Tr (d sqrt(rho))^2`` with ``d sqrt(rho)`` by central differences.

    ``min_gap`` is the smallest gap between the support eigenvalues of
    ``rho(theta)`` and zero; tiny gaps only reduce the accuracy of the
    difference quotient.
    """
    d = richardson(lambda th: psd_sqrt(rho_of_theta(th)), theta, step)
    d = 0.5 * (d + d.conj().T)
    p = np.sort(rho_of_theta(theta).probs)
    gap = float(np.diff(np.concatenate([[0.0], p])).min())
    return AltQfiOracle(4.0 * float(np.trace(d @ d).real), gap)


def unitary_family(h_of_theta, t: float, rho0: SpectralState | PureState):
    """``theta -> U(theta) rho0 U(theta)^dagger`` as a :class:`SpectralState`."""
    from .operators import evolve

    if isinstance(rho0, PureState):
        rho0 = rho0.as_spectral()

    def at(theta):
        u = evolve(h_of_theta(theta), t)
        return SpectralState(rho0.probs, u @ rho0.vectors, rho0.support_cutoff)

    return at


# ---------------------------------------------------------------------------
# Gamma operators


@dataclass(frozen=True, eq=False)
class GammaPair:
    plus: np.ndarray
    minus: np.ndarray
    n_terms: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def adjoint_defect(self) -> float:
        """``||Gamma_+^dagger - Gamma_-||``; zero for Hermitian ``G``, ``dG``."""
        return float(np.linalg.norm(self.plus.conj().T - self.minus))

    @property
    def equal(self) -> bool:
        scale = max(1.0, float(np.linalg.norm(self.plus)))
        return float(np.linalg.norm(self.plus - self.minus)) <= 1e-10 * scale


def gamma_series(g, dg, n_max: int = GAMMA_NMAX, tail_tol: float = GAMMA_TAIL_TOL) -> GammaPair:
    """``Gamma_pm = sum_n (+-1/2)^n / (n+1)! (G^x)^n dG`` (entire; always converges)."""
    g = np.asarray(g, dtype=complex)
    term = np.asarray(dg, dtype=complex)
    plus = term.copy()
    minus = term.copy()
    small_run = 0
    n = 0
    for n in range(1, n_max + 1):
        term = commutator(g, term)
        c = 0.5**n / factorial(n + 1)
        plus = plus + c * term
        minus = minus + (-1) ** n * c * term
        scale = max(np.linalg.norm(plus), np.linalg.norm(minus))
        if c * np.linalg.norm(term) <= tail_tol * scale or scale == 0.0:
            small_run += 1
            if small_run >= 2:
                break
        else:
            small_run = 0
    return GammaPair(plus, minus, n + 1)


def gamma_quadrature(g, dg, nodes: int = QUAD_NODES) -> GammaPair:
    """Gauss-Legendre evaluation of the defining ``s``-integral (Hermitian ``G``)."""
    e, q = spectral(as_hermitian(g))
    d = q.conj().T @ np.asarray(dg, dtype=complex) @ q
    diff = 0.5 * (e[:, None] - e[None, :])
    x, w = np.polynomial.legendre.leggauss(nodes)
    s = 0.5 * (x + 1.0)
    w = 0.5 * w
    kp = sum(wk * np.exp(sk * diff) for sk, wk in zip(s, w))
    km = sum(wk * np.exp(-sk * diff) for sk, wk in zip(s, w))
    back = lambda m: q @ m @ q.conj().T  # noqa: E731
    return GammaPair(back(kp * d), back(km * d), None, {"nodes": nodes})


def f_i(omega, beta):
    """``f_I = 2 Omega^-3 [beta Omega / 2 - sinh(beta Omega / 2)]``; limit ``-beta^3 / 24``."""
    omega = np.asarray(omega, dtype=float)
    beta = np.asarray(beta, dtype=float)
    x = 0.5 * beta * omega
    small = np.abs(x) < 0.5
    xs = np.where(small, x, 0.0)
    # (sinh x - x) / x^3 = sum_k x^(2k) / (2k+3)!
    ser = np.zeros_like(xs)
    for k in range(9, -1, -1):
        ser = ser * xs * xs + 1.0 / factorial(2 * k + 3)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        direct = 2.0 * (x - np.sinh(x)) / omega**3
    out = np.where(small, -0.25 * beta**3 * ser, direct)
    return out if out.ndim else float(out)


def df_i_dbeta(omega, beta):
    """``d f_I / d beta = Omega^-2 [1 - cosh(beta Omega / 2)] = -(beta^2/8) (sinh(y)/y)^2``, ``y = beta Omega / 4``."""
    omega = np.asarray(omega, dtype=float)
    beta = np.asarray(beta, dtype=float)
    y = 0.25 * beta * omega
    ratio = np.where(y == 0, 1.0, np.sinh(y) / np.where(y == 0, 1.0, y))
    out = -0.125 * beta**2 * ratio**2
    return out if out.ndim else float(out)


def gamma_thermal_closed(h, dh, beta: float, structure: ConservedStructure,
                         include_log_z: bool = True) -> GammaPair:
    """``Gamma_pm = f_I V + (f_I Omega^2 - beta) dH -+ 2 (d_beta f_I) H^x dH``.

    ``include_log_z`` adds the ``-d ln Z = beta <dH>_T`` identity part that
    ``G = -beta H - ln Z`` carries into the ``n = 0`` term.
    """
    structure.require()
    dh = as_hermitian(dh)
    w = structure.omega
    fi = f_i(w, beta)
    dfi = df_i_dbeta(w, beta)
    base = fi * structure.v + (fi * w**2 - beta) * dh
    a = commutator(h, dh)
    plus = base - 2.0 * dfi * a
    minus = base + 2.0 * dfi * a
    if include_log_z:
        shift = beta * expectation(thermal_state(h, beta), dh).real
        eye = np.eye(dh.shape[0])
        plus = plus + shift * eye
        minus = minus + shift * eye
    return GammaPair(plus, minus)


def thermal_generator(h, dh, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """``(G, dG)`` for ``G = -beta H - ln Z``; the constant ``ln Z`` is dropped from ``G``."""
    rho = thermal_state(h, beta)
    dh = as_hermitian(dh)
    dg = -beta * dh + beta * expectation(rho, dh).real * np.eye(dh.shape[0])
    return -beta * as_hermitian(h), dg


@dataclass(frozen=True)
class AltQfiThermal:
    value: float
    variants: dict

    def ratio_to(self, key) -> float:
        v = self.variants[key]
        return v / self.value if self.value else float("nan")


def correlation(rho, a, b) -> complex:
    return expectation(rho, np.asarray(a) @ np.asarray(b))


def alt_qfi_thermal(h, dh, beta: float, structure: ConservedStructure) -> AltQfiThermal:
    """``<Gamma_- Gamma_+>_T`` from the closed-form pair.

    ``variants`` also holds ``<Gamma_+ Gamma_->`` and both orders without the
    ``ln Z`` shift, keyed ``(order, include_log_z)``.
    """
    rho = thermal_state(h, beta)
    out = {}
    for lz in (True, False):
        pair = gamma_thermal_closed(h, dh, beta, structure, include_log_z=lz)
        out[("minus_plus", lz)] = float(correlation(rho, pair.minus, pair.plus).real)
        out[("plus_minus", lz)] = float(correlation(rho, pair.plus, pair.minus).real)
    return AltQfiThermal(out[("minus_plus", True)], out)
