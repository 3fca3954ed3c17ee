"""Quantum Fisher information under unitary parametrization, and its oracles.

Analytic routes take the characteristic operator ``H_theta``.  The oracles
never see ``H_theta``: they differentiate the evolved state numerically and
solve the SLD equation directly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import null_space

from .charop import FD_STEP, richardson
from .operators import (
    PureState,
    SpectralState,
    State,
    as_hermitian,
    commutator,
    covariance,
    evolve,
    expectation,
    variance,
)

PSD_TOL = -1e-9
QFI_CLAMP = -1e-10


@dataclass(frozen=True, eq=False)
class QfimMatrix:
    labels: tuple
    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape != (len(self.labels),) * 2:
            raise ValueError("entries shape does not match labels")
        e = 0.5 * (e + e.T)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.entries).min())

    @property
    def is_psd(self) -> bool:
        return self.min_eigenvalue >= PSD_TOL

    def __getitem__(self, key):
        i, j = (self.labels.index(k) if not isinstance(k, int) else k for k in key)
        return float(self.entries[i, j])


def _clamp(value: float) -> float:
    if value < QFI_CLAMP:
        return float(value)  # reported, not hidden
    return max(float(value), 0.0)


def _labels(n, labels):
    return tuple(labels) if labels is not None else tuple(f"theta{i}" for i in range(n))


# ---------------------------------------------------------------------------
# analytic routes


def qfi_pure(state: PureState, h_theta) -> float:
    """``4 Var(H_theta)``."""
    return 4.0 * variance(state, h_theta)


def qfim_pure(state: PureState, h_list: Sequence, labels=None) -> QfimMatrix:
    """``F_mn = 4 cov(H_m, H_n)``."""
    n = len(h_list)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            out[i, j] = out[j, i] = 4.0 * covariance(state, h_list[i], h_list[j])
    return QfimMatrix(_labels(n, labels), out)


def _support_frame(rho0: SpectralState, h_list):
    sup = rho0.support
    if sup.size == 0:
        raise ValueError("state has empty support")
    p = rho0.probs[sup]
    q = rho0.vectors[:, sup]
    return p, q, [q.conj().T @ as_hermitian(h) @ q for h in h_list], [as_hermitian(h) for h in h_list]


def qfim_mixed(rho0: SpectralState | PureState, h_list: Sequence, labels=None) -> QfimMatrix:
    """Mixed-state QFIM from the spectral decomposition of ``rho0``.

    ``F_mn = sum_i 4 p_i cov_i(H_m, H_n)
             - sum_{i != j} 8 p_i p_j / (p_i + p_j) Re[(H_m)_ij (H_n)_ji]``
    with both indices restricted to the support.
    """
    if isinstance(rho0, PureState):
        return qfim_pure(rho0, h_list, labels)
    p, q, hs, full = _support_frame(rho0, h_list)
    n = len(h_list)
    w = 8.0 * np.outer(p, p) / (p[:, None] + p[None, :])
    np.fill_diagonal(w, 0.0)
    out = np.empty((n, n))
    for a in range(n):
        for b in range(a, n):
            first = 0.0
            for k in range(p.size):
                psi = PureState.normalized(q[:, k])
                first += 4.0 * p[k] * covariance(psi, full[a], full[b])
            cross = np.sum(w * (hs[a] * hs[b].T).real)
            out[a, b] = out[b, a] = first - cross
    return QfimMatrix(_labels(n, labels), out)


def qfi_mixed(rho0: SpectralState | PureState, h_theta) -> float:
    return _clamp(qfim_mixed(rho0, [h_theta]).entries[0, 0])


def variance_sum(rho0: SpectralState, h_theta) -> float:
    """``sum_i 4 p_i Var_i(H)``, an upper bound on :func:`qfi_mixed`."""
    p, q, _, full = _support_frame(rho0, [h_theta])
    return float(sum(4.0 * p[k] * variance(PureState.normalized(q[:, k]), full[0])
                     for k in range(p.size)))


# ---------------------------------------------------------------------------
# oracles


def _full_basis(rho: SpectralState) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues and a complete orthonormal eigenbasis (kernel appended)."""
    q = rho.vectors
    p = rho.probs
    if q.shape[1] < q.shape[0]:
        ker = null_space(q.conj().T)
        q = np.hstack([q, ker])
        p = np.concatenate([p, np.zeros(ker.shape[1])])
    return p, q


def sld_oracle(rho: SpectralState, drho) -> tuple[np.ndarray, float]:
    """Solve ``d rho = (rho L + L rho)/2`` in the eigenbasis of ``rho``.

    Pairs with ``p_i + p_j`` at or below the support cutoff get ``L_ij = 0``.
    Returns ``(L, Tr(rho L^2))``.
    """
    if isinstance(rho, PureState):
        rho = rho.as_spectral()
    drho = as_hermitian(drho, tol=1e-6)
    p, q = _full_basis(rho)
    d = q.conj().T @ drho @ q
    den = p[:, None] + p[None, :]
    mask = den > rho.support_cutoff
    lq = np.where(mask, 2.0 * d / np.where(mask, den, 1.0), 0.0)
    L = q @ lq @ q.conj().T
    L = 0.5 * (L + L.conj().T)
    f = float(np.sum(p * np.einsum("ij,ji->i", lq, lq).real))
    return L, f


def _sld_list(rho: SpectralState, drhos):
    return [sld_oracle(rho, d)[0] for d in drhos]


def _qfim_from_slds(rho: SpectralState, slds, labels) -> QfimMatrix:
    rho_m = rho.density
    n = len(slds)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            val = 0.5 * np.trace(rho_m @ (slds[i] @ slds[j] + slds[j] @ slds[i])).real
            out[i, j] = out[j, i] = val
    return QfimMatrix(_labels(n, labels), out)


def _evolved(state: State, u) -> State:
    if isinstance(state, PureState):
        return PureState.normalized(u @ state.amplitudes)
    return SpectralState(state.probs, u @ state.vectors, state.support_cutoff)


def qfim_fd_oracle(h_of_params: Callable[[np.ndarray], np.ndarray], params, t: float,
                   state: State, step: float = FD_STEP, labels=None) -> QfimMatrix:
    """QFIM of ``U(params) state U(params)^dagger`` from numerical derivatives.

    Pure states use ``F_mn = 4 Re[<d_m psi|d_n psi> - <d_m psi|psi><psi|d_n psi>]``;
    mixed states solve for each SLD with :func:`sld_oracle`.
    """
    params = np.asarray(params, dtype=float)
    n = params.size

    def shifted(k):
        def at(x):
            p = params.copy()
            p[k] = x
            return evolve(h_of_params(p), t)
        return at

    us = [richardson(shifted(k), params[k], step) for k in range(n)]
    u0 = evolve(h_of_params(params), t)
    if isinstance(state, PureState):
        psi = u0 @ state.amplitudes
        dpsi = [du @ state.amplitudes for du in us]
        out = np.empty((n, n))
        for i in range(n):
            for j in range(i, n):
                val = np.vdot(dpsi[i], dpsi[j]) - np.vdot(dpsi[i], psi) * np.vdot(psi, dpsi[j])
                out[i, j] = out[j, i] = 4.0 * val.real
        return QfimMatrix(_labels(n, labels), out)
    rho = _evolved(state, u0)
    r0 = state.density
    drhos = [du @ r0 @ u0.conj().T + u0 @ r0 @ du.conj().T for du in us]
    return _qfim_from_slds(rho, _sld_list(rho, drhos), labels)


def qfi_fd_oracle(h_of_theta: Callable[[float], np.ndarray], theta: float, t: float,
                  state: State, step: float = FD_STEP) -> float:
    """Single-parameter form of :func:`qfim_fd_oracle`."""
    m = qfim_fd_oracle(lambda p: h_of_theta(p[0]), [theta], t, state, step)
    return _clamp(m.entries[0, 0])


def family_sld_oracle(rho_of_theta: Callable[[float], SpectralState], theta: float,
                      step: float = FD_STEP) -> tuple[np.ndarray, float, np.ndarray]:
    """SLD and QFI of an arbitrary state family; also returns the numerical ``d rho``."""
    drho = richardson(lambda th: rho_of_theta(th).density, theta, step)
    drho = 0.5 * (drho + drho.conj().T)
    L, f = sld_oracle(rho_of_theta(theta), drho)
    return L, f, drho


def sld_residual(rho, L, drho) -> float:
    """``||d rho - (rho L + L rho)/2||_F``."""
    r = rho.density if hasattr(rho, "density") else np.asarray(rho)
    return float(np.linalg.norm(drho - 0.5 * (r @ L + L @ r)))


# ---------------------------------------------------------------------------
# bounds


def saturation_check(state: State, h_plus, h_minus) -> float:
    """``|<[H_+, H_-]>|``; zero is the joint-saturation condition for pure states."""
    return abs(expectation(state, commutator(h_plus, h_minus)))


def crb_bound(F: float, nu: int = 1) -> float:
    """Single-parameter bound ``1 / (nu F)``.

    ``F <= 0`` means the parameter is not estimable through the bound, which
    is reported as ``inf``.
    """
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    if not F > 0:
        return math.inf
    return 1.0 / (nu * F)


def crb_multi(qfim: QfimMatrix, nu: int = 1) -> np.ndarray:
    """Diagonal of ``(nu F)^-1``; ``inf`` entries if ``F`` is singular."""
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    e = qfim.entries
    if abs(np.linalg.det(e)) <= 1e-14 * max(1.0, np.abs(e).max()) ** e.shape[0]:
        return np.full(e.shape[0], math.inf)
    return np.diag(np.linalg.inv(e)) / nu
