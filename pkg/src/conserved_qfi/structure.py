"""Detection and certification of the conserved operator ``V``.

For a pair ``(H, dH)`` the operator ``V = [(H^x)^2 - Omega^2] dH`` commutes
with ``H`` exactly when ``A = H^x dH`` is an eigenoperator of ``(H^x)^2`` with
eigenvalue ``Omega^2``.  This module estimates ``Omega^2``, builds ``V`` and
measures how well both statements hold.

Truncated bosonic operators only reproduce the infinite-dimensional algebra
away from the cutoff.  Every function here therefore accepts ``keep``, an
index array selecting the basis states on which residuals are measured.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operators import adjoint_power, as_hermitian, commutator

PASS_TOL = 1e-8
# V comes from cancelling terms of size ~v_scale, so its absolute error is
# ~eps * v_scale; below this fraction of v_scale the residual is taken
# relative to the floor instead of ||V||.
_V_FLOOR = 1e-6


class StructureError(ValueError):
    """A closed form was requested for a pair lacking the conserved structure."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class CommutingParameterError(ValueError):
    """``[H, dH] = 0``: the characteristic operator is exactly ``-t dH``."""


def restrict(a: np.ndarray, keep) -> np.ndarray:
    if keep is None:
        return a
    keep = np.asarray(keep)
    return a[np.ix_(keep, keep)]


def _norm(a, keep=None) -> float:
    return float(np.linalg.norm(restrict(a, keep)))


def estimate_omega_sq(h, dh, keep=None) -> float:
    """Hilbert-Schmidt Rayleigh quotient ``<A, (H^x)^2 A> / <A, A>``.

    Since ``H^x`` is self-adjoint under the Hilbert-Schmidt product the
    quotient equals ``||H^x A||^2 / ||A||^2`` and is never negative.
    """
    a = commutator(h, dh)
    a_k = restrict(a, keep)
    den = np.vdot(a_k, a_k).real
    if np.sqrt(den) <= 1e-12 * max(1.0, _norm(h, keep) * _norm(dh, keep)):
        raise CommutingParameterError("[H, dH] vanishes")
    num = np.vdot(a_k, restrict(adjoint_power(h, a, 2), keep))
    return float(num.real / den)


def build_v(h, dh, omega_sq: float) -> np.ndarray:
    """``V = (H^x)^2 dH - omega_sq * dH``."""
    v = adjoint_power(h, dh, 2) - omega_sq * np.asarray(dh)
    return 0.5 * (v + v.conj().T)


def structure_residuals(h, dh, omega_sq: float, v, keep=None) -> tuple[float, float]:
    """Return ``(conservation_residual, eigenop_residual)``.

    conservation: ``||[V, H]|| / (||V|| ||H||)``, zero when ``V`` vanishes;
    ``||V||`` is floored at ``_V_FLOOR`` times the size of the terms that form it.
    eigenop: ``||(H^x)^3 dH - Omega^2 H^x dH|| / max(||(H^x)^3 dH||, Omega^2 ||H^x dH||)``.
    """
    a1 = commutator(h, dh)
    a2 = commutator(h, a1)
    a3 = commutator(h, a2)
    eig_scale = max(_norm(a3, keep), omega_sq * _norm(a1, keep))
    eig = _norm(a3 - omega_sq * a1, keep) / eig_scale if eig_scale > 0 else 0.0

    v_scale = _norm(a2, keep) + abs(omega_sq) * _norm(dh, keep)
    v_norm = _norm(v, keep)
    if v_norm == 0.0:
        cons = 0.0
    else:
        cons = _norm(commutator(v, h), keep) / (max(v_norm, _V_FLOOR * v_scale) * _norm(h, keep))
    return float(cons), float(eig)


@dataclass(frozen=True, eq=False)
class ConservedStructure:
    omega_sq: float
    v: np.ndarray
    conservation_residual: float
    eigenop_residual: float
    commuting: bool = False
    tol: float = PASS_TOL

    @property
    def omega(self) -> float:
        # positive root; every closed form is even in Omega
        return float(np.sqrt(self.omega_sq))

    @property
    def passed(self) -> bool:
        return (
            self.omega_sq >= 0.0
            and self.conservation_residual <= self.tol
            and self.eigenop_residual <= self.tol
        )

    def v_scalar(self, keep=None, tol: float = 1e-8) -> float | None:
        """The number ``c`` if ``V = c I`` on the kept block, else ``None``."""
        vk = restrict(self.v, keep)
        c = np.trace(vk).real / vk.shape[0]
        dev = np.linalg.norm(vk - c * np.eye(vk.shape[0]))
        if dev <= tol * max(np.linalg.norm(vk), 1e-300) or np.linalg.norm(vk) == 0.0:
            return float(c)
        return None

    def require(self) -> "ConservedStructure":
        if not self.passed:
            raise StructureError(
                "conserved structure not verified "
                f"(conservation {self.conservation_residual:.3e}, "
                f"eigenoperator {self.eigenop_residual:.3e})",
                max(self.conservation_residual, self.eigenop_residual),
            )
        return self


def verify(h, dh, omega_sq: float | None = None, *, v=None, keep=None,
           tol: float = PASS_TOL) -> ConservedStructure:
    """Estimate (unless given) ``Omega^2``, build ``V`` and report residuals.

    Never raises on a failed check; inspect ``.passed``.
    """
    h = as_hermitian(h)
    dh = as_hermitian(dh)
    if omega_sq is None:
        try:
            omega_sq = estimate_omega_sq(h, dh, keep)
        except CommutingParameterError:
            zero = np.zeros_like(h)
            return ConservedStructure(0.0, zero, 0.0, 0.0, commuting=True, tol=tol)
    if v is None:
        v = build_v(h, dh, omega_sq)
    cons, eig = structure_residuals(h, dh, omega_sq, v, keep)
    return ConservedStructure(float(omega_sq), np.asarray(v), cons, eig, tol=tol)
