"""Two-qubit models: the ferromagnetic pair in a field and the anisotropic XY pair.

Methods named ``reference_*`` evaluate the stated closed forms exactly as
written, including prefactors that disagree with the variance formula; the
audit compares them with the computed values.
"""
from __future__ import annotations

import numpy as np

from ..charop import df_dt, f_function
from ..operators import PureState, expectation
from ..thermal import r_function, sz_correlation
from .base import ModelBundle
from .spins import (
    J_VEC, J_X, J_Z, S_VEC, S_Z, SX, SY, SZ, SZSZ, basis_state, casimir, dot, pair,
    site,
)


def two_level_family(i: int, j: int, a1: float, a2: float, phi: float) -> PureState:
    """``a1 |i> + a2 e^{i phi} |j>`` on the two-qubit register, normalized."""
    return PureState.normalized(basis_state(4, (i, a1), (j, a2 * np.exp(1j * phi))))


def psi_opt(a1: float = 1.0, a2: float = 1.0, phi: float = np.pi / 2) -> PureState:
    """``a1|00> + a2 e^{i phi}|11>``."""
    return two_level_family(0, 3, a1, a2, phi)


def phi_state(b1: float = 1.0, b2: float = 1.0, phi: float = np.pi / 2) -> PureState:
    """``b1|01> + b2 e^{i phi}|10>``."""
    return two_level_family(1, 2, b1, b2, phi)


def _reference_qfi(x, ops, state: PureState) -> float:
    """``(16/3) [|x|^2 <|J|^2> - 3 (x . <J>)^2]``."""
    x = np.asarray(x, dtype=float)
    mean = np.array([expectation(state, o).real for o in ops])
    c2 = expectation(state, casimir(ops)).real
    return 16.0 / 3.0 * (x @ x * c2 - 3.0 * (x @ mean) ** 2)


class FerromagneticTwoSpin(ModelBundle):
    """``H = -s1x s2x - B (s1z + s2z)``, estimating ``B``."""

    name = "h1"
    defaults = {"B": 0.5}
    estimable = ("B",)

    def _build_h(self, p):
        return -pair(SX, SX) - p["B"] * (site(SZ, 1) + site(SZ, 2))

    def _build_dh(self, p, which):
        return -(site(SZ, 1) + site(SZ, 2))

    def _omega_sq(self, p, which):
        return 4.0 * (1.0 + 4.0 * p["B"] ** 2)

    def _v(self, p, which):
        b = p["B"]
        return 32.0 * b * (J_X + 2.0 * b * J_Z)

    @property
    def v_norm(self) -> float:
        """``v = |(1, 0, 2B)|``, so that ``Omega = 2 v``."""
        return float(np.hypot(1.0, 2.0 * self.params["B"]))

    def reference_states(self):
        return {
            "bell": psi_opt(1.0, 1.0, 0.0),
            "psi_opt": psi_opt(),
        }

    # -- unitary references -----------------------------------------------------
    def x_vector(self, t: float) -> np.ndarray:
        b = self.params["B"]
        w = 2.0 * self.v_norm
        f = f_function(w, t)
        return np.array([8 * b * f, -2 * df_dt(w, t), t - 4 * f])

    def reference_char(self, t: float) -> np.ndarray:
        return 4.0 * dot(self.x_vector(t), J_VEC)

    def reference_qfi(self, t: float, state: PureState) -> float:
        return _reference_qfi(self.x_vector(t), J_VEC, state)

    def reference_fmax(self, t: float) -> float:
        x = self.x_vector(t)
        return 4.0 * float(x @ x)

    def phi_opt(self, t: float) -> float:
        """``arctan(4 B f / f_t)`` on the branch in ``[0, pi)`` for ``B >= 0``."""
        b = self.params["B"]
        w = 2.0 * self.v_norm
        return float(np.arctan2(4 * b * f_function(w, t), df_dt(w, t)))

    def optimality_residual(self, t: float, a1: float, a2: float, phi: float) -> float:
        x = self.x_vector(t)
        return float(x[0] * np.cos(phi) + x[1] * np.sin(phi)
                     + 0.5 * x[2] * (a1 / a2 - a2 / a1))

    def longtime_residual(self, a1: float, a2: float, phi: float) -> float:
        b = self.params["B"]
        return float(4 * b * (np.cos(phi) + b * (a1 / a2 - a2 / a1)))

    def longtime_locus(self, phi):
        """``a1/a2`` solving the long-time optimality equation at phase ``phi``."""
        c = np.cos(phi) / self.params["B"]
        return (-c + np.sqrt(c * c + 4.0)) / 2.0

    # -- thermal references -----------------------------------------------------
    def reference_r(self, beta: float) -> float:
        v = self.v_norm
        return float(r_function(beta, 2 * v))

    def reference_correlation(self, beta: float) -> float:
        return sz_correlation(beta, self.v_norm, 1.0)

    def reference_thermal_qfi(self, beta: float) -> float:
        """``(16 v^2 r^2 - 8 r + 1) 4 beta^2 cosh(v beta) / (cosh(v beta) + cosh beta)``."""
        v = self.v_norm
        r = self.reference_r(beta)
        return float((16 * v * v * r * r - 8 * r + 1) * 2 * beta**2
                     * (1 + self.reference_correlation(beta)))

    def reference_thermal_lowt(self, beta: float) -> float:
        v = self.v_norm
        return 4.0 * beta**2 * (1.0 - 1.0 / v**2)


class AnisotropicXY(ModelBundle):
    """``H = -(1+g)/2 s1x s2x - (1-g)/2 s1y s2y - B+ (s1z + s2z) - B- (s1z - s2z)``."""

    name = "h2"
    defaults = {"gamma": 0.5, "Bp": 0.3, "Bm": 0.7}
    estimable = ("Bp", "Bm")

    def _build_h(self, p):
        g = p["gamma"]
        return (
            -(1 + g) / 2 * pair(SX, SX) - (1 - g) / 2 * pair(SY, SY)
            - p["Bp"] * (site(SZ, 1) + site(SZ, 2))
            - p["Bm"] * (site(SZ, 1) - site(SZ, 2))
        )

    def _build_dh(self, p, which):
        return -4.0 * (J_Z if which == "Bp" else S_Z)

    def _omega_sq(self, p, which):
        return 4.0 * self.v_vector(which, p) @ self.v_vector(which, p)

    def _v(self, p, which):
        b = p[which]
        ops = J_VEC if which == "Bp" else S_VEC
        return 32.0 * b * dot(self.v_vector(which, p), ops)

    def v_vector(self, which: str, p=None) -> np.ndarray:
        p = self.params if p is None else p
        if which == "Bp":
            return np.array([p["gamma"], 0.0, 2 * p["Bp"]])
        return np.array([0.0, 1.0, 2 * p["Bm"]])

    def v_norm(self, which: str) -> float:
        return float(np.linalg.norm(self.v_vector(which)))

    def reference_states(self):
        return {"psi_opt": psi_opt(), "phi_opt": phi_state(), "bell": psi_opt(1.0, 1.0, 0.0)}

    def x_vector(self, which: str, t: float) -> np.ndarray:
        w = 2.0 * self.v_norm(which)
        f, ft = f_function(w, t), df_dt(w, t)
        if which == "Bp":
            g, b = self.params["gamma"], self.params["Bp"]
            return np.array([8 * g * b * f, -2 * g * ft, t - 4 * g * g * f])
        b = self.params["Bm"]
        return np.array([2 * ft, 8 * b * f, t - 4 * f])

    def reference_char(self, which: str, t: float) -> np.ndarray:
        return 4.0 * dot(self.x_vector(which, t), J_VEC if which == "Bp" else S_VEC)

    def reference_qfi(self, which: str, t: float, state: PureState) -> float:
        return _reference_qfi(self.x_vector(which, t), J_VEC if which == "Bp" else S_VEC, state)

    def reference_fmax(self, which: str, t: float) -> float:
        x = self.x_vector(which, t)
        return 4.0 * float(x @ x)

    def reference_offdiag(self, t: float, state: PureState, prefactor: float = 1.0) -> float:
        """``-prefactor <H_+><H_->``; the stated form has prefactor 1."""
        hp = self.reference_char("Bp", t)
        hm = self.reference_char("Bm", t)
        return -prefactor * (expectation(state, hp) * expectation(state, hm)).real

    def phi_opt_minus(self, t: float) -> float:
        w = 2.0 * self.v_norm("Bm")
        return float(np.arctan2(4 * self.params["Bm"] * f_function(w, t), df_dt(w, t)))

    def longtime_residual_plus(self, a1, a2, phi) -> float:
        g, b = self.params["gamma"], self.params["Bp"]
        vp2 = g * g + 4 * b * b
        return float(4 * g * b * np.cos(phi) + (vp2 - g * g) * (a1 / a2 - a2 / a1))

    def longtime_residual_minus(self, b1, b2, phi) -> float:
        """Long-time limit of the ``|Phi_opt>`` equation: ``4 B- [cos phi + B- (b1/b2 - b2/b1)]``."""
        b = self.params["Bm"]
        return float(4 * b * (np.cos(phi) + b * (b1 / b2 - b2 / b1)))

    def optimality_residual_minus(self, t, b1, b2, phi) -> float:
        x = self.x_vector("Bm", t)
        return float(x[0] * np.sin(phi) - x[1] * np.cos(phi)
                     - 0.5 * x[2] * (b1 / b2 - b2 / b1))

    # -- thermal references -----------------------------------------------------
    def reference_r(self, which: str, beta: float) -> float:
        return float(r_function(beta, 2 * self.v_norm(which)))

    def reference_correlation(self, beta: float) -> float:
        return sz_correlation(beta, self.v_norm("Bp"), self.v_norm("Bm"))

    def reference_thermal_qfi(self, which: str, beta: float) -> float:
        v = self.v_norm(which)
        r = self.reference_r(which, beta)
        c = self.reference_correlation(beta)
        if which == "Bp":
            g2 = self.params["gamma"] ** 2
            return float(2 * beta**2 * (16 * g2 * v * v * r * r - 8 * g2 * r + 1) * (1 + c))
        return float(2 * beta**2 * (16 * v * v * r * r - 8 * r + 1) * (1 - c))

    def reference_thermal_lowt(self, which: str, beta: float) -> float:
        """Low-temperature asymptote for the regime set by ``v+`` versus ``v-``."""
        vp, vm = self.v_norm("Bp"), self.v_norm("Bm")
        g2 = self.params["gamma"] ** 2
        full_p = 4 * beta**2 * (1 - g2 / vp**2)
        full_m = 4 * beta**2 * (1 - 1 / vm**2)
        if np.isclose(vp, vm, rtol=1e-12, atol=0.0):
            return 0.5 * (full_p if which == "Bp" else full_m)
        if vp < vm:
            return 0.0 if which == "Bp" else full_m
        return full_p if which == "Bp" else 0.0


# identities the reference forms rely on
def casimir_identities() -> dict[str, float]:
    """Entrywise deviations of ``|J|^2 = 3(1 + s1z s2z)/8``, ``|S|^2 = 3(1 - s1z s2z)/8`` and ``J_i S_j = 0``."""
    eye = np.eye(4)
    out = {
        "J2": float(np.abs(casimir(J_VEC) - 3 * (eye + SZSZ) / 8).max()),
        "S2": float(np.abs(casimir(S_VEC) - 3 * (eye - SZSZ) / 8).max()),
    }
    out["JS"] = float(max(np.abs(a @ b).max() for a in J_VEC for b in S_VEC))
    out["SJ"] = float(max(np.abs(b @ a).max() for a in J_VEC for b in S_VEC))
    return out


__all__ = [
    "FerromagneticTwoSpin", "AnisotropicXY", "psi_opt", "phi_state", "two_level_family",
    "casimir_identities",
]
