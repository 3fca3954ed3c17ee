"""Spin-one one-axis twisting model ``H = chi Jx^2 + B Jz`` in the basis ``|02>, |11>, |20>``."""
from __future__ import annotations

import numpy as np

from ..charop import f_function
from ..operators import PureState, expectation
from .base import ModelBundle
from .spins import SPIN1_FLIP, SPIN1_JX, SPIN1_JZ, basis_state


class SpinOneTwisting(ModelBundle):
    name = "h3"
    defaults = {"chi": 1.0, "B": 1.0}
    estimable = ("B",)

    def _validate(self, p):
        super()._validate(p)
        if p["chi"] == 0 and p["B"] == 0:
            raise ValueError("chi and B cannot both vanish")

    def _build_h(self, p):
        return p["chi"] * SPIN1_JX @ SPIN1_JX + p["B"] * SPIN1_JZ

    def _build_dh(self, p, which):
        return SPIN1_JZ.copy()

    def _omega_sq(self, p, which):
        return p["chi"] ** 2 + 4 * p["B"] ** 2

    def _v(self, p, which):
        chi, b = p["chi"], p["B"]
        return (chi**2 - self._omega_sq(p, which)) * SPIN1_JZ - 2 * b * chi * SPIN1_FLIP

    def reference_states(self):
        return {"noon": PureState.normalized(basis_state(3, (0, 1.0), (2, 1j)))}

    @property
    def omega(self) -> float:
        return float(np.sqrt(self.analytic_omega_sq()))

    def reference_char(self, t: float) -> np.ndarray:
        """Stated closed form ``(chi^2 f - t) Jz - 2 B chi I + (2i/Omega^2) sin^2(Omega t/2) Jz I``."""
        chi, b = self.params["chi"], self.params["B"]
        w = self.omega
        return (
            (chi**2 * f_function(w, t) - t) * SPIN1_JZ
            - 2 * b * chi * SPIN1_FLIP
            + 2j / w**2 * np.sin(w * t / 2) ** 2 * SPIN1_JZ @ SPIN1_FLIP
        )

    def reference_char_longtime(self, t: float) -> np.ndarray:
        chi, b = self.params["chi"], self.params["B"]
        return -4 * b * b * t / self.omega**2 * SPIN1_JZ - 2 * b * chi * SPIN1_FLIP

    def reference_qfi(self, t: float, state: PureState) -> float:
        """``[(4B^2 t/Omega^2)^2 + 4B^2 chi^2] <Jz^2> - (4B^2 t/Omega^2)^2 <Jz>^2 - 4B^2 chi^2 <I>^2``."""
        chi, b = self.params["chi"], self.params["B"]
        a = (4 * b * b * t / self.omega**2) ** 2
        c = 4 * b * b * chi * chi
        jz = expectation(state, SPIN1_JZ).real
        jz2 = expectation(state, SPIN1_JZ @ SPIN1_JZ).real
        fl = expectation(state, SPIN1_FLIP).real
        return float((a + c) * jz2 - a * jz**2 - c * fl**2)

    def reference_fmax(self, t: float) -> float:
        chi, b = self.params["chi"], self.params["B"]
        return float(4 * b * b * (4 * b * b * t * t / self.omega**4 + chi * chi))

    def chi_landmark(self, t: float) -> float:
        """Approximate minimizer of the stated maximum over ``chi``: ``chi^2 = 4 (B t)^(2/3) - 4 B^2``."""
        b = self.params["B"]
        return float(4 * (b * t) ** (2 / 3) - 4 * b * b)
