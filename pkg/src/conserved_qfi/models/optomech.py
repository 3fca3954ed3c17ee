"""Cavity optomechanics ``H = wa Na + wb Nb - g Na x_b``, estimating the mirror mass or cavity length.

``g = (wa / l) / sqrt(m wb)``.  The photon number is conserved, so by default
the model works in the sector ``Na = na`` where it reduces to the mirror mode
truncated at ``ncut`` levels.  ``full=True`` keeps both modes (cavity levels
``0 .. nacut-1``), which serves as the oracle for the sector reduction.

Truncation breaks ``[x, p] = i`` on the top level only.  :attr:`keep` selects
the levels at least four below the cutoff, on which residuals are measured.
"""
from __future__ import annotations

import numpy as np

from ..charop import SERIES_NMAX, SeriesSetup
from ..operators import PureState
from .base import ModelBundle
from .spins import coherent, number, quadratures

KEEP_MARGIN = 4
# extra mirror levels for the finite-difference oracle
EXACT_MARGIN = 24


class Optomechanics(ModelBundle):
    name = "optomech"
    defaults = {
        "wa": 1.0, "wb": 4.0, "m": 25.0, "l": 1.0,
        "na": 1, "ncut": 12, "param": "m", "full": False, "nacut": 4,
    }
    estimable = ("m", "l")

    def _validate(self, p):
        super()._validate(p)
        if p["param"] not in self.estimable:
            raise ValueError("param must be 'm' or 'l'")
        if int(p["ncut"]) < 8:
            raise ValueError("ncut must be at least 8")
        for k in ("wa", "wb", "m", "l"):
            if not p[k] > 0:
                raise ValueError(f"{k} must be positive")
        if int(p["na"]) < 0:
            raise ValueError("na must be non-negative")
        if p["full"] and int(p["na"]) >= int(p["nacut"]):
            raise ValueError("na must lie below nacut")

    def _which(self, which):
        return super()._which(self._params["param"] if which is None else which)

    # -- couplings --------------------------------------------------------------
    @staticmethod
    def coupling(p) -> float:
        return p["wa"] / p["l"] / np.sqrt(p["m"] * p["wb"])

    def g(self) -> float:
        return self.coupling(self._params)

    def g_prime(self, which=None, p=None) -> float:
        p = self._params if p is None else p
        which = self._which(which)
        g = self.coupling(p)
        return -g / (2 * p["m"]) if which == "m" else -g / p["l"]

    # -- operators --------------------------------------------------------------
    def _mirror(self, p, ncut=None):
        n = int(p["ncut"] if ncut is None else ncut)
        x, pb = quadratures(n)
        return number(n), x, pb

    def _cavity(self, p):
        return np.diag(np.arange(int(p["nacut"]), dtype=float)).astype(complex)

    def _assemble(self, p, ncut=None):
        nb, x, _ = self._mirror(p, ncut)
        g = self.coupling(p)
        if p["full"]:
            na = self._cavity(p)
            eb = np.eye(nb.shape[0])
            return (p["wa"] * np.kron(na, eb) + p["wb"] * np.kron(np.eye(na.shape[0]), nb)
                    - g * np.kron(na, x))
        n_a = float(p["na"])
        return p["wa"] * n_a * np.eye(nb.shape[0]) + p["wb"] * nb - g * n_a * x

    def _build_h(self, p):
        return self._assemble(p)

    def _dh_at(self, p, which, ncut=None):
        _, x, _ = self._mirror(p, ncut)
        gp = self.g_prime(which, p)
        if p["full"]:
            return -gp * np.kron(self._cavity(p), x)
        return -gp * float(p["na"]) * x

    def _build_dh(self, p, which):
        return self._dh_at(p, which)

    def _omega_sq(self, p, which):
        return p["wb"] ** 2

    def _v(self, p, which):
        c = p["wb"] * self.coupling(p) * self.g_prime(which, p)
        if p["full"]:
            na = self._cavity(p)
            return c * np.kron(na @ na, np.eye(int(p["ncut"])))
        return c * float(p["na"]) ** 2 * np.eye(int(p["ncut"]), dtype=complex)

    # -- truncation bookkeeping ---------------------------------------------------
    def mirror_levels(self) -> np.ndarray:
        n = int(self._params["ncut"])
        if self._params["full"]:
            return np.tile(np.arange(n), int(self._params["nacut"]))
        return np.arange(n)

    @property
    def keep(self):
        return np.flatnonzero(self.mirror_levels() < int(self._params["ncut"]) - KEEP_MARGIN)

    def series_setup(self, which=None, n_max: int = SERIES_NMAX) -> SeriesSetup:
        """Operators enlarged by ``n_max`` levels, with the light-cone level map.

        The leading ``ncut`` block of the light-cone series then equals the
        untruncated result.  Every commutator of ``dH`` with ``H`` lies in
        span{x, p, 1}, hence the band limit of 1.
        """
        if self._params["full"]:
            raise ValueError("the series path uses the photon-number sector (full=False)")
        big = int(self._params["ncut"]) + n_max + 1
        return SeriesSetup(self._assemble(self._params, big),
                           self._dh_at(self._params, self._which(which), big),
                           levels=np.arange(big), band_limit=1, block=int(self._params["ncut"]))

    def exact_provider(self, which=None):
        """Oracle Hamiltonian with ``EXACT_MARGIN`` extra mirror levels (sector mode).

        Evolving at the working cutoff leaks amplitude off the top level into
        the kept block once the mirror displacement is sizeable.
        """
        if self._params["full"]:
            return self.h_of(which)
        return self._enlarged().h_of(which)

    def exact_vector_provider(self, names=None):
        if self._params["full"]:
            return self.h_of_vector(names)
        return self._enlarged().h_of_vector(names)

    def _enlarged(self) -> "Optomechanics":
        return self.with_params(ncut=int(self._params["ncut"]) + EXACT_MARGIN)

    # -- states -------------------------------------------------------------------
    def _embed(self, mirror: np.ndarray) -> PureState:
        if not self._params["full"]:
            return PureState.normalized(mirror)
        cav = np.zeros(int(self._params["nacut"]), dtype=complex)
        cav[int(self._params["na"])] = 1.0
        return PureState.normalized(np.kron(cav, mirror))

    def vacuum(self) -> PureState:
        v = np.zeros(int(self._params["ncut"]), dtype=complex)
        v[0] = 1.0
        return self._embed(v)

    def coherent_state(self, alpha: complex) -> PureState:
        return self._embed(coherent(int(self._params["ncut"]), alpha))

    def reference_states(self):
        return {"vacuum": self.vacuum(), "coherent": self.coherent_state(0.3 + 0.2j)}

    # -- references ---------------------------------------------------------------
    def amplitude(self, which=None) -> float:
        """``na g' / wb``."""
        p = self._params
        return float(p["na"]) * self.g_prime(which) / p["wb"]

    def reference_char(self, t: float, which=None) -> np.ndarray:
        if self._params["full"]:
            raise ValueError("the reference form is stated in the photon-number sector")
        _, x, pb = self._mirror(self._params)
        wt = self._params["wb"] * t
        return self.amplitude(which) * (np.sin(wt) * x + (1 - np.cos(wt)) * pb)

    def reference_vacuum_qfi(self, t: float, which=None) -> float:
        return float(self.amplitude(which) ** 2 * (1 - np.cos(self._params["wb"] * t)))

    def reference_fmax(self, which=None) -> float:
        return float(self.amplitude(which) ** 2)

    def reference_fmax_explicit(self, which=None) -> float:
        """Stated ``F_m,max = na^2 wa^2 / (4 m^3 l^2 wb^5)`` or ``F_l,max = na^2 wa^2 / (m l^4 wb^3)``."""
        p = self._params
        na, wa, wb, m, l = float(p["na"]), p["wa"], p["wb"], p["m"], p["l"]
        if self._which(which) == "m":
            return na**2 * wa**2 / (4 * m**3 * l**2 * wb**5)
        return na**2 * wa**2 / (m * l**4 * wb**3)

    def vacuum_peak_times(self, k_max: int = 2) -> np.ndarray:
        return (2 * np.arange(k_max) + 1) * np.pi / self._params["wb"]

    def vacuum_zero_times(self, k_max: int = 2) -> np.ndarray:
        return 2 * np.arange(1, k_max + 1) * np.pi / self._params["wb"]
