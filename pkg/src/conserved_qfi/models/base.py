"""Common interface of the model Hamiltonians."""
from __future__ import annotations

from types import MappingProxyType
from typing import Callable, Mapping

import numpy as np

from ..charop import SERIES_NMAX, SeriesSetup, char_closed
from ..operators import PureState
from ..structure import ConservedStructure, verify


class ModelBundle:
    """A parametrized Hamiltonian together with its analytic reference data.

    Instances are immutable; :meth:`with_params` returns a modified copy.
    Subclasses set ``name``, ``defaults`` and ``estimable`` and implement the
    ``_build_*`` hooks.
    """

    name: str = ""
    defaults: Mapping[str, float] = {}
    estimable: tuple[str, ...] = ()

    def __init__(self, **params):
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise ValueError(f"unknown parameters for {self.name}: {sorted(unknown)}")
        merged = {**self.defaults, **params}
        self._validate(merged)
        self._params = MappingProxyType(merged)

    def _validate(self, p: dict) -> None:
        for k, v in p.items():
            if isinstance(v, float) and not np.isfinite(v):
                raise ValueError(f"parameter {k} must be finite")

    @property
    def params(self) -> Mapping:
        return self._params

    def with_params(self, **kw) -> "ModelBundle":
        return type(self)(**{**self._params, **kw})

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self._params.items())
        return f"{type(self).__name__}({inner})"

    def _which(self, which):
        which = self.estimable[0] if which is None else which
        if which not in self.estimable:
            raise ValueError(f"{self.name} cannot estimate {which!r}; choose from {self.estimable}")
        return which

    # -- hooks ---------------------------------------------------------------
    def _build_h(self, p: Mapping) -> np.ndarray:
        raise NotImplementedError

    def _build_dh(self, p: Mapping, which: str) -> np.ndarray:
        raise NotImplementedError

    def _omega_sq(self, p: Mapping, which: str) -> float:
        raise NotImplementedError

    def _v(self, p: Mapping, which: str) -> np.ndarray:
        raise NotImplementedError

    # -- public --------------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.h().shape[0]

    @property
    def keep(self):
        """Basis indices on which truncated operators are trusted (``None`` = all)."""
        return None

    def h(self) -> np.ndarray:
        return self._build_h(self._params)

    def dh(self, which=None) -> np.ndarray:
        return self._build_dh(self._params, self._which(which))

    def h_of(self, which=None) -> Callable[[float], np.ndarray]:
        """``theta -> H`` with parameter ``which`` replaced by ``theta``."""
        which = self._which(which)
        base = dict(self._params)
        return lambda theta: self._build_h({**base, which: float(theta)})

    def h_of_vector(self, names=None) -> Callable[[np.ndarray], np.ndarray]:
        names = tuple(self.estimable if names is None else names)
        for n in names:
            self._which(n)
        base = dict(self._params)
        return lambda vec: self._build_h({**base, **{n: float(x) for n, x in zip(names, vec)}})

    def analytic_omega_sq(self, which=None) -> float:
        return float(self._omega_sq(self._params, self._which(which)))

    def analytic_v(self, which=None) -> np.ndarray:
        return self._v(self._params, self._which(which))

    def structure(self, which=None, analytic: bool = False) -> ConservedStructure:
        """Verified structure; ``analytic=True`` uses the reference ``Omega^2`` and ``V``."""
        which = self._which(which)
        if analytic:
            return verify(self.h(), self.dh(which), self.analytic_omega_sq(which),
                          v=self.analytic_v(which), keep=self.keep)
        return verify(self.h(), self.dh(which), keep=self.keep)

    def char_operator(self, t: float, which=None) -> np.ndarray:
        return char_closed(self.h(), self.dh(which), t, self.structure(which))

    def exact_provider(self, which=None) -> Callable[[float], np.ndarray]:
        """``theta -> H`` for the finite-difference oracle; its leading block must match :meth:`h`."""
        return self.h_of(which)

    def exact_vector_provider(self, names=None) -> Callable[[np.ndarray], np.ndarray]:
        """Multi-parameter counterpart of :meth:`exact_provider`."""
        return self.h_of_vector(names)

    def series_setup(self, which=None, n_max: int = SERIES_NMAX) -> SeriesSetup:
        """Inputs for :func:`~conserved_qfi.charop.char_series`."""
        return SeriesSetup(self.h(), self.dh(which))

    def reference_states(self) -> dict[str, PureState]:
        return {}
