"""Model Hamiltonians with conserved ``V`` and their reference data."""
from __future__ import annotations

from .base import ModelBundle
from .optomech import Optomechanics
from .spinone import SpinOneTwisting
from .twospin import AnisotropicXY, FerromagneticTwoSpin, phi_state, psi_opt


def h1_bundle(**params) -> FerromagneticTwoSpin:
    return FerromagneticTwoSpin(**params)


def h2_bundle(**params) -> AnisotropicXY:
    return AnisotropicXY(**params)


def h3_bundle(**params) -> SpinOneTwisting:
    return SpinOneTwisting(**params)


def optomech_bundle(**params) -> Optomechanics:
    return Optomechanics(**params)


REGISTRY = {
    "h1": h1_bundle,
    "h2": h2_bundle,
    "h3": h3_bundle,
    "optomech": optomech_bundle,
}


def get_model(name: str, **params) -> ModelBundle:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(REGISTRY)}") from None
    return factory(**params)


__all__ = [
    "ModelBundle", "FerromagneticTwoSpin", "AnisotropicXY", "SpinOneTwisting", "Optomechanics",
    "h1_bundle", "h2_bundle", "h3_bundle", "optomech_bundle", "REGISTRY", "get_model",
    "psi_opt", "phi_state",
]
