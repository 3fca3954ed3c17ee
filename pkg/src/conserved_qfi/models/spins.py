"""Spin and boson operator bases used by the model Hamiltonians.

Two-qubit basis order is ``|00>, |01>, |10>, |11>`` with ``sigma_z |0> = |0>``.
"""
from __future__ import annotations

import numpy as np

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def site(op, which: int) -> np.ndarray:
    """``op`` acting on qubit 1 or 2 of a two-qubit register."""
    return np.kron(op, I2) if which == 1 else np.kron(I2, op)


def pair(a, b) -> np.ndarray:
    return np.kron(a, b)


# J acts on span{|00>, |11>}; S on span{|01>, |10>}
J_X = (pair(SX, SX) - pair(SY, SY)) / 4
J_Y = (pair(SX, SY) + pair(SY, SX)) / 4
J_Z = (site(SZ, 1) + site(SZ, 2)) / 4
S_X = (pair(SX, SY) - pair(SY, SX)) / 4
S_Y = (pair(SX, SX) + pair(SY, SY)) / 4
S_Z = (site(SZ, 1) - site(SZ, 2)) / 4

J_VEC = (J_X, J_Y, J_Z)
S_VEC = (S_X, S_Y, S_Z)
SZSZ = pair(SZ, SZ)


def dot(x, ops) -> np.ndarray:
    return sum(c * o for c, o in zip(x, ops))


def casimir(ops) -> np.ndarray:
    return sum(o @ o for o in ops)


def basis_state(dim: int, *entries) -> np.ndarray:
    """Vector with the given ``(index, amplitude)`` pairs."""
    v = np.zeros(dim, dtype=complex)
    for i, a in entries:
        v[i] = a
    return v


# spin-one (two bosons in two modes), basis |02>, |11>, |20>
_R2 = np.sqrt(2.0)
SPIN1_JX = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex) / _R2
SPIN1_JY = 1j * np.array([[0, 1, 0], [-1, 0, 1], [0, -1, 0]], dtype=complex) / _R2
SPIN1_JZ = np.diag([-1.0, 0.0, 1.0]).astype(complex)
SPIN1_FLIP = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=complex)


# truncated single boson mode
def annihilation(ncut: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, ncut, dtype=float)), 1).astype(complex)


def number(ncut: int) -> np.ndarray:
    return np.diag(np.arange(ncut, dtype=float)).astype(complex)


def quadratures(ncut: int) -> tuple[np.ndarray, np.ndarray]:
    """``x = (b + b^dagger)/sqrt 2``, ``p = (b - b^dagger)/(i sqrt 2)``."""
    b = annihilation(ncut)
    return (b + b.conj().T) / _R2, (b - b.conj().T) / (1j * _R2)


def coherent(ncut: int, alpha: complex) -> np.ndarray:
    """Truncated, renormalized coherent state."""
    n = np.arange(ncut)
    logfact = np.cumsum(np.log(np.maximum(n, 1)))
    amp = np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * logfact) * np.power(complex(alpha), n)
    return amp / np.linalg.norm(amp)
