"""Dense Hermitian operator algebra shared by every other module.

Operators are plain complex ``numpy`` arrays. The only wrapped types are the
two state containers, :class:`SpectralState` and :class:`PureState`, which
carry their own validation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITIAN_TOL = 1e-10
PROB_CLAMP = -1e-12
SUPPORT_CUTOFF = 1e-12
MAX_ADJOINT_POWER = 128


class SpectralError(np.linalg.LinAlgError):
    """Eigendecomposition failed or reconstructed poorly."""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


def _square(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def hermiticity_defect(a) -> float:
    """Largest entry of ``a - a^dagger`` relative to the largest entry of ``a``."""
    a = _square(a)
    scale = np.abs(a).max()
    if scale == 0.0:
        return 0.0
    return float(np.abs(a - a.conj().T).max() / scale)


def as_hermitian(a, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return ``(a + a^dagger)/2`` after checking ``a`` is Hermitian to ``tol``.

    Raises
    ------
    ValueError
        If the relative defect exceeds ``tol`` or the dimension is below 2.
    """
    a = _square(a)
    if a.shape[0] < 2:
        raise ValueError("operators must have dimension >= 2")
    defect = hermiticity_defect(a)
    if defect > tol:
        raise ValueError(f"matrix is not Hermitian (relative defect {defect:.3e})")
    return 0.5 * (a + a.conj().T)


def _check_pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def commutator(a, b) -> np.ndarray:
    a, b = _check_pair(a, b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = _check_pair(a, b)
    return a @ b + b @ a


def adjoint_power(h, a, n: int, max_power: int = MAX_ADJOINT_POWER) -> np.ndarray:
    """Apply the superoperator ``[h, .]`` to ``a`` exactly ``n`` times."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > max_power:
        raise ValueError(f"adjoint power {n} exceeds the configured maximum {max_power}")
    h, a = _check_pair(h, a)
    out = np.array(a, dtype=np.result_type(h, a, complex))
    for _ in range(n):
        out = h @ out - out @ h
    return out


def spectral(h, rtol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Ascending eigenvalues and orthonormal eigenvectors (as columns) of ``h``."""
    h = _square(h)
    try:
        w, q = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise SpectralError(f"eigendecomposition did not converge: {exc}") from exc
    norm = np.linalg.norm(h)
    residual = np.linalg.norm(h - (q * w) @ q.conj().T)
    if residual > rtol * max(norm, 1.0):
        raise SpectralError(
            f"reconstruction residual {residual:.3e} exceeds tolerance", residual
        )
    return w, q


def evolve(h, t: float) -> np.ndarray:
    """Propagator ``exp(-i t h)`` built from the spectral decomposition."""
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    w, q = spectral(h)
    return (q * np.exp(-1j * t * w)) @ q.conj().T


def expm_hermitian(h, scale: complex) -> np.ndarray:
    """``exp(scale * h)`` for Hermitian ``h``."""
    w, q = spectral(h)
    return (q * np.exp(scale * w)) @ q.conj().T


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.array(self.amplitudes, dtype=complex).ravel()
        if v.size < 2:
            raise ValueError("state dimension must be >= 2")
        nrm = np.linalg.norm(v)
        if not abs(nrm - 1.0) <= 1e-12:
            raise ValueError(f"state is not normalized (norm {nrm!r})")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @classmethod
    def normalized(cls, amplitudes) -> "PureState":
        v = np.asarray(amplitudes, dtype=complex).ravel()
        nrm = np.linalg.norm(v)
        if not (np.isfinite(nrm) and nrm > 0):
            raise ValueError("cannot normalize a zero or non-finite vector")
        return cls(v / nrm)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def density(self) -> np.ndarray:
        return np.outer(self.amplitudes, self.amplitudes.conj())

    def as_spectral(self) -> "SpectralState":
        vecs = np.zeros((self.dim, 1), dtype=complex)
        vecs[:, 0] = self.amplitudes
        return SpectralState(np.array([1.0]), vecs)


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Density operator stored as eigenpairs ``{p_i, |psi_i>}``.

    ``vectors`` holds eigenvectors as columns. Only the first ``len(probs)``
    columns are stored, so a rank-deficient state may omit its kernel.
    """

    probs: np.ndarray
    vectors: np.ndarray
    support_cutoff: float = SUPPORT_CUTOFF
    _density: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        q = np.array(self.vectors, dtype=complex)
        if q.ndim != 2 or q.shape[1] != p.size:
            raise ValueError("vectors must be a (dim, k) array matching probs")
        if q.shape[0] < 2:
            raise ValueError("state dimension must be >= 2")
        if np.any(p < PROB_CLAMP):
            raise ValueError(f"negative probability {p.min():.3e}")
        p = np.where(p < 0.0, 0.0, p)
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        gram = q.conj().T @ q
        if np.abs(gram - np.eye(p.size)).max() > 1e-10:
            raise ValueError("eigenvectors are not orthonormal")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "vectors", q)
        rho = (q * p) @ q.conj().T
        rho.setflags(write=False)
        object.__setattr__(self, "_density", rho)

    @classmethod
    def from_density(cls, rho, support_cutoff: float = SUPPORT_CUTOFF) -> "SpectralState":
        rho = as_hermitian(rho)
        w, q = spectral(rho)
        if w.min() < -1e-10:
            raise ValueError(f"density matrix has eigenvalue {w.min():.3e}")
        w = np.where(w < 0.0, 0.0, w)
        return cls(w / w.sum(), q, support_cutoff)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def density(self) -> np.ndarray:
        return self._density

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > self.support_cutoff)

    @property
    def rank(self) -> int:
        return int(self.support.size)


State = PureState | SpectralState


def _state_dim_check(state: State, a) -> np.ndarray:
    a = _square(a)
    if a.shape[0] != state.dim:
        raise ValueError(f"operator dim {a.shape[0]} does not match state dim {state.dim}")
    return a


def expectation(state: State, a) -> complex:
    a = _state_dim_check(state, a)
    if isinstance(state, PureState):
        v = state.amplitudes
        return complex(np.vdot(v, a @ v))
    return complex(np.trace(state.density @ a))


def covariance(state: State, a, b) -> float:
    """Symmetrized covariance ``<{a,b}>/2 - <a><b>`` for Hermitian ``a, b``."""
    a = as_hermitian(_state_dim_check(state, a))
    b = as_hermitian(_state_dim_check(state, b))
    sym = 0.5 * expectation(state, anticommutator(a, b))
    return float((sym - expectation(state, a) * expectation(state, b)).real)


def variance(state: State, a) -> float:
    var = covariance(state, a, a)
    if var < PROB_CLAMP:
        raise ValueError(f"variance {var:.3e} is negative beyond round-off")
    return max(var, 0.0)


def psd_sqrt(state: SpectralState | PureState) -> np.ndarray:
    """Principal square root; eigenvalues below the support cutoff map to zero."""
    if isinstance(state, PureState):
        return state.density
    p = np.where(state.probs > state.support_cutoff, state.probs, 0.0)
    q = state.vectors
    return (q * np.sqrt(p)) @ q.conj().T


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_pure_state(dim: int, rng: np.random.Generator, support: int | None = None) -> PureState:
    """Haar-like random pure state, optionally confined to the first ``support`` levels."""
    k = dim if support is None else support
    v = np.zeros(dim, dtype=complex)
    v[:k] = rng.normal(size=k) + 1j * rng.normal(size=k)
    return PureState.normalized(v)


def random_mixed_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> SpectralState:
    k = dim if rank is None else rank
    p = rng.dirichlet(np.ones(k))
    u = random_unitary(dim, rng)
    return SpectralState(p, u[:, :k])
