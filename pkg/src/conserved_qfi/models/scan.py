"""Search for optimal initial states within the two-level families of the two-qubit models.

Every state on the optimality curve reaches the same maximum, so the scan
reports the whole curve.  A coarse grid locates the best point, and for each
phase on the grid the amplitude ratio ``rho = a1/a2`` is then refined by
root-finding on ``dF/drho``.  The refined points are checked against the
stated optimality equation.  A random-state search over the full register
confirms that no state beats the family.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..charop import char_longtime
from ..operators import as_hermitian
from .twospin import AnisotropicXY, FerromagneticTwoSpin

RHO_RANGE = (0.2, 5.0)
RANDOM_SAMPLES = 10_000
_FD_REL = 1e-6


def family_vectors(i: int, j: int, rho, phi, dim: int = 4) -> np.ndarray:
    """Rows ``(rho |i> + e^{i phi} |j>) / sqrt(1 + rho^2)`` for broadcast ``rho``, ``phi``."""
    rho, phi = np.broadcast_arrays(np.asarray(rho, float), np.asarray(phi, float))
    out = np.zeros(rho.shape + (dim,), dtype=complex)
    norm = np.sqrt(1.0 + rho**2)
    out[..., i] = rho / norm
    out[..., j] = np.exp(1j * phi) / norm
    return out


def variance_qfi(vectors, h_theta) -> np.ndarray:
    """``4 Var(H_theta)`` for every row of ``vectors`` (unit norm assumed)."""
    h = as_hermitian(h_theta)
    hv = vectors @ h.T
    mean = np.einsum("...i,...i->...", vectors.conj(), hv).real
    sq = np.einsum("...i,...i->...", hv.conj(), hv).real
    return 4.0 * (sq - mean**2)


def random_state_max(h_theta, samples: int = RANDOM_SAMPLES, seed: int = 0) -> float:
    """Largest ``4 Var(H_theta)`` over Haar-random pure states."""
    h = as_hermitian(h_theta)
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(samples, h.shape[0])) + 1j * rng.normal(size=(samples, h.shape[0]))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return float(variance_qfi(z, h).max())


@dataclass(frozen=True)
class OptimalScan:
    """Result of :func:`optimal_state_scan`.

    ``locus`` holds ``(phi, rho, F, residual)`` rows for the phases whose
    maximizing ratio lies inside ``RHO_RANGE``.  ``best`` is the refined grid
    maximizer in the same layout.
    """

    best: tuple[float, float, float, float]
    locus: np.ndarray
    family_max: float
    spectral_max: float
    random_max: float

    @property
    def max_residual(self) -> float:
        return float(np.abs(self.locus[:, 3]).max()) if len(self.locus) else 0.0

    @property
    def random_excess(self) -> float:
        """Relative amount by which the random search beats the family (``<= 0`` when it does not)."""
        return (self.random_max - self.family_max) / self.family_max


def _refine(fam, h, phi: float, lo: float, hi: float) -> float | None:
    def slope(r):
        e = _FD_REL * r
        return float(variance_qfi(family_vectors(*fam, r + e, phi), h)
                     - variance_qfi(family_vectors(*fam, r - e, phi), h)) / (2 * e)

    a, b = slope(lo), slope(hi)
    if a == 0.0:
        return lo
    if a * b > 0:
        return None
    return brentq(slope, lo, hi, xtol=1e-14, rtol=1e-14)


def scan_family(h_theta, fam: tuple[int, int], residual, n_rho: int = 161, n_phi: int = 144,
                samples: int = RANDOM_SAMPLES, seed: int = 0) -> OptimalScan:
    """Scan ``rho |i> + e^{i phi} |j>`` for the largest ``4 Var(H_theta)``.

    ``residual(rho, phi)`` evaluates the optimality equation being checked.
    The ratio grid is logarithmic over ``RHO_RANGE`` so ``rho`` and ``1/rho``
    are treated alike.
    """
    h = as_hermitian(h_theta)
    rhos = np.geomspace(*RHO_RANGE, n_rho)
    phis = np.linspace(0.0, 2 * np.pi, n_phi, endpoint=False)
    grid = variance_qfi(family_vectors(*fam, rhos[None, :], phis[:, None]), h)

    rows = []
    for k, phi in enumerate(phis):
        m = int(np.argmax(grid[k]))
        lo, hi = rhos[max(m - 1, 0)], rhos[min(m + 1, n_rho - 1)]
        r = _refine(fam, h, phi, lo, hi)
        if r is None or not (RHO_RANGE[0] < r < RHO_RANGE[1]):
            continue
        f = float(variance_qfi(family_vectors(*fam, r, phi), h))
        rows.append((phi, r, f, residual(r, phi)))
    locus = np.array(rows, dtype=float).reshape(-1, 4)

    if len(locus):
        best = tuple(float(x) for x in locus[int(np.argmax(locus[:, 2]))])
    else:
        k, m = np.unravel_index(int(np.argmax(grid)), grid.shape)
        best = (float(phis[k]), float(rhos[m]), float(grid[k, m]), residual(rhos[m], phis[k]))
    w = np.linalg.eigvalsh(h)
    return OptimalScan(
        best=best,
        locus=locus,
        family_max=max(best[2], float(grid.max())),
        spectral_max=float((w[-1] - w[0]) ** 2),
        random_max=random_state_max(h, samples, seed),
    )


def optimal_state_scan(bundle, t: float, *, which=None, longtime: bool = False,
                       **kw) -> OptimalScan:
    """Optimal-state scan for the ferromagnetic pair or either parameter of the XY pair.

    ``longtime=True`` replaces ``H_theta`` by its long-time form ``(t/Omega^2) V``
    and checks the long-time optimality equation instead.
    """
    if isinstance(bundle, FerromagneticTwoSpin):
        fam = (0, 3)
        if longtime:
            res = lambda r, p: bundle.longtime_residual(r, 1.0, p)  # noqa: E731
        else:
            res = lambda r, p: bundle.optimality_residual(t, r, 1.0, p)  # noqa: E731
        which = "B"
    elif isinstance(bundle, AnisotropicXY):
        which = bundle._which(which)
        if which == "Bp":
            fam = (0, 3)
            if longtime:
                res = lambda r, p: bundle.longtime_residual_plus(r, 1.0, p)  # noqa: E731
            else:
                raise ValueError("the finite-time equation is stated for the Bm family only")
        else:
            fam = (1, 2)
            if longtime:
                res = lambda r, p: bundle.longtime_residual_minus(r, 1.0, p)  # noqa: E731
            else:
                res = lambda r, p: bundle.optimality_residual_minus(t, r, 1.0, p)  # noqa: E731
    else:
        raise TypeError(f"no optimal-state family for {type(bundle).__name__}")

    if longtime:
        st = bundle.structure(which)
        h_theta = char_longtime(st.v, st.omega, t)
    else:
        h_theta = bundle.char_operator(t, which)
    return scan_family(h_theta, fam, res, **kw)
