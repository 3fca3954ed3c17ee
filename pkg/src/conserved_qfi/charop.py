"""The characteristic operator ``H_theta = i (d_theta U^dagger) U`` with ``U = exp(-i t H)``.

Three independent constructions are provided:

* :func:`char_series`, the commutator series
  ``i sum_n (i t)^(n+1) / (n+1)! (H^x)^n dH``, summed in extended precision;
* :func:`char_closed`, the resummed form available when ``V`` is conserved;
* :func:`char_exact`, central differences of the propagator itself.

Plus the long-time and scalar-``V`` reductions.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable

import numpy as np

from .operators import as_hermitian, commutator, evolve
from .structure import ConservedStructure, StructureError, restrict

SERIES_NMAX = 160
SERIES_TAIL_TOL = 1e-12
FD_STEP = 1e-5
# beyond this Omega t the series loses too many digits to cancellation
SERIES_MAX_OMEGA_T = 30.0
# below this Omega*t the f series is used instead of (x - sin x)
_F_SERIES_X = 0.5


class ConvergenceError(RuntimeError):
    """Series did not meet its tail tolerance; carries the partial sum."""

    def __init__(self, message: str, partial: np.ndarray, tail_norm: float, n_terms: int):
        super().__init__(message)
        self.partial = partial
        self.tail_norm = tail_norm
        self.n_terms = n_terms


# ---------------------------------------------------------------------------
# scalar coefficient functions


def _check_omega(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or not np.all(np.isfinite(omega)):
        raise ValueError("omega must be finite and non-negative")
    return omega


def f_function(omega, t):
    """``f = (Omega t - sin Omega t) / Omega^3``.

    Near ``Omega t = 0`` the difference cancels catastrophically, so a Taylor
    series in ``x = Omega t`` is summed instead.  ``omega = 0`` gives the
    limit ``t^3 / 6``.
    """
    omega = _check_omega(omega)
    t = np.asarray(t, dtype=float)
    x = omega * t
    small = np.abs(x) < _F_SERIES_X
    # (x - sin x)/x^3 = sum_k (-1)^k x^(2k) / (2k+3)!
    xs = np.where(small, x, 0.0)
    ser = np.zeros_like(xs)
    for k in range(9, -1, -1):
        ser = ser * xs * xs + (-1) ** k / factorial(2 * k + 3)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (x - np.sin(x)) / omega**3
    out = np.where(small, ser * t**3, direct)
    return out if out.ndim else float(out)


def df_dt(omega, t):
    """``d f / d t = 2 sin^2(Omega t / 2) / Omega^2``, with limit ``t^2 / 2``."""
    omega = _check_omega(omega)
    t = np.asarray(t, dtype=float)
    half = 0.5 * t * np.sinc(omega * t / (2 * np.pi))
    out = 2.0 * half**2
    return out if out.ndim else float(out)


def sin_over(omega, t):
    """``sin(Omega t) / Omega`` with the ``Omega -> 0`` limit ``t``."""
    omega = _check_omega(omega)
    out = np.asarray(t, dtype=float) * np.sinc(omega * np.asarray(t) / np.pi)
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# series


def bandwidth(a: np.ndarray) -> int:
    nz = np.argwhere(np.abs(a) > 0)
    if nz.size == 0:
        return 0
    return int(np.abs(nz[:, 0] - nz[:, 1]).max())


def _banded_commutator(diags, a):
    """``[H, a]`` where ``H`` is given as ``{offset: diagonal}``."""
    out = np.zeros_like(a)
    n = a.shape[0]
    for k, d in diags.items():
        if k >= 0:
            # (H a)[i, :] += H[i, i+k] a[i+k, :]
            out[: n - k, :] += d[:, None] * a[k:, :]
            # (a H)[:, j] with H[j-k, j]: column j picks a[:, j-k]
            out[:, k:] -= a[:, : n - k] * d[None, :]
        else:
            m = -k
            out[m:, :] += d[:, None] * a[: n - m, :]
            out[:, : n - m] -= a[:, m:] * d[None, :]
    return out


def _shift(v, s: int):
    """``out[i] = v[i + s]``, zero where ``i + s`` falls outside."""
    out = np.zeros_like(v)
    n = v.shape[0]
    if s >= 0:
        out[: n - s] = v[s:]
    else:
        out[-s:] = v[: n + s]
    return out


def _to_diags(a, limit: int) -> dict:
    """Diagonals ``D_k[i] = a[i, i+k]`` for ``|k| <= limit``, zero-padded to full length."""
    n = a.shape[0]
    out = {}
    for k in range(-limit, limit + 1):
        d = np.zeros(n, dtype=a.dtype)
        if k >= 0:
            d[: n - k] = np.diagonal(a, k)
        else:
            d[-k:] = np.diagonal(a, k)
        out[k] = d
    return out


def _from_diags(diags: dict, n: int, dtype) -> np.ndarray:
    out = np.zeros((n, n), dtype=dtype)
    idx = np.arange(n)
    for k, d in diags.items():
        rows = idx[max(0, -k): n - max(0, k)]
        out[rows, rows + k] = d[rows]
    return out


def _diag_commutator(hd: dict, ad: dict, limit: int) -> dict:
    """``[H, A]`` in diagonal storage, keeping offsets up to ``limit``."""
    out = {}
    for k, hk in hd.items():
        for l, al in ad.items():
            o = k + l
            if abs(o) > limit:
                continue
            # (HA)[i, i+o] = H[i, i+k] A[i+k, i+o];  (AH)[i, i+o] = A[i, i+l] H[i+l, i+o]
            c = hk * _shift(al, k) - al * _shift(hk, l)
            out[o] = out[o] + c if o in out else c
    return out


@dataclass(frozen=True, eq=False)
class SeriesSetup:
    """Inputs for :func:`char_series`; see there for ``levels`` and ``band_limit``."""

    h: np.ndarray
    dh: np.ndarray
    levels: np.ndarray | None = None
    band_limit: int | None = None
    block: int | None = None


@dataclass(frozen=True, eq=False)
class SeriesSum:
    value: np.ndarray
    n_terms: int
    tail_norm: float


def char_series(h, dh, t: float, n_max: int = SERIES_NMAX,
                tail_tol: float = SERIES_TAIL_TOL, levels=None,
                band_limit: int | None = None, block: int | None = None) -> SeriesSum:
    """Sum the commutator series for ``H_theta`` in ``clongdouble``.

    Summation stops once two consecutive terms fall below
    ``tail_tol * ||partial sum||``, both norms taken on the leading
    ``block x block`` corner when ``block`` is given.

    ``levels`` switches on light-cone mode for truncated Fock operators:
    ``levels[i]`` is the boson occupation of basis state ``i``.  After the
    ``n``-th commutator every entry touching a level within ``n * b`` of the
    cutoff (``b`` the bandwidth of ``H``) is zeroed, so the surviving entries
    are exactly those of the untruncated operator.  The caller must supply
    matrices built large enough that the block of interest survives.

    ``band_limit`` keeps only entries with ``|i - j| <= band_limit`` (the
    terms are then stored by diagonals, which is much cheaper).  Use it only when every term is known to be that narrow (for
    instance when the commutators close on ``x``, ``p`` and the identity).
    Round-off at band distance ``k`` is otherwise multiplied by roughly
    ``k`` times the physical growth per step and swamps the sum.
    """
    if not np.isfinite(t):
        raise ValueError("time must be finite")
    h = as_hermitian(h)
    dh = as_hermitian(dh)
    hl = h.astype(np.clongdouble)
    term = dh.astype(np.clongdouble)
    dim = h.shape[0]

    b = bandwidth(h)
    if levels is not None:
        levels = np.asarray(levels)
        if levels.shape != (dim,):
            raise ValueError("levels must have one entry per basis state")
        top = int(levels.max()) + 1

    blk = dim if block is None else int(block)
    it = np.clongdouble(1j) * np.longdouble(t)
    coef = np.clongdouble(1j) * it  # i (it)^(n+1) / (n+1)!  at n = 0

    if band_limit is not None:
        # diagonal storage: every term lives on offsets |k| <= band_limit
        limit = int(band_limit)
        if bandwidth(dh) > limit:
            raise ValueError("dH is wider than band_limit")
        hd = _to_diags(hl, b)
        term_d = _to_diags(term, limit)
        if levels is not None:
            lev_d = {k: np.maximum(levels, _shift(levels, k)) for k in term_d}
            valid = {k: _shift(np.ones(dim, bool), k) for k in term_d}
        total_d = {k: coef * d for k, d in term_d.items()}

        def blk_norm(ds):
            # entry (i, i+k) lies in the block iff 0 <= i, i+k < blk
            acc = 0.0
            for k, d in ds.items():
                part = d[: max(0, blk - k)] if k >= 0 else d[-k:blk]
                acc += float(np.sum(np.abs(part) ** 2))
            return float(np.sqrt(acc))

        small_run, last, n = 0, 0.0, 0
        for n in range(1, n_max + 1):
            term_d = _diag_commutator(hd, term_d, limit)
            if levels is not None:
                for k in term_d:
                    term_d[k][(lev_d[k] >= top - n * b) | ~valid[k]] = 0
            coef = coef * it / (n + 1)
            contrib = {k: coef * d for k, d in term_d.items()}
            for k, d in contrib.items():
                total_d[k] = total_d[k] + d if k in total_d else d
            last, scale = blk_norm(contrib), blk_norm(total_d)
            if last <= tail_tol * scale or scale == 0.0:
                small_run += 1
                if small_run >= 2:
                    break
            else:
                small_run = 0
        total = _from_diags(total_d, dim, np.clongdouble)
    else:
        if b <= max(1, dim // 8):
            diags = {k: np.diagonal(hl, k).copy() for k in range(-b, b + 1)}
            comm = lambda a: _banded_commutator(diags, a)  # noqa: E731
        else:
            comm = lambda a: hl @ a - a @ hl  # noqa: E731
        if levels is not None:
            lev_max = np.maximum.outer(levels, levels)

        total = coef * term
        small_run, last, n = 0, 0.0, 0
        for n in range(1, n_max + 1):
            term = comm(term)
            if levels is not None:
                term[lev_max >= top - n * b] = 0
            coef = coef * it / (n + 1)
            contrib = coef * term
            total = total + contrib
            last = float(np.sqrt(np.sum(np.abs(contrib[:blk, :blk]) ** 2)))
            scale = float(np.sqrt(np.sum(np.abs(total[:blk, :blk]) ** 2)))
            if last <= tail_tol * scale or scale == 0.0:
                small_run += 1
                if small_run >= 2:
                    break
            else:
                small_run = 0
    value = np.asarray(total, dtype=complex)
    value = 0.5 * (value + value.conj().T)
    if small_run < 2:
        raise ConvergenceError(
            f"series not converged after {n_max} terms (last term norm {last:.3e})",
            value, last, n_max,
        )
    return SeriesSum(value, n + 1, last)


# ---------------------------------------------------------------------------
# closed forms


def char_closed(h, dh, t: float, structure: ConservedStructure) -> np.ndarray:
    """Resummed ``H_theta = f V - (sin Omega t / Omega) dH - (2i/Omega^2) sin^2(Omega t/2) [H, dH]``.

    Raises :class:`StructureError` unless ``structure`` passed verification.
    """
    structure.require()
    dh = np.asarray(dh, dtype=complex)
    if structure.commuting:
        return -t * dh
    w = structure.omega
    out = (
        f_function(w, t) * structure.v
        - sin_over(w, t) * dh
        - 1j * df_dt(w, t) * commutator(h, dh)
    )
    return 0.5 * (out + out.conj().T)


def char_intermediate(h, dh, t: float, omega: float) -> np.ndarray:
    """``[-t - i f_t H^x + f (H^x)^2] dH``, the form before ``V`` is introduced."""
    a1 = commutator(h, dh)
    a2 = commutator(h, a1)
    out = -t * np.asarray(dh) - 1j * df_dt(omega, t) * a1 + f_function(omega, t) * a2
    return 0.5 * (out + out.conj().T)


def char_longtime(v, omega: float, t: float) -> np.ndarray:
    """Dominant secular part ``(t / Omega^2) V``."""
    if omega <= 0:
        raise ValueError("omega must be positive")
    return (t / omega**2) * np.asarray(v, dtype=complex)


def char_trivial_v(h, dh, t: float, structure: ConservedStructure, keep=None) -> np.ndarray:
    """``H_theta`` with a scalar ``V``; the resulting ``f V`` multiple of identity is dropped."""
    structure.require()
    if structure.v_scalar(keep) is None:
        raise StructureError("V is not proportional to the identity")
    w = structure.omega
    out = -sin_over(w, t) * np.asarray(dh, dtype=complex) - 1j * df_dt(w, t) * commutator(h, dh)
    return 0.5 * (out + out.conj().T)


# ---------------------------------------------------------------------------
# finite-difference oracle


def hermitize(a) -> tuple[np.ndarray, float]:
    """Return ``(a + a^dagger)/2`` and the Frobenius defect ``||a - a^dagger|| / 2``."""
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T), 0.5 * float(np.linalg.norm(a - a.conj().T))


def richardson(fun: Callable[[float], np.ndarray], x: float, step: float = FD_STEP):
    """Central difference at steps ``h`` and ``h/2`` combined once, ``h = step * max(1, |x|)``.

    Scaling with ``|x|`` keeps the round-off term, which grows like
    ``eps / h``, in proportion for large parameter values.
    """
    step = step * max(1.0, abs(float(x)))

    def central(e):
        return (np.asarray(fun(x + e)) - np.asarray(fun(x - e))) / (2 * e)

    return (4.0 * central(step / 2) - central(step)) / 3.0


def char_exact(h_of_theta: Callable[[float], np.ndarray], theta: float, t: float,
               step: float = FD_STEP, return_defect: bool = False):
    """``i (d_theta U^dagger) U`` by Richardson-extrapolated central differences."""
    du = richardson(lambda th: evolve(h_of_theta(th), t), theta, step)
    u = evolve(h_of_theta(theta), t)
    out, defect = hermitize(1j * du.conj().T @ u)
    return (out, defect) if return_defect else out


# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CharOperatorBundle:
    """Up to three constructions of ``H_theta`` and their pairwise distances.

    ``deviations[(a, b)]`` is ``||H_a - H_b|| / (1 + ||H_b||)`` measured on the
    ``keep`` block; ``exact_defect`` is the anti-Hermitian part discarded from
    the finite-difference result.
    """

    t: float
    h_series: np.ndarray | None = None
    h_closed: np.ndarray | None = None
    h_exact: np.ndarray | None = None
    series_terms: int | None = None
    exact_defect: float | None = None
    deviations: dict = field(default_factory=dict)
    series_error: str | None = None
    series_skipped: str | None = None


def char_bundle(h, dh, t: float, *, structure: ConservedStructure | None = None,
                h_of_theta=None, theta: float | None = None, keep=None,
                series=None, n_max: int = SERIES_NMAX) -> CharOperatorBundle:
    """Build every available construction and compare them on the ``keep`` block.

    ``series`` optionally replaces the series inputs with a
    :class:`SeriesSetup` (truncated Fock models need a larger cutoff there,
    see :func:`char_series`).  ``h_of_theta`` may likewise build a larger
    matrix.  Either way the leading block matching ``h`` is kept.  A series
    that fails to converge is left out and its message stored in
    ``series_error``.  The series is skipped (reason in ``series_skipped``)
    when a verified structure puts ``Omega t`` above ``SERIES_MAX_OMEGA_T``.
    """
    ops: dict[str, np.ndarray] = {}
    series_terms = exact_defect = series_error = series_skipped = None
    d = h.shape[0]

    wt = structure.omega * abs(t) if structure is not None and structure.passed else 0.0
    if wt > SERIES_MAX_OMEGA_T:
        series_skipped = f"Omega t = {wt:.3g} exceeds {SERIES_MAX_OMEGA_T:g}"
    else:
        setup = SeriesSetup(h, dh) if series is None else series
        try:
            res = char_series(setup.h, setup.dh, t, n_max=n_max, levels=setup.levels,
                              band_limit=setup.band_limit, block=setup.block)
        except ConvergenceError as exc:
            series_error = str(exc)
        else:
            ops["series"] = res.value[:d, :d]
            series_terms = res.n_terms

    if structure is not None and structure.passed:
        ops["closed"] = char_closed(h, dh, t, structure)
    if h_of_theta is not None:
        exact, exact_defect = char_exact(h_of_theta, theta, t, return_defect=True)
        ops["exact"] = exact[:d, :d]

    names = list(ops)
    devs = {}
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            ra, rb = restrict(ops[a], keep), restrict(ops[b], keep)
            devs[(a, b)] = float(np.linalg.norm(ra - rb) / (1.0 + np.linalg.norm(rb)))
    return CharOperatorBundle(
        t=t,
        h_series=ops.get("series"),
        h_closed=ops.get("closed"),
        h_exact=ops.get("exact"),
        series_terms=series_terms,
        exact_defect=exact_defect,
        deviations=devs,
        series_error=series_error,
        series_skipped=series_skipped,
    )
