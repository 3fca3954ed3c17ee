"""Factor audit: reference closed forms of the model section against independent oracles.

Each entry evaluates one reference formula on a 10-point grid next to a value
computed without it (finite-difference fidelity QFI, spectral range of the
finite-difference ``H_theta``, or the SLD solve for thermal states) and
reports the ratio ``oracle / reference``.  A formula that is right up to a
constant factor shows a stable ratio; a formula with the wrong parameter
dependence does not.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .charop import char_exact
from .operators import PureState, random_pure_state
from .qfi import family_sld_oracle, qfi_fd_oracle, qfim_fd_oracle
from .thermal import thermal_family
from .models import h1_bundle, h2_bundle, h3_bundle, optomech_bundle

STABILITY_TOL = 1e-6
GRID_POINTS = 10


@dataclass(frozen=True)
class AuditPoint:
    coords: dict
    reference: float
    oracle: float

    @property
    def ratio(self) -> float:
        return self.oracle / self.reference if self.reference != 0 else float("inf")


@dataclass(frozen=True)
class AuditEntry:
    """One audited formula.  ``expected`` is the anticipated ratio (``None`` if none)."""

    formula: str
    description: str
    points: list = field(default_factory=list)
    expected: float | None = None

    @property
    def ratios(self) -> np.ndarray:
        return np.array([p.ratio for p in self.points])

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def spread(self) -> float:
        """``(max - min) / |mean|`` of the ratios."""
        r = self.ratios
        if not np.all(np.isfinite(r)):
            return float("inf")
        return float((r.max() - r.min()) / abs(r.mean()))

    @property
    def stable(self) -> bool:
        return self.spread <= STABILITY_TOL

    @property
    def matches_expected(self) -> bool:
        if self.expected is None or not self.stable:
            return False
        return abs(self.mean_ratio / self.expected - 1.0) <= STABILITY_TOL


def _spectral_range_sq(h) -> float:
    w = np.linalg.eigvalsh(h)
    return float((w[-1] - w[0]) ** 2)


def _grid(lo, hi, n=GRID_POINTS):
    return np.linspace(lo, hi, n)


def audit_h1_fmax() -> AuditEntry:
    entry = AuditEntry("h1_fmax", "4|x|^2 vs largest 4 Var(H_B) over states", expected=4.0)
    for b, t in zip(_grid(0.2, 2.0), _grid(0.5, 8.0)):
        m = h1_bundle(B=float(b))
        h_ex = char_exact(m.h_of("B"), float(b), float(t))
        entry.points.append(AuditPoint({"B": b, "t": t}, m.reference_fmax(t), _spectral_range_sq(h_ex)))
    return entry


def audit_h1_prefactor(seed: int = 0) -> AuditEntry:
    entry = AuditEntry("h1_prefactor_16_3", "(16/3)[|x|^2<|J|^2> - 3(x.<J>)^2] vs fidelity QFI",
                       expected=4.0)
    rng = np.random.default_rng(seed)
    for b, t in zip(_grid(0.2, 2.0), _grid(0.5, 8.0)):
        m = h1_bundle(B=float(b))
        state = random_pure_state(4, rng)
        oracle = qfi_fd_oracle(m.h_of("B"), float(b), float(t), state)
        entry.points.append(AuditPoint({"B": b, "t": t}, m.reference_qfi(t, state), oracle))
    return entry


def audit_h2_offdiag(seed: int = 0) -> AuditEntry:
    entry = AuditEntry("h2_offdiag", "-<H+><H-> vs off-diagonal fidelity QFIM entry", expected=4.0)
    rng = np.random.default_rng(seed)
    for bp, t in zip(_grid(0.1, 1.0), _grid(0.5, 8.0)):
        m = h2_bundle(gamma=0.5, Bp=float(bp), Bm=0.7)
        state = random_pure_state(4, rng)
        q = qfim_fd_oracle(m.h_of_vector(("Bp", "Bm")), [m.params["Bp"], m.params["Bm"]], float(t), state)
        entry.points.append(AuditPoint({"Bp": bp, "t": t}, m.reference_offdiag(t, state), q.entries[0, 1]))
    return entry


def audit_h3_fmax() -> AuditEntry:
    entry = AuditEntry("h3_fmax", "4B^2[4B^2t^2/Omega^4 + chi^2] vs largest 4 Var(H_B)", expected=4.0)
    for chi, b, t in zip(_grid(0.5, 2.0), _grid(0.3, 1.5), _grid(1.0, 10.0)):
        m = h3_bundle(chi=float(chi), B=float(b))
        h_ex = char_exact(m.h_of("B"), float(b), float(t))
        entry.points.append(AuditPoint({"chi": chi, "B": b, "t": t}, m.reference_fmax(t),
                                       _spectral_range_sq(h_ex)))
    return entry


def _optomech_vacuum_oracle(m, t: float) -> float:
    which = m.params["param"]
    h_of = m.exact_provider(which)
    dim = h_of(m.params[which]).shape[0]
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    return qfi_fd_oracle(h_of, float(m.params[which]), t, PureState(vac))


def audit_optomech_fmax(param: str) -> AuditEntry:
    formula = {"m": "na^2 wa^2/(4 m^3 l^2 wb^5)", "l": "na^2 wa^2/(m l^4 wb^3)"}[param]
    entry = AuditEntry(f"optomech_fmax_{param}", f"{formula} vs vacuum fidelity QFI at t = pi/wb",
                       expected=4.0)
    for mass, wb in zip(_grid(10.0, 40.0), _grid(2.0, 5.0)):
        m = optomech_bundle(m=float(mass), wb=float(wb), param=param)
        oracle = _optomech_vacuum_oracle(m, np.pi / wb)
        entry.points.append(AuditPoint({"m": mass, "wb": wb}, m.reference_fmax_explicit(), oracle))
    return entry


def audit_optomech_curve() -> AuditEntry:
    entry = AuditEntry("optomech_vacuum_curve", "(na g'/wb)^2 (1 - cos wb t) vs vacuum fidelity QFI",
                       expected=4.0)
    m = optomech_bundle()
    wb = m.params["wb"]
    for t in _grid(0.3, 1.7) * np.pi / wb:
        entry.points.append(AuditPoint({"t": t}, m.reference_vacuum_qfi(t), _optomech_vacuum_oracle(m, t)))
    return entry


def audit_h1_thermal(temperature: float = 1.0) -> AuditEntry:
    entry = AuditEntry("h1_thermal", "reference F_T vs SLD of the thermal family", expected=1.0)
    beta = 1.0 / temperature
    for b in _grid(0.1, 3.0):
        m = h1_bundle(B=float(b))
        _, f, _ = family_sld_oracle(thermal_family(m.h_of("B"), beta), float(b))
        entry.points.append(AuditPoint({"B": b, "T": temperature}, m.reference_thermal_qfi(beta), f))
    return entry


AUDITS = {
    "h1_fmax": audit_h1_fmax,
    "h1_prefactor_16_3": audit_h1_prefactor,
    "h2_offdiag": audit_h2_offdiag,
    "h3_fmax": audit_h3_fmax,
    "optomech_fmax_m": lambda: audit_optomech_fmax("m"),
    "optomech_fmax_l": lambda: audit_optomech_fmax("l"),
    "optomech_vacuum_curve": audit_optomech_curve,
    "h1_thermal": audit_h1_thermal,
}


def run_audit(names=None) -> list[AuditEntry]:
    names = list(AUDITS) if names is None else list(names)
    return [AUDITS[n]() for n in names]
