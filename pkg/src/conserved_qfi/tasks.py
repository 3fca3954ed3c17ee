"""Per-grid-point computations behind the command-line interface.

Each ``task_*`` function takes plain data (model name, parameter dict, grid
coordinates, options) and returns a list of row dicts, so grid points can be
shipped to worker processes.  Every row carries ``status`` (``ok``, ``fail``
or ``error``) and ``message``; numeric checks compare each computed value
with an independent oracle at the tolerances in :data:`TOLERANCES`.
"""
from __future__ import annotations

import numpy as np

from .altqfi import alt_qfi_direct_oracle, alt_qfi_thermal, alt_qfi_unitary, unitary_family
from .charop import ConvergenceError, char_bundle
from .models import AnisotropicXY, FerromagneticTwoSpin, Optomechanics, SpinOneTwisting, get_model
from .models.scan import optimal_state_scan
from .models.twospin import phi_state, psi_opt
from .operators import (
    PureState, SpectralState, commutator, random_hermitian, random_mixed_state, random_pure_state,
)
from .qfi import (
    family_sld_oracle, qfi_fd_oracle, qfi_mixed, qfim_fd_oracle, qfim_mixed, saturation_check,
    sld_residual,
)
from .structure import restrict, verify
from .thermal import (
    qfi_thermal, qfi_thermal_reference, sld_bernoulli_series, sld_thermal_closed, spectral_spread,
    thermal_family, thermal_state,
)

TOLERANCES = {
    "structure": 1e-10,
    "series_closed": 1e-9,
    "vs_exact": 1e-6,
    "qfi": 1e-5,
    "thermal": 1e-6,
    "sld_residual": 1e-7,
    "bernoulli": 1e-7,
    "alt_forms": 1e-9,
    "alt_oracle": 1e-5,
    "optimality": 1e-6,
}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _status(row: dict, failures: list[str]) -> dict:
    row["status"] = "fail" if failures else "ok"
    row["message"] = "; ".join(failures)
    return row


def _traceless(a):
    return a - np.trace(a) / a.shape[0] * np.eye(a.shape[0])


def _which_list(m, which) -> list[str]:
    if which is not None:
        return [m._which(which)]
    if isinstance(m, Optomechanics):
        return [m.params["param"]]
    return list(m.estimable)


# ---------------------------------------------------------------------------
# reference forms (their signatures differ between models)


def reference_char(m, which: str, t: float):
    if isinstance(m, AnisotropicXY):
        return m.reference_char(which, t)
    if isinstance(m, Optomechanics):
        return None if m.params["full"] else m.reference_char(t, which)
    return m.reference_char(t)


def reference_qfi(m, which: str, t: float, state, state_name: str):
    if not isinstance(state, PureState):
        return None
    if isinstance(m, AnisotropicXY):
        return m.reference_qfi(which, t, state)
    if isinstance(m, (FerromagneticTwoSpin, SpinOneTwisting)):
        return m.reference_qfi(t, state)
    if isinstance(m, Optomechanics) and state_name == "vacuum":
        return m.reference_vacuum_qfi(t, which)
    return None


def reference_thermal(m, which: str, beta: float):
    if isinstance(m, AnisotropicXY):
        return m.reference_thermal_qfi(which, beta)
    if isinstance(m, FerromagneticTwoSpin):
        return m.reference_thermal_qfi(beta)
    return None


# ---------------------------------------------------------------------------
# states


def resolve_state(m, selector: str | None):
    """Initial state from a selector string.

    ``NAME`` picks a reference state of the model, ``family:a1,a2,phi`` the
    ``a1|00> + a2 e^{i phi}|11>`` family, ``phi_family:b1,b2,phi`` the
    ``b1|01> + b2 e^{i phi}|10>`` family, ``random:SEED`` a random pure state,
    ``mixed:SEED`` a random full-rank mixed state and ``thermal:T`` the Gibbs
    state of the model at temperature ``T``.
    """
    refs = m.reference_states()
    if selector is None:
        selector = next(iter(refs)) if refs else "random:0"
    kind, _, arg = selector.partition(":")
    if not arg:
        if selector in refs:
            return refs[selector]
        raise ValueError(f"unknown state {selector!r} for {m.name}; reference states: {sorted(refs)}")
    if kind in ("family", "phi_family"):
        if m.dim != 4:
            raise ValueError(f"{kind} needs a two-qubit model")
        a1, a2, phi = (float(x) for x in arg.split(","))
        return (psi_opt if kind == "family" else phi_state)(a1, a2, phi)
    if kind == "random":
        return random_pure_state(m.dim, np.random.default_rng(int(arg)))
    if kind == "mixed":
        return random_mixed_state(m.dim, np.random.default_rng(int(arg)))
    if kind == "thermal":
        return thermal_state(m.h(), 1.0 / float(arg))
    raise ValueError(f"unknown state selector {selector!r}")


def _pad(state, dim: int):
    """Embed ``state`` into the leading block of a ``dim``-dimensional space."""
    d = state.dim
    if d == dim:
        return state
    if isinstance(state, PureState):
        amp = np.zeros(dim, dtype=complex)
        amp[:d] = state.amplitudes
        return PureState(amp)
    vecs = np.zeros((dim, state.vectors.shape[1]), dtype=complex)
    vecs[:d] = state.vectors
    return SpectralState(state.probs, vecs, state.support_cutoff)


# ---------------------------------------------------------------------------
# tasks


def task_verify(model: str, params: dict, coords: dict, options: dict) -> list[dict]:
    if model == "random":
        rng = np.random.default_rng(int(params.get("seed", 0)))
        dim = int(params.get("dim", 4))
        st = verify(random_hermitian(dim, rng), random_hermitian(dim, rng))
        fails = []
        if st.conservation_residual > TOLERANCES["structure"] or st.eigenop_residual > TOLERANCES["structure"]:
            fails.append("structure residual above tolerance")
        return [_status({
            "which": "theta", "omega_sq": st.omega_sq,
            "conservation_residual": st.conservation_residual,
            "eigenop_residual": st.eigenop_residual,
        }, fails)]
    m = get_model(model, **params)
    rows = []
    for which in _which_list(m, options.get("which")):
        st = m.structure(which)
        row = {
            "which": which, "omega_sq": st.omega_sq,
            "conservation_residual": st.conservation_residual,
            "eigenop_residual": st.eigenop_residual,
        }
        fails = []
        if st.conservation_residual > TOLERANCES["structure"]:
            fails.append("conservation residual above tolerance")
        if st.eigenop_residual > TOLERANCES["structure"]:
            fails.append("eigenoperator residual above tolerance")
        if "t" in coords and st.passed:
            sub = _charop_row(m, which, float(coords["t"]))
            fails += sub.pop("_fails")
            row.update(sub)
        rows.append(_status(row, fails))
    return rows


def _charop_row(m, which: str, t: float) -> dict:
    st = m.structure(which)
    try:
        series = m.series_setup(which)
    except ValueError:
        series = None
    b = char_bundle(m.h(), m.dh(which), t, structure=st, h_of_theta=m.exact_provider(which),
                    theta=float(m.params[which]), keep=m.keep, series=series)
    row = {"omega": st.omega, "series_terms": b.series_terms, "series_skipped": b.series_skipped}
    fails = []
    if b.series_error:
        fails.append(b.series_error)
    names = {("series", "closed"): "dev_series_closed", ("series", "exact"): "dev_series_exact",
             ("closed", "exact"): "dev_closed_exact"}
    for key, col in names.items():
        if key in b.deviations:
            dev = b.deviations[key]
            row[col] = dev
            tol = TOLERANCES["series_closed"] if key == ("series", "closed") else TOLERANCES["vs_exact"]
            if dev > tol:
                fails.append(f"{col} above {tol:g}")
    row["exact_defect"] = b.exact_defect
    ref = reference_char(m, which, t)
    if ref is not None and b.h_exact is not None:
        # modulo the identity: a number term does not change any QFI
        ra, rb = _traceless(restrict(ref, m.keep)), _traceless(restrict(b.h_exact, m.keep))
        row["dev_reference_exact"] = float(np.linalg.norm(ra - rb) / (1.0 + np.linalg.norm(rb)))
    row["_fails"] = fails
    return row


def task_charop(model: str, params: dict, coords: dict, options: dict) -> list[dict]:
    m = get_model(model, **params)
    rows = []
    for which in _which_list(m, options.get("which")):
        row = {"which": which}
        row.update(_charop_row(m, which, float(coords["t"])))
        fails = row.pop("_fails")
        rows.append(_status(row, fails))
    return rows


def task_qfi(model: str, params: dict, coords: dict, options: dict) -> list[dict]:
    m = get_model(model, **params)
    t = float(coords["t"])
    name = options.get("state")
    state = resolve_state(m, name)
    rows = []
    for which in _which_list(m, options.get("which")):
        h_theta = m.char_operator(t, which)
        f = qfi_mixed(state, h_theta)
        provider = m.exact_provider(which)
        big = provider(float(m.params[which])).shape[0]
        oracle = qfi_fd_oracle(provider, float(m.params[which]), t, _pad(state, big))
        row = {"which": which, "qfi": f, "qfi_oracle": oracle, "abs_diff": abs(f - oracle)}
        ref = reference_qfi(m, which, t, state, name or "")
        if ref is not None:
            row["qfi_reference"] = ref
            row["ratio_oracle_reference"] = oracle / ref if ref != 0 else None
        fails = []
        if abs(f - oracle) > TOLERANCES["qfi"] * (1 + abs(f)):
            fails.append("qfi differs from the fidelity oracle")
        rows.append(_status(row, fails))
    return rows


def task_qfim(model: str, params: dict, coords: dict, options: dict) -> list[dict]:
    m = get_model(model, **params)
    t = float(coords["t"])
    state = resolve_state(m, options.get("state"))
    names = list(m.estimable)
    hs = [m.char_operator(t, w) for w in names]
    closed = qfim_mixed(state, hs, labels=names)
    provider = m.exact_vector_provider(names)
    theta = np.array([float(m.params[w]) for w in names])
    big = provider(theta).shape[0]
    oracle = qfim_fd_oracle(provider, theta, t, _pad(state, big), labels=names)
    row, worst = {}, 0.0
    for i, a in enumerate(names):
        for j in range(i, len(names)):
            b = names[j]
            row[f"F_{a}_{b}"] = closed.entries[i, j]
            row[f"F_{a}_{b}_oracle"] = oracle.entries[i, j]
            worst = max(worst, abs(closed.entries[i, j] - oracle.entries[i, j])
                        / (1 + abs(closed.entries[i, j])))
    row["max_rel_diff"] = worst
    row["min_eigenvalue"] = closed.min_eigenvalue
    row["commutator_norm"] = float(np.linalg.norm(commutator(hs[0], hs[1]))) if len(hs) > 1 else 0.0
    if isinstance(state, PureState) and len(hs) > 1:
        row["saturation_residual"] = saturation_check(state, hs[0], hs[1])
    if isinstance(m, AnisotropicXY) and isinstance(state, PureState):
        ref = m.reference_offdiag(t, state)
        row["offdiag_reference"] = ref
        row["ratio_offdiag"] = oracle.entries[0, 1] / ref if abs(ref) > 1e-12 else None
    fails = []
    if worst > TOLERANCES["qfi"]:
        fails.append("QFIM differs from the fidelity oracle")
    return [_status(row, fails)]


def task_thermal(model: str, params: dict, coords: dict, options: dict) -> list[dict]:
    m = get_model(model, **params)
    temp = float(coords["T"])
    beta = 1.0 / temp
    rows = []
    for which in _which_list(m, options.get("which")):
        st = m.structure(which)
        h, dh = m.h(), m.dh(which)
        f = qfi_thermal(h, dh, beta, st)
        family = thermal_family(m.h_of(which), beta)
        theta = float(m.params[which])
        _, oracle, drho = family_sld_oracle(family, theta)
        L = sld_thermal_closed(h, dh, beta, st)
        res = sld_residual(family(theta), L, drho)
        row = {"which": which, "F_T": f, "F_T_oracle": oracle, "rel_diff": _rel(f, oracle),
               "sld_residual": res, "F_T_reference_scalar": qfi_thermal_reference(h, dh, beta, st)}
        ref = reference_thermal(m, which, beta)
        if ref is not None:
            row["F_T_reference"] = ref
            row["ratio_oracle_reference"] = oracle / ref if ref != 0 else None
        row["beta_spread"] = beta * spectral_spread(h)
        try:
            ser = sld_bernoulli_series(h, dh, beta)
        except ConvergenceError:
            row["bernoulli_dev"] = None
        else:
            row["bernoulli_dev"] = float(np.linalg.norm(ser.value - L) / max(np.linalg.norm(L), 1e-300))
        fails = []
        if row["rel_diff"] > TOLERANCES["thermal"]:
            fails.append("F_T differs from the SLD oracle")
        if res > TOLERANCES["sld_residual"]:
            fails.append("closed SLD does not solve the SLD equation")
        rows.append(_status(row, fails))
    return rows


def task_altqfi(model: str, params: dict, coords: dict, options: dict) -> list[dict]:
    m = get_model(model, **params)
    rows = []
    for which in _which_list(m, options.get("which")):
        theta = float(m.params[which])
        fails = []
        if "T" in coords:
            beta = 1.0 / float(coords["T"])
            res = alt_qfi_thermal(m.h(), m.dh(which), beta, m.structure(which))
            orc = alt_qfi_direct_oracle(thermal_family(m.h_of(which), beta), theta)
            value = res.value
            row = {"which": which, "I": value, "I_oracle": orc.value,
                   "rel_diff": _rel(value, orc.value)}
            for (order, lz), val in sorted(res.variants.items()):
                row[f"I_{order}{'' if lz else '_nolog'}"] = val
        else:
            t = float(coords["t"])
            state = resolve_state(m, options.get("state"))
            h_theta = m.char_operator(t, which)
            res = alt_qfi_unitary(state, h_theta)
            value = res.value
            orc = alt_qfi_direct_oracle(unitary_family(m.h_of(which), t, state), theta)
            f = qfi_mixed(state, h_theta)
            row = {"which": which, "I_trace": res.trace_form, "I_spectral": res.spectral_form,
                   "I_oracle": orc.value, "rel_diff": _rel(res.value, orc.value), "qfi": f,
                   "ratio_I_F": res.value / f if f > 1e-12 else None}
            if res.mismatch > TOLERANCES["alt_forms"] * (1 + abs(res.value)):
                fails.append("trace and spectral forms disagree")
        row["min_gap"] = orc.min_gap
        if abs(value - orc.value) > TOLERANCES["alt_oracle"] * (1 + abs(orc.value)):
            fails.append("alternative QFI differs from the direct oracle")
        rows.append(_status(row, fails))
    return rows


def task_optimal(model: str, params: dict, coords: dict, options: dict) -> list[dict]:
    m = get_model(model, **params)
    longtime = bool(options.get("longtime"))
    t = float(coords.get("t", 1.0))
    which = options.get("which")
    scan = optimal_state_scan(m, t, which=which, longtime=longtime,
                              seed=int(options.get("seed", 0)))
    rows = []
    for phi, rho, f, res in scan.locus:
        row = {"phi": phi, "rho": rho, "qfi": f, "residual": res}
        if longtime and isinstance(m, FerromagneticTwoSpin):
            row["rho_locus"] = float(m.longtime_locus(phi))
        row.update({"family_max": scan.family_max, "spectral_max": scan.spectral_max,
                    "random_max": scan.random_max})
        fails = []
        if abs(res) > TOLERANCES["optimality"]:
            fails.append("optimality residual above tolerance")
        if scan.random_excess > TOLERANCES["optimality"]:
            fails.append("random state beats the family")
        rows.append(_status(row, fails))
    if not rows:
        rows.append(_status({}, ["no locus point inside the ratio range"]))
    return rows


def task_phi_opt(model: str, params: dict, coords: dict, options: dict) -> list[dict]:
    m = get_model(model, **params)
    t = float(coords["t"])
    if isinstance(m, FerromagneticTwoSpin):
        phi, b = m.phi_opt(t), m.params["B"]
    elif isinstance(m, AnisotropicXY):
        phi, b = m.phi_opt_minus(t), m.params["Bm"]
    else:
        raise ValueError("phi_opt is defined for h1 and h2")
    return [_status({"phi_opt": phi, "phi_weak_field": float(np.arctan(4 * b * t / 3))}, [])]


TASKS = {
    "verify": task_verify,
    "charop": task_charop,
    "qfi": task_qfi,
    "qfim": task_qfim,
    "thermal": task_thermal,
    "altqfi": task_altqfi,
    "optimal": task_optimal,
    "phi_opt": task_phi_opt,
}


def run_point(job: tuple) -> list[dict]:
    """Evaluate one grid point; exceptions become a single ``error`` row."""
    kind, model, params, coords, options = job
    try:
        rows = TASKS[kind](model, params, coords, options)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        rows = [{"status": "error", "message": f"{type(exc).__name__}: {exc}"}]
    out = []
    for r in rows:
        full = {**coords, **r}
        bad = [k for k, v in full.items() if isinstance(v, float) and not np.isfinite(v)]
        for k in bad:
            full[k] = None
        if bad and full.get("status") == "ok":
            full["status"] = "fail"
            full["message"] = "non-finite " + ",".join(bad)
        out.append(full)
    return out
