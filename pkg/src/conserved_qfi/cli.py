"""Command-line front end: verification, sweeps and the factor audit, all emitting CSV.

Parameter axes accept ``start:stop:points`` (linear), ``start:stop:points:log``,
comma lists or a single value.  Grid points run on a process pool sized by
``CQFI_WORKERS`` (default 1); rows are always written in grid order, so the
output does not depend on the worker count.

Exit status: 0 when every check passes, 1 when any row fails, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .audit import AUDITS, STABILITY_TOL, run_audit
from .models import REGISTRY
from .tasks import TOLERANCES, resolve_state, run_point

WORKERS_ENV = "CQFI_WORKERS"
FLOAT_FMT = "%.12e"

# every model parameter that can be given on the command line
MODEL_FLAGS = ("B", "gamma", "Bp", "Bm", "chi", "wa", "wb", "m", "l", "na", "ncut", "param")
INT_PARAMS = {"na", "ncut"}
STR_PARAMS = {"param"}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# axes and grids


def parse_axis(text, name: str = "axis") -> list:
    """Values of one axis from its command-line or config form."""
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        values = [float(text)]
    elif isinstance(text, list):
        values = [float(x) for x in text]
    else:
        text = str(text).strip()
        try:
            if ":" in text:
                parts = text.split(":")
                if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] not in ("lin", "log")):
                    raise UsageError(f"{name}: expected start:stop:points[:lin|log], got {text!r}")
                start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
                if n < 2:
                    raise UsageError(f"{name}: a range needs at least 2 points")
                if len(parts) == 4 and parts[3] == "log":
                    if start <= 0 or stop <= 0:
                        raise UsageError(f"{name}: log axes need positive bounds")
                    values = list(np.geomspace(start, stop, n))
                else:
                    values = list(np.linspace(start, stop, n))
            else:
                values = [float(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise UsageError(f"{name}: cannot parse {text!r} ({exc})") from None
    if not values or not all(np.isfinite(values)):
        raise UsageError(f"{name}: values must be finite and non-empty")
    return [float(v) for v in values]


def _param_values(name: str, text) -> list:
    if name in STR_PARAMS:
        return [str(x) for x in (text if isinstance(text, list) else str(text).split(","))]
    values = parse_axis(text, name)
    if name in INT_PARAMS:
        if any(v != int(v) for v in values):
            raise UsageError(f"{name} must be an integer")
        return [int(v) for v in values]
    return values


def build_grid(model: str, cfg: dict, time_axis: str | None, temp_axis: str | None):
    """Return ``(params list, coords list)`` in deterministic grid order."""
    schema = REGISTRY[model]().params if model in REGISTRY else {}
    axes = []
    for name in MODEL_FLAGS:
        if cfg.get(name) is None:
            continue
        if name not in schema:
            raise UsageError(f"model {model} has no parameter {name!r}; known: {sorted(schema)}")
        axes.append((name, _param_values(name, cfg[name])))
    if time_axis is not None:
        axes.append(("t", parse_axis(time_axis, "t")))
    if temp_axis is not None:
        temps = parse_axis(temp_axis, "T")
        if any(x <= 0 for x in temps):
            raise UsageError("temperatures must be positive")
        axes.append(("T", temps))
    names = [a for a, _ in axes]
    points = []
    for combo in itertools.product(*(v for _, v in axes)):
        coords = dict(zip(names, combo))
        params = {k: v for k, v in coords.items() if k not in ("t", "T")}
        points.append((params, coords))
    return points


# ---------------------------------------------------------------------------
# output


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT % float(v)
    return str(v)


def render_csv(rows: list[dict], meta: dict) -> str:
    """CSV text with ``#`` metadata lines; columns in order of first appearance."""
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    # status and message last
    cols = [c for c in cols if c not in ("status", "message")] + ["status", "message"]
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def run_jobs(jobs: list[tuple], workers: int) -> list[dict]:
    if workers <= 1 or len(jobs) <= 1:
        results = [run_point(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_point, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [row for rows in results for row in rows]


# ---------------------------------------------------------------------------
# argument handling


SWEEP_KINDS = {
    "qfi": "qfi", "qfim": "qfim", "thermal": "thermal", "altqfi": "altqfi",
    "charop": "charop", "optimal_points": "optimal", "phi_opt": "phi_opt",
}
# default time axis per task kind (None: the kind takes no time axis by default)
DEFAULT_T = {"verify": "1,5", "charop": "1", "qfi": "1", "qfim": "1", "altqfi": "1",
             "optimal": "1", "phi_opt": "1", "thermal": None}


def _add_common(p: argparse.ArgumentParser, with_model: bool = True) -> None:
    if with_model:
        p.add_argument("model", nargs="?", help="h1, h2, h3 or optomech")
    for name in MODEL_FLAGS:
        p.add_argument(f"--{name}", default=None, help=f"model parameter {name} (axis)")
    p.add_argument("--t", default=None, help="time axis")
    p.add_argument("--T", default=None, help="temperature axis")
    p.add_argument("--which", default=None, help="estimated parameter (default: all)")
    p.add_argument("--state", default=None,
                   help="initial state: reference name, family:a1,a2,phi, phi_family:b1,b2,phi, "
                        "random:SEED, mixed:SEED or thermal:T")
    p.add_argument("--seed", type=int, default=None, help="seed for random draws (default 0)")
    p.add_argument("--config", default=None, help="JSON file of option values; flags override it")
    p.add_argument("--out", default=None, help="output CSV path (default: stdout)")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conserved-qfi", allow_abbrev=False,
        description="Characteristic-operator QFI for Hamiltonians with a conserved structure.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", allow_abbrev=False,
                       help="conserved-structure and three-way characteristic-operator checks")
    _add_common(p)
    p.add_argument("--dim", type=int, default=None, help="dimension of the random negative control")

    for name, helptext in [("charop", "series, closed and finite-difference H_theta"),
                           ("qfi", "pure or mixed-state QFI against the fidelity oracle"),
                           ("qfim", "multiparameter QFIM against the fidelity oracle"),
                           ("thermal", "thermal-state QFI against the SLD oracle"),
                           ("altqfi", "alternative QFI against the direct oracle")]:
        _add_common(sub.add_parser(name, allow_abbrev=False, help=helptext))

    p = sub.add_parser("sweep", allow_abbrev=False, help="parameter sweep emitting figure data")
    _add_common(p)
    kinds = p.add_mutually_exclusive_group()
    for flag in SWEEP_KINDS:
        kinds.add_argument(f"--{flag.replace('_', '-')}", dest=flag, action="store_true", default=None)
    p.add_argument("--longtime", action="store_true", default=None,
                   help="optimal points from the long-time form of H_theta")

    p = sub.add_parser("audit", allow_abbrev=False, help="reference closed forms against oracles")
    p.add_argument("--formula", action="append", default=None, choices=sorted(AUDITS),
                   help="audit only this formula (repeatable)")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None)
    return parser


def _merge_config(args: argparse.Namespace) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config must be a JSON object")
        unknown = set(cfg) - set(vars(args))
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for k, v in vars(args).items():
        if v is not None and k != "config":
            cfg[k] = v
    return cfg


def _kind(cfg: dict) -> str:
    cmd = cfg["command"]
    if cmd != "sweep":
        return cmd
    chosen = [SWEEP_KINDS[k] for k in SWEEP_KINDS if cfg.get(k)]
    if len(chosen) != 1:
        raise UsageError("sweep needs exactly one of " + ", ".join(
            "--" + k.replace("_", "-") for k in SWEEP_KINDS))
    return chosen[0]


def _meta(cfg: dict, kind: str, tolerances: dict) -> dict:
    recorded = {k: v for k, v in sorted(cfg.items()) if k not in ("out", "config")}
    return {
        "conserved-qfi": __version__,
        "command": cfg["command"],
        "task": kind,
        "config": json.dumps(recorded, sort_keys=True),
        "seed": cfg.get("seed", 0),
        "tolerances": json.dumps(tolerances, sort_keys=True),
    }


def _check_state(model: str, selector) -> None:
    """Reject a malformed state selector before any grid point runs."""
    if selector is None:
        return
    try:
        resolve_state(REGISTRY[model](), str(selector))
    except (ValueError, TypeError) as exc:
        raise UsageError(f"--state: {exc}") from None


def cmd_grid(cfg: dict) -> int:
    kind = _kind(cfg)
    model = cfg.get("model")
    if model is None:
        raise UsageError("a model is required")
    seed = int(cfg.get("seed", 0) or 0)
    cfg["seed"] = seed
    if model == "random":
        if kind != "verify":
            raise UsageError("the random model is only available to verify")
        points = [({"dim": int(cfg.get("dim") or 4), "seed": seed}, {})]
    else:
        if model not in REGISTRY:
            raise UsageError(f"unknown model {model!r}; choose from {sorted(REGISTRY)}")
        t_axis = cfg.get("t", DEFAULT_T[kind])
        temp_axis = cfg.get("T", "1" if kind == "thermal" else None)
        if kind == "altqfi" and temp_axis is not None:
            # thermal mode: no time axis unless asked for
            t_axis = cfg.get("t")
        points = build_grid(model, cfg, t_axis, temp_axis)
        _check_state(model, cfg.get("state"))
    options = {"which": cfg.get("which"), "state": cfg.get("state"),
               "longtime": bool(cfg.get("longtime")), "seed": seed}
    jobs = [(kind, model, params, coords, options) for params, coords in points]
    rows = run_jobs(jobs, worker_count())
    write_output(render_csv(rows, _meta(cfg, kind, TOLERANCES)), cfg.get("out"))
    bad = sum(r.get("status") != "ok" for r in rows)
    print(f"{kind} {model}: {len(rows)} rows, {bad} flagged", file=sys.stderr)
    return 1 if bad else 0


def cmd_audit(cfg: dict) -> int:
    entries = run_audit(cfg.get("formula"))
    rows = []
    for e in entries:
        for p in e.points:
            rows.append({"row": "point", "formula": e.formula,
                         "coords": ";".join(f"{k}={FLOAT_FMT % v}" for k, v in p.coords.items()),
                         "reference": p.reference, "oracle": p.oracle, "ratio": p.ratio,
                         "status": "ok", "message": ""})
        rows.append({"row": "summary", "formula": e.formula, "mean_ratio": e.mean_ratio,
                     "spread": e.spread, "stable": e.stable, "expected": e.expected,
                     "matches_expected": e.matches_expected, "status": "ok",
                     "message": e.description})
    write_output(render_csv(rows, _meta(cfg, "audit", {"stability": STABILITY_TOL})), cfg.get("out"))
    print(f"{'formula':24s} {'mean ratio':>14s} {'spread':>10s}  stable", file=sys.stderr)
    for e in entries:
        mark = "*" if e.stable else " "
        print(f"{e.formula:24s} {e.mean_ratio:14.8g} {e.spread:10.2e}  {mark}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _merge_config(args)
        if cfg["command"] == "audit":
            return cmd_audit(cfg)
        return cmd_grid(cfg)
    except UsageError as exc:
        print(f"conserved-qfi: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"conserved-qfi: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
