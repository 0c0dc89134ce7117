"""Command-line entry point: ``geoflow <subcommand> [--config FILE] [flags]``.

Subcommands

flow
    curve shortening flow on a static manifold
ramp
    geodesic search from a ramp on a product with a circle factor
conformal
    flow under an evolving conformal or warped metric
helix
    curvature and torsion of a helix in a space form

Exit codes: 0 clean stop, 2 monitor violation, 3 configuration error,
4 numeric abort.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .config import load_file, parse_value, resolve
from .curve import write_snapshot
from .errors import ConfigError, NotARampError
from .evolving_metric import EvolvingRun
from .flow import TRACE_COLUMNS, FlowRun, FlowSettings
from .generators import make_curve
from .manifold import make_model
from .ramp import RampRun, exponential_curvature_bounds, monitor_mu, windings
from .spaceform_ode import (
    HelixState,
    diamond_residual,
    integrate,
    integrate_tilde_tau,
    invariant_u_of_v,
    tilde_tau_roots,
)

EXIT_OK, EXIT_MONITOR, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4


# ---------------------------------------------------------------------------
# formatting and hashing


def fmt(x):
    """17 significant digits; blank for undefined (NaN, None) values."""
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return "%.17g" % x


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def blob_hash(data):
    """Git-style blob hash (SHA-1 of ``blob <size>\\0`` + content)."""
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# ---------------------------------------------------------------------------
# artifacts


def emit(outdir, trace, columns, snapshots=(), report=None, extra_columns=()):
    """Write trace.csv, snapshots/NNNN.csv and report.json under ``outdir``.

    ``trace`` is a list of Diagnostics; ``extra_columns`` are read from each
    row's ``extra`` mapping.
    """
    try:
        os.makedirs(outdir, exist_ok=True)
        rows = ([getattr(d, c) for c in columns] + [d.extra.get(c) for c in extra_columns] for d in trace)
        write_csv(os.path.join(outdir, "trace.csv"), list(columns) + list(extra_columns), rows)
        if snapshots:
            sdir = os.path.join(outdir, "snapshots")
            os.makedirs(sdir, exist_ok=True)
            for i, snap in enumerate(snapshots):
                write_snapshot(os.path.join(sdir, "%04d.csv" % i), snap.geom, tau=snap.tau, h=snap.h)
        if report is not None:
            with open(os.path.join(outdir, "report.json"), "w") as fh:
                json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
                fh.write("\n")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write artifacts: {exc.strerror}", exc.filename) from exc


def _input_hash(cfg):
    h = {"config": blob_hash(cfg.to_json())}
    params = cfg.tree.get("curve", {}).get("params", {})
    if "path" in params:
        with open(params["path"], "rb") as fh:
            h["points_file"] = blob_hash(fh.read())
    return h


def _report(cfg, stop, wall, **more):
    out = {
        "version": __version__,
        "reason": stop.reason,
        "message": stop.message,
        "exit_code": stop.exit_code,
        "certificate": stop.certificate,
        "final": None if stop.diagnostics is None else {c: getattr(stop.diagnostics, c) for c in TRACE_COLUMNS},
        "config": cfg.to_dict(),
        "provenance": cfg.provenance,
        "input_hash": _input_hash(cfg),
        "wall_time_s": wall,
    }
    if stop.diagnostics is not None and stop.diagnostics.extra:
        out["final"].update(stop.diagnostics.extra)
    out.update(more)
    return out


# ---------------------------------------------------------------------------
# building runs from a config


def build_model(cfg):
    m = cfg["manifold"]
    family = m["family"]
    if cfg.subcommand == "conformal" and family == "conformal" and m["base"] == "circle":
        raise ConfigError(["conformal runs need a base of dimension >= 2 (euclidean, sphere2, sphere3, hyperbolic3)"])
    return make_model(family, m["dim"], m["base"], m["base_dim"], m["base_radius"], m["rho"])


def build_curve(cfg, model):
    c = cfg["curve"]
    params = dict(c["params"])
    init = c["init"]
    if init in ("circle", "ellipse", "perturbed-circle", "random-circle") and "dim" not in params:
        params["dim"] = model.dim
    if init == "random-circle":
        params.setdefault("seed", cfg.seed)
    if init == "torus-winding":
        base = getattr(model, "base", None)
        params.setdefault("base_radius", getattr(base, "radius", 1.0))
        params.setdefault("rho", getattr(model, "rho", 1.0))
    try:
        curve = make_curve(init, c["N"], **params)
        curve.validate(model)
    except (ValueError, TypeError, OSError) as exc:
        raise ConfigError([f"curve: {exc}"]) from exc
    return curve


def settings_from(cfg):
    f = dict(cfg["flow"])
    return FlowSettings(snapshot_every=cfg["output"]["snapshot_every"], **f)


def run_flow_like(cfg):
    """flow, ramp and conformal subcommands; returns the exit code."""
    model = build_model(cfg)
    curve = build_curve(cfg, model)
    settings = settings_from(cfg)
    outdir = cfg["output"]["dir"]
    if cfg.subcommand == "ramp":
        runner = RampRun(model, curve, settings)
    elif cfg.subcommand == "conformal":
        runner = EvolvingRun(model, curve, settings, cfg["conformal"]["mode"])
    else:
        runner = FlowRun(model, curve, settings)
    w0 = windings(runner.curve0, model) if cfg.subcommand == "ramp" else None
    t0 = time.perf_counter()
    result = runner.run()
    wall = time.perf_counter() - t0
    stop = result.report
    more = {"rotated_away_from_pole": runner.rotated, "steps": result.state.step, "t": result.state.t}
    if cfg.subcommand == "ramp":
        rtrace = runner.ramp_trace(result.trace)
        mu = monitor_mu(rtrace)
        bounds = exponential_curvature_bounds(rtrace)
        w1 = windings(result.state.curve, model)
        more["ramp"] = {
            "mu_monotone": mu.passed,
            "mu_worst_margin": mu.worst,
            "always_ramp": mu.always_ramp,
            "winding_initial": list(w0),
            "winding_final": list(w1),
            "bounds": {k: vars(v) for k, v in bounds.items()},
            "xi": rtrace.xi,
        }
        if stop.reason == "geodesic-converged":
            stop.certificate.update({"sup_D1": result.trace[-1].sup_D1, "sup_D2": result.trace[-1].sup_D2})
    if cfg.subcommand == "conformal":
        more["f_final"] = runner.f
    emit(
        outdir,
        result.trace,
        TRACE_COLUMNS,
        result.snapshots,
        _report(cfg, stop, wall, **more),
        runner.extra_columns,
    )
    if cfg.subcommand == "ramp":
        rows = zip(rtrace.t, rtrace.mu, rtrace.kappa, rtrace.lam, rtrace.Phi, rtrace.Psi)
        write_csv(os.path.join(outdir, "ramp_trace.csv"), ["t", "mu", "kappa", "lambda", "Phi", "Psi"], rows)
        if stop.reason == "geodesic-converged":
            g = result.state.geom
            write_snapshot(os.path.join(outdir, "geodesic.csv"), g, h=runner.ramp(g).h)
    print(f"{cfg.subcommand}: {stop.reason} at t={result.state.t:.6g} after {result.state.step} steps"
          + (f" ({stop.message})" if stop.message else ""))
    return stop.exit_code


HELIX_COLUMNS = ("t", "k", "tau", "u", "v", "invariant_residual", "diamond_residual")


def run_helix(cfg):
    h = cfg["helix"]
    outdir = cfg["output"]["dir"]
    t0 = time.perf_counter()
    traj = integrate(HelixState(float(h["k0"]), float(h["tau0"]), int(h["K"])), h["t_end"], h["dt"])
    u, v = traj.u, traj.v
    inv = np.full(len(traj.t), math.nan)
    dia = np.full(len(traj.t), math.nan)
    normalized = h["K"] == -1 and h["k0"] == 1 and h["tau0"] != 0
    if normalized:
        v0 = float(h["tau0"]) ** 2
        inv = u - invariant_u_of_v(np.maximum(v, 1e-300), v0)
        tau0 = abs(float(h["tau0"]))
        tt, ttau, gap = integrate_tilde_tau(tau0, traj.t[-1], h["dt"])
        # the gap decays exponentially; interpolate its logarithm onto the trajectory times
        gap_t = np.exp(np.interp(traj.t, tt, np.log(gap)))
        rp, _ = tilde_tau_roots(tau0)
        dia = np.array([diamond_residual(rp - g, t, tau0, gap=g) for t, g in zip(traj.t, gap_t)])
    wall = time.perf_counter() - t0
    os.makedirs(outdir, exist_ok=True)
    rows = zip(traj.t, traj.k, traj.tau, u, v, inv, dia)
    write_csv(os.path.join(outdir, "trace.csv"), HELIX_COLUMNS, rows)
    reason = "blowup-guard" if traj.blowup else "t-max-reached"
    report = {
        "version": __version__,
        "reason": reason,
        "exit_code": EXIT_NUMERIC if traj.blowup else EXIT_OK,
        "blowup_t": traj.blowup_t if traj.blowup else None,
        "final": {"t": traj.t[-1], "k": traj.k[-1], "tau": traj.tau[-1], "u": u[-1], "v": v[-1]},
        "max_abs_invariant_residual": float(np.nanmax(np.abs(inv))) if normalized else None,
        "max_abs_diamond_residual": float(np.nanmax(np.abs(dia))) if normalized else None,
        "config": cfg.to_dict(),
        "provenance": cfg.provenance,
        "input_hash": _input_hash(cfg),
        "wall_time_s": wall,
    }
    with open(os.path.join(outdir, "report.json"), "w") as fh:
        json.dump(_jsonable(report), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"helix: {reason} at t={traj.t[-1]:.6g}, k={traj.k[-1]:.6g}, tau={traj.tau[-1]:.6g}")
    return report["exit_code"]


# ---------------------------------------------------------------------------
# argument parsing

_FLOW_FLAGS = [
    ("--family", "manifold.family", str),
    ("--dim", "manifold.dim", int),
    ("--init", "curve.init", str),
    ("--N", "curve.N", int),
    ("--t-max", "flow.t_max", float),
    ("--tol-geo", "flow.tol_geo", float),
    ("--c-cfl", "flow.c_cfl", float),
    ("--dt-max", "flow.dt_max", float),
    ("--resample-every", "flow.resample_every", int),
    ("--max-steps", "flow.max_steps", int),
    ("--out-dir", "output.dir", str),
    ("--snapshot-every", "output.snapshot_every", int),
    ("--seed", "seed", int),
]


def _add_common(p):
    p.add_argument("--config", help="YAML config file")
    p.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override any config key, e.g. --set curve.params.amp=0.1",
    )


def _add_flow_flags(p):
    for flag, key, kind in _FLOW_FLAGS:
        p.add_argument(flag, dest=key, type=kind, default=None, help=f"sets {key}")
    p.add_argument("--bernstein", dest="flow.bernstein", action="store_const", const=True, default=None,
                   help="stop when the short-time curvature bounds fail")


def build_parser():
    parser = argparse.ArgumentParser(prog="geoflow", description="Curve shortening flow on Riemannian manifolds.")
    parser.add_argument("--version", action="version", version=f"geoflow {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("flow", help="curve shortening flow on a static manifold")
    _add_common(p)
    _add_flow_flags(p)

    p = sub.add_parser("ramp", help="flow a ramp on base x S^1 to a closed geodesic")
    _add_common(p)
    _add_flow_flags(p)
    p.add_argument("--base", dest="manifold.base", choices=["circle", "sphere2"], default=None)
    p.add_argument("--rho", dest="manifold.rho", type=float, default=None, help="fiber radius")
    p.add_argument("--winding", nargs=2, type=int, metavar=("P", "Q"), default=None)
    p.add_argument("--perturb", nargs=2, type=float, metavar=("AMP", "MODE"), default=None)

    p = sub.add_parser("conformal", help="flow under an evolving conformal or warped metric")
    _add_common(p)
    _add_flow_flags(p)
    p.add_argument("--mode", dest="conformal.mode", choices=["conformal", "warped", "off"], default=None)

    p = sub.add_parser("helix", help="reduced curvature/torsion ODE of a helix in a space form")
    _add_common(p)
    p.add_argument("--K", dest="helix.K", type=int, choices=[-1, 0, 1], default=None)
    p.add_argument("--k0", dest="helix.k0", type=float, default=None)
    p.add_argument("--tau0", dest="helix.tau0", type=float, default=None)
    p.add_argument("--t-end", dest="helix.t_end", type=float, default=None)
    p.add_argument("--dt", dest="helix.dt", type=float, default=None)
    p.add_argument("--out", default=None, help="trace CSV path (its directory becomes output.dir)")
    p.add_argument("--out-dir", dest="output.dir", default=None)
    return parser


def overrides_from(args):
    """Dotted-key overrides from parsed flags (only flags actually given)."""
    out = {}
    for key, val in vars(args).items():
        if "." in key and val is not None:
            out[key] = val
    for key in ("seed",):
        if getattr(args, key, None) is not None:
            out[key] = getattr(args, key)
    for item in args.set:
        if "=" not in item:
            raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
        key, text = item.split("=", 1)
        out[key.strip()] = parse_value(text)
    if getattr(args, "winding", None):
        out["curve.params.p"], out["curve.params.q"] = args.winding
    if getattr(args, "perturb", None):
        amp, mode = args.perturb
        out["curve.params.amp"] = amp
        out["curve.params.mode"] = int(mode)
    if getattr(args, "out", None):
        d = os.path.dirname(args.out) or "."
        if os.path.basename(args.out) != "trace.csv":
            raise ConfigError(["--out must name a file called trace.csv"])
        out["output.dir"] = d
    return out


def _derived_defaults(subcommand, overrides, file_data):
    """Defaults implied by other choices, unless the file or a flag sets them."""
    derived = {}

    def given(dotted):
        block, _, key = dotted.partition(".")
        return dotted in overrides or key in (file_data.get(block) or {})

    if subcommand == "ramp":
        # a sphere2 base pairs with the lifted-equator generator
        base = overrides.get("manifold.base", (file_data.get("manifold") or {}).get("base"))
        if base == "sphere2" and not given("curve.init"):
            derived["curve.init"] = "sphere-lift"
            if overrides.pop("curve.params.p", 1) != 1:
                raise ConfigError(["sphere-lift curves wind once around the base; --winding P must be 1"])
    if subcommand == "conformal":
        mode = overrides.get("conformal.mode", (file_data.get("conformal") or {}).get("mode"))
        if mode == "warped":
            if not given("manifold.family"):
                derived["manifold.family"] = "warped-circle"
            if not given("manifold.base"):
                derived["manifold.base"] = "circle"
    return derived


def parse(argv=None):
    """Parse arguments into a RunConfig (flags override the config file)."""
    args = build_parser().parse_args(argv)
    file_data = load_file(args.config) if args.config else {}
    overrides = overrides_from(args)
    derived = _derived_defaults(args.subcommand, overrides, file_data)
    return resolve(args.subcommand, file_data, overrides, derived)


def main(argv=None):
    try:
        cfg = parse(argv)
        if cfg.subcommand == "helix":
            return run_helix(cfg)
        return run_flow_like(cfg)
    except ConfigError as exc:
        print("configuration error:", file=sys.stderr)
        for e in exc.errors:
            print(f"  - {e}", file=sys.stderr)
        return EXIT_CONFIG
    except NotARampError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
