"""Command-line frontend.

Subcommands wrap the library layers with reproducible, machine-readable
output:

* ``analyze``   closed-form quantities (mean, sd, variance, density, ccdf)
* ``simulate``  event-driven simulation statistics as JSON
* ``sweep``     tables over a traffic-intensity grid (CSV)
* ``order``     stochastic-order verdict for a policy pair (JSON)
* ``invert``    numerical transform inversion, including the
                deterministic-service P(1) transform

Every command accepting ``--seed`` is bit-reproducible; ``AOILAB_SEED``
serves as the seed fallback.  With ``--output`` the data is written to a
file and a ``<file>.manifest.json`` records the resolved configuration
and output digests.  Exit codes: 0 success (including "unsupported"
data rows), 2 usage error, 3 numeric error, 4 simulation error.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .analytic import (
    PolicyId,
    TrafficModel,
    UnsupportedPolicyError,
    aoi_lt,
    aoi_mean,
    aoi_sd,
    aoi_variance,
    det_p1_moment,
)
from .dist import parse_dist
from .experiments import (
    SweepSpec,
    analytic_ccdf,
    figure_preset,
    order_check,
    sweep,
    _ccdf_config,
)
from .invert import (
    InversionConfig,
    InversionError,
    det_p1_ccdf,
    det_p1_density,
    det_p1_density_moments,
    invert_density,
)
from .sim import SimConfig, StarvationError, run

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_SIM = 4


def _fmt(x) -> str:
    """Locale-independent, 9 significant digits."""
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    return format(float(x), ".9g")


def _float_list(text: str):
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad numeric list {text!r}") from None


def _policy(token: str) -> PolicyId:
    try:
        return PolicyId.parse(token)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _dist(spec: str):
    try:
        return parse_dist(spec)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _csv_text(fieldnames, rows) -> str:
    out = io.StringIO()
    out.write(",".join(fieldnames) + "\n")
    for row in rows:
        out.write(",".join(_fmt(row.get(k)) for k in fieldnames) + "\n")
    return out.getvalue()


def _manifest(args, t0: float) -> dict:
    config = {k: str(v) for k, v in sorted(vars(args).items())
              if k not in ("func",) and v is not None}
    return {
        "command": args.command,
        "config": config,
        "seed": getattr(args, "seed", None),
        "version": __version__,
        "timestamp": {
            "started": datetime.datetime.now(datetime.timezone.utc).isoformat(),
            "elapsed_s": time.monotonic() - t0,
        },
        "outputs": {},
    }


def _emit(text: str, args, manifest: dict):
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
        digest = hashlib.sha256(text.encode()).hexdigest()
        manifest["outputs"][os.path.basename(args.output)] = digest
        with open(args.output + ".manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# analyze
# ---------------------------------------------------------------------------

def _analyze_value(policy, traffic, quantity, t):
    if quantity == "mean":
        return aoi_mean(policy, traffic)
    if quantity == "sd":
        return aoi_sd(policy, traffic)
    if quantity == "variance":
        return aoi_variance(policy, traffic)
    if quantity == "ccdf":
        return analytic_ccdf(policy, traffic, t)
    if quantity == "density":
        cfg = _ccdf_config(traffic.dist)
        return invert_density(lambda s: aoi_lt(policy, traffic, s), t, cfg)
    raise ValueError(f"unknown quantity {quantity!r}")


def cmd_analyze(args) -> int:
    t0 = time.monotonic()
    traffic = TrafficModel(args.lam, args.dist)
    quantities = [q.strip() for q in args.quantity.split(",") if q.strip()]
    for q in quantities:
        if q not in ("mean", "sd", "variance", "ccdf", "density"):
            raise _Usage(f"unknown quantity {q!r}")
        if q in ("ccdf", "density") and not args.t:
            raise _Usage(f"quantity {q!r} needs --t")
    rows = []
    for q in quantities:
        t_points = args.t if q in ("ccdf", "density") else [None]
        for t in t_points:
            row = {"policy": str(args.policy), "dist": args.dist.spec_string(),
                   "lambda": args.lam, "quantity": q, "t": t,
                   "value": None, "status": "ok"}
            try:
                row["value"] = _analyze_value(args.policy, traffic, q, t)
            except (UnsupportedPolicyError, NotImplementedError) as exc:
                row["status"] = f"unsupported: {exc}"
            rows.append(row)
    fields = ["policy", "dist", "lambda", "quantity", "t", "value", "status"]
    if args.format == "json":
        text = json.dumps({"rows": rows, "manifest": _manifest(args, t0)},
                          indent=2, sort_keys=True, default=_fmt) + "\n"
    else:
        text = _csv_text(fields, rows)
    _emit(text, args, _manifest(args, t0))
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    t0 = time.monotonic()
    traffic = TrafficModel(args.lam, args.dist)
    cfg = SimConfig(args.policy, traffic, segments=args.segments,
                    warmup_segments=args.warmup, seed=args.seed)
    grid = np.asarray(args.grid, dtype=float) if args.grid else None
    path, stats = run(cfg, ccdf_grid=grid)
    doc = {
        "policy": str(args.policy),
        "dist": args.dist.spec_string(),
        "lambda": args.lam,
        "segments": args.segments,
        "warmup": cfg.warmup,
        "seed": args.seed,
        "time_avg_mean": stats.time_avg_mean,
        "time_avg_variance": stats.time_avg_variance,
        "time_avg_second_moment": stats.time_avg_second_moment,
        "palm_k0_frac": stats.palm_k0_frac,
        "mean_segment": stats.mean_segment,
        "palm_conditional": {f"{i},{j}": {"count": c, "mean_reset_age": m}
                             for (i, j), (c, m) in stats.palm_conditional.items()},
        "ccdf": [{"t": float(t), "value": float(v)}
                 for t, v in zip(stats.ccdf_grid, stats.ccdf)],
        "total_time": stats.total_time,
        "manifest": _manifest(args, t0),
    }
    if args.dump_path:
        np.savez(args.dump_path, resets_s=path.resets_s,
                 resets_age=path.resets_age, resets_k=path.resets_k)
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n",
          args, _manifest(args, t0))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

def cmd_sweep(args) -> int:
    t0 = time.monotonic()
    if args.preset:
        spec = figure_preset(args.preset)
        if args.engine != spec.engine or args.segments != 200_000 or args.seed:
            spec = SweepSpec(spec.policies, spec.dist, spec.rho_grid,
                             spec.quantity, engine=args.engine,
                             segments=args.segments, seed=args.seed)
    else:
        if not (args.policies and args.dist and args.rhos):
            raise _Usage("need --preset or all of --policies/--dist/--rhos")
        policies = tuple(_policy(tok) for tok in args.policies.split(","))
        spec = SweepSpec(policies, args.dist, tuple(args.rhos), args.quantity,
                         engine=args.engine,
                         t_grid=tuple(args.t) if args.t else None,
                         segments=args.segments, seed=args.seed)
    rows = sweep(spec)
    fields = ["rho", "policy", "quantity", "t",
              "analytic", "simulated", "sim_se", "gap", "error"]
    _emit(_csv_text(fields, rows), args, _manifest(args, t0))
    return EXIT_OK


# ---------------------------------------------------------------------------
# order
# ---------------------------------------------------------------------------

def cmd_order(args) -> int:
    t0 = time.monotonic()
    traffic = TrafficModel(args.lam, args.dist)
    verdict = order_check(args.a, args.b, traffic,
                          t_grid=args.t if args.t else None, tol=args.tol,
                          engine=args.engine, segments=args.segments,
                          seed=args.seed)
    doc = {
        "policy_a": str(verdict.policy_a),
        "policy_b": str(verdict.policy_b),
        "relation": verdict.relation,
        "max_violation": verdict.max_violation,
        "tol": verdict.tol,
        "grid": list(verdict.grid),
        "manifest": _manifest(args, t0),
    }
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n",
          args, _manifest(args, t0))
    return EXIT_OK


# ---------------------------------------------------------------------------
# invert
# ---------------------------------------------------------------------------

def cmd_invert(args) -> int:
    t0 = time.monotonic()
    if not args.t:
        raise _Usage("invert needs --t")
    cfg = None
    if args.method:
        cfg = InversionConfig(method=args.method, nodes=args.nodes)
    rows = []
    if args.detp1:
        if args.rho is None:
            raise _Usage("--detp1 needs --rho")
        fn = det_p1_ccdf if args.quantity == "ccdf" else det_p1_density
        for t in args.t:
            rows.append({"transform": "detp1", "rho": args.rho,
                         "quantity": args.quantity, "t": t,
                         "value": fn(args.rho, t, cfg)})
    else:
        if not (args.policy and args.dist and args.lam is not None):
            raise _Usage("need --detp1 or all of --policy/--dist/--lambda")
        traffic = TrafficModel(args.lam, args.dist)
        cfg = cfg or _ccdf_config(args.dist)
        for t in args.t:
            if args.quantity == "ccdf":
                val = analytic_ccdf(args.policy, traffic, t)
            else:
                val = invert_density(
                    lambda s: aoi_lt(args.policy, traffic, s), t, cfg)
            rows.append({"transform": str(args.policy),
                         "rho": traffic.rho, "quantity": args.quantity,
                         "t": t, "value": val})
    doc = {"rows": rows}
    if args.check_moments:
        if not args.detp1:
            raise _Usage("--check-moments applies to --detp1 only")
        mass, m1, m2 = det_p1_density_moments(args.rho)
        doc["moment_check"] = {
            "recovered_mass": mass,
            "density_mean": m1, "closed_form_mean": det_p1_moment(args.rho, 1),
            "density_m2": m2, "closed_form_m2": det_p1_moment(args.rho, 2),
        }
    doc["manifest"] = _manifest(args, t0)
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n",
          args, _manifest(args, t0))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

class _Usage(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get("AOILAB_SEED", "0"))


def _add_common(p, sim: bool = False):
    p.add_argument("--config", help="key=value file supplying flag defaults")
    p.add_argument("--output", help="write to file (plus manifest) instead of stdout")
    if sim:
        p.add_argument("--seed", type=int, default=_default_seed())
        p.add_argument("--segments", type=int, default=200_000)
        p.add_argument("--jobs", type=int, default=1,
                       help="reserved; cells currently run serially")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aoiq",
        description="Age-of-information analysis of small-buffer queues")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form quantities")
    p.add_argument("--policy", type=_policy, required=True)
    p.add_argument("--dist", type=_dist, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--quantity", default="mean",
                   help="comma list of mean,sd,variance,ccdf,density")
    p.add_argument("--t", type=_float_list, help="comma list for ccdf/density")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("simulate", help="event-driven simulation")
    p.add_argument("--policy", type=_policy, required=True)
    p.add_argument("--dist", type=_dist, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--warmup", type=int, default=None)
    p.add_argument("--grid", type=_float_list, help="ccdf evaluation times")
    p.add_argument("--dump-path", help="write reset records to this .npz file")
    _add_common(p, sim=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="tables over a rho grid")
    p.add_argument("--preset", choices=("fig6", "fig7", "fig9", "fig10"))
    p.add_argument("--policies", help="comma list, e.g. b1,p1,b2,p2")
    p.add_argument("--dist", type=_dist)
    p.add_argument("--rhos", type=_float_list)
    p.add_argument("--quantity", choices=("mean", "sd", "ccdf"), default="mean")
    p.add_argument("--engine", choices=("analytic", "simulate", "both"),
                   default="analytic")
    p.add_argument("--t", type=_float_list, help="grid for quantity=ccdf")
    _add_common(p, sim=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("order", help="stochastic-order verdict")
    p.add_argument("--a", type=_policy, required=True)
    p.add_argument("--b", type=_policy, required=True)
    p.add_argument("--dist", type=_dist, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--engine", choices=("analytic", "simulate"),
                   default="analytic")
    p.add_argument("--t", type=_float_list, help="tail grid")
    p.add_argument("--tol", type=float)
    _add_common(p, sim=True)
    p.set_defaults(func=cmd_order)

    p = sub.add_parser("invert", help="numerical transform inversion")
    p.add_argument("--detp1", action="store_true",
                   help="invert the deterministic-service P1 transform")
    p.add_argument("--rho", type=float)
    p.add_argument("--policy", type=_policy)
    p.add_argument("--dist", type=_dist)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--t", type=_float_list, required=True)
    p.add_argument("--quantity", choices=("density", "ccdf"), default="density")
    p.add_argument("--method",
                   choices=("talbot", "euler-summation", "bromwich-trapezoid"))
    p.add_argument("--nodes", type=int, default=96)
    p.add_argument("--check-moments", action="store_true",
                   help="cross-check density moments vs closed forms (detp1)")
    _add_common(p)
    p.set_defaults(func=cmd_invert)

    return parser


def _apply_config_file(argv):
    """Replace ``--config FILE`` with the file's key=value pairs, inserted
    right after the subcommand so explicit flags still win."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise _Usage("--config needs a file argument")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    try:
        lines = open(path).read().splitlines()
    except OSError as exc:
        raise _Usage(f"cannot read config file: {exc}") from None
    flags = []
    for ln, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _Usage(f"{path}:{ln}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        flags.append(f"--{key.replace('_', '-')}")
        if value.lower() not in ("true", ""):
            flags.append(value)
    return rest[:1] + flags + rest[1:]


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _apply_config_file(argv)
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as exc:    # argparse already printed the message
            return int(exc.code or 0)
        return args.func(args)
    except _Usage as exc:
        print(f"aoiq: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StarvationError as exc:
        print(f"aoiq: simulation error: {exc}", file=sys.stderr)
        return EXIT_SIM
    except (InversionError, ArithmeticError) as exc:
        print(f"aoiq: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"aoiq: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
