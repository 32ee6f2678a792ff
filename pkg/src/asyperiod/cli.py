"""Command-line front end: ``asyperiod <command> [options]``.

Commands write plot-ready data only.  Every output embeds the full run
configuration, the seed and the package version; nothing depends on the
clock, so reruns with the same configuration are byte-identical.

Exit codes: 0 success, 1 usage error, 2 divergence, 3 numerical failure,
4 property violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import warnings

import numpy as np

from . import __version__
from .bv import property_suite
from .ensemble import (DetectionSettings, analyze_support, farey_check, period_scan,
                       scan_alphas, write_occupancy_csv, write_pgm, attractor_grid)
from .errors import (AmbiguousPermutationError, AsyPeriodError, BracketingError,
                     ConvergenceError, CycleNotClosedError, DivergenceError,
                     EigenSolverError, EmptySupportError, InvalidInputError)
from .maps import MapParams, counterexample, stilde
from .regions import THRESHOLD_BETAS, alpha_threshold
from .transfer import (Grid, build_ulam, l1_distance, peripheral_spectrum,
                       permutation_operator, spectral_cycle, stationary_density,
                       tent_expected_period, tent_operator)

EXIT_OK, EXIT_USAGE, EXIT_DIVERGENCE, EXIT_NUMERICAL, EXIT_PROPERTY = 0, 1, 2, 3, 4
SCHEMA = "asyperiod/1"

FULL_SCALE = {"points_side": 1000, "burn_in": 500, "res": 1024}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers: {text!r}") from exc


def _meta(args, command: str) -> dict:
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}
    return {"schema": SCHEMA, "command": command, "version": __version__,
            "seed": getattr(args, "seed", None), "config": cfg}


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not serializable: {type(o).__name__}")


def _settings(args) -> DetectionSettings:
    return DetectionSettings(n_side=args.points_side, burn_in=args.burn_in,
                             resolution=args.res, min_count=args.min_count,
                             min_cells=args.min_cells, min_mass=args.min_mass,
                             majority=args.majority, seed=args.seed)


def _params(args) -> MapParams:
    try:
        return MapParams(args.alpha, args.beta)
    except InvalidInputError as exc:
        raise UsageError(str(exc)) from exc


# ------------------------------------------------------------------ commands

def cmd_support(args) -> int:
    params = _params(args)
    meta = _meta(args, "support")
    try:
        rep = analyze_support(params, _settings(args))
    except DivergenceError as exc:
        out = {**meta, "status": "divergent", "escaped_fraction": exc.escaped_fraction,
               "message": str(exc)}
        _emit(_dump(out), args.out + ".json")
        sys.stdout.write(_dump(out))
        return EXIT_DIVERGENCE
    except (AmbiguousPermutationError, EmptySupportError) as exc:
        out = {**meta, "status": "failed", "error": type(exc).__name__, "message": str(exc)}
        _emit(_dump(out), args.out + ".json")
        sys.stdout.write(_dump(out))
        return EXIT_NUMERICAL
    header = json.dumps(meta, sort_keys=True, default=_json_default)
    if args.format == "pgm":
        data_path = args.out + ".pgm"
        write_pgm(rep.occupancy, data_path, header=header)
    else:
        data_path = args.out + ".csv"
        write_occupancy_csv(rep.occupancy, data_path, rep.cycle.components.labels)
    cyc = rep.cycle
    out = {**meta, "status": "ok", "period": rep.period, "components": rep.n_components,
           "escaped_fraction": rep.escaped_fraction, "method": rep.method,
           "permutation": cyc.permutation, "cycles": cyc.cycles,
           "grid": rep.occupancy.grid.to_dict(), "data_file": data_path}
    _emit(_dump(out), args.out + ".json")
    sys.stdout.write(_dump({"period": rep.period, "components": rep.n_components,
                            "escaped_fraction": rep.escaped_fraction}))
    return EXIT_OK


def cmd_scan(args) -> int:
    MapParams(0.0, args.beta)
    alphas = args.alphas if args.alphas is not None else \
        scan_alphas(args.alpha_from, args.alpha_to, args.step)
    rows = period_scan(args.beta, 0.0, 0.0, 1.0, _settings(args), workers=args.workers,
                       alphas=alphas)
    marks = farey_check(rows) if args.farey_check else None
    buf = io.StringIO()
    buf.write("# " + json.dumps(_meta(args, "scan"), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    head = ["alpha", "period", "components", "escaped_fraction", "status"]
    w.writerow(head + (["farey"] if marks is not None else []))
    for i, r in enumerate(rows):
        row = [repr(r.alpha), "" if r.period is None else r.period,
               "" if r.n_components is None else r.n_components,
               "" if r.escaped_fraction is None else repr(r.escaped_fraction), r.status]
        if marks is not None:
            row.append(int(marks[i]))
        w.writerow(row)
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_table1(args) -> int:
    buf = io.StringIO()
    buf.write("# " + json.dumps(_meta(args, "table1"), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beta", "ell", "alpha_star", "status"])
    for b in args.betas:
        try:
            a, ell = alpha_threshold(b, tol=args.tol)
            w.writerow([repr(b), ell, f"{a:.10f}", "ok"])
        except (BracketingError, InvalidInputError) as exc:
            w.writerow([repr(b), "", "", type(exc).__name__])
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


def _spectrum_operator(args):
    if args.map == "identity":
        if args.res < 2:
            raise UsageError("identity map needs --res >= 2")
        return permutation_operator(list(range(args.res)))
    if args.map == "counterexample":
        g = Grid((0.0, 1.0, 0.0, 1.0), args.res)
        return build_ulam(counterexample(), g, args.samples, args.seed)
    params = _params(args)
    g = attractor_grid(params, res=args.res, seed=args.seed)
    return build_ulam(stilde(params), g, args.samples, args.seed)


def cmd_spectrum(args) -> int:
    meta = _meta(args, "spectrum")
    try:
        P = _spectrum_operator(args)
        spec = peripheral_spectrum(P, modulus_floor=args.floor, max_order=args.max_order,
                                   seed=args.seed)
        out = {**meta, "status": "ok", "period": spec.detected_period, "r": spec.detected_r,
               "complete_orders": spec.complete_orders,
               "unmatched": len(spec.unmatched),
               "eigenvalues": [[float(z.real), float(z.imag)]
                               for z in spec.eigenvalues[:args.max_report]],
               "n_eigenvalues": len(spec.eigenvalues)}
        if args.cycle_check and spec.detected_period:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                fstar = stationary_density(P)
            gs = spectral_cycle(P, spec.detected_period)
            avg = sum(g.values for g in gs) / len(gs)
            out["stationary_vs_cycle_l1"] = l1_distance(fstar.values, avg, P.grid)
    except DivergenceError as exc:
        sys.stdout.write(_dump({**meta, "status": "divergent", "message": str(exc)}))
        return EXIT_DIVERGENCE
    except (EigenSolverError, ConvergenceError, CycleNotClosedError) as exc:
        out = {**meta, "status": "failed", "error": type(exc).__name__, "message": str(exc)}
        _emit(_dump(out), args.out)
        return EXIT_NUMERICAL
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_tent(args) -> int:
    rows = []
    for b in args.betas:
        exp = tent_expected_period(b)
        det = peripheral_spectrum(tent_operator(b, nx=args.nx, seed=args.seed)).detected_period
        rows.append({"beta": b, "expected": exp, "detected": det, "match": exp == det})
    out = {**_meta(args, "tent"), "rows": rows, "all_match": all(r["match"] for r in rows)}
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_bv_selftest(args) -> int:
    rep = property_suite(args.trials, args.seed, fault=args.inject_fault)
    out = {**_meta(args, "bv-selftest"), **rep.to_dict(), "ok": rep.ok()}
    _emit(_dump(out), args.out)
    if not rep.ok():
        if args.counterexamples:
            _emit(_dump({**_meta(args, "bv-selftest"),
                         "counterexamples": rep.counterexamples}), args.counterexamples)
        return EXIT_PROPERTY
    return EXIT_OK


# -------------------------------------------------------------------- parser

def _add_detection(p):
    p.add_argument("--points-side", type=int, default=1000,
                   help="cloud is points_side**2 uniform points on [-5,5]^2")
    p.add_argument("--burn-in", type=int, default=500)
    p.add_argument("--res", type=int, default=512, help="occupancy grid cells per axis")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--min-cells", type=int, default=20)
    p.add_argument("--min-mass", type=float, default=0.002)
    p.add_argument("--majority", type=float, default=0.9)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--paper-scale", action="store_true",
                   help="10^6 points, 500 steps, 1024x1024 grid")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="asyperiod", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file whose keys override option defaults")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("support", help="support of P^n f0 from a point cloud")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--format", choices=("pgm", "csv"), default="pgm")
    p.add_argument("--out", default="support", help="output path prefix")
    _add_detection(p)
    p.set_defaults(func=cmd_support)

    p = sub.add_parser("scan", help="period over an alpha grid")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--from", dest="alpha_from", type=float, default=0.0)
    p.add_argument("--to", dest="alpha_to", type=float, default=0.0)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--alphas", type=_floats, default=None,
                   help="explicit comma-separated alpha list (overrides the range)")
    p.add_argument("--farey-check", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default=None, help="CSV path (default stdout)")
    _add_detection(p)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("table1", help="alpha thresholds for a beta list")
    p.add_argument("--betas", type=_floats, default=list(THRESHOLD_BETAS))
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("spectrum", help="peripheral spectrum of an Ulam operator")
    p.add_argument("--map", choices=("stilde", "identity", "counterexample"), default="stilde")
    p.add_argument("--alpha", type=float, default=0.57)
    p.add_argument("--beta", type=float, default=1.1)
    p.add_argument("--res", type=int, default=200)
    p.add_argument("--samples", type=int, default=4, help="strata per axis in each cell")
    p.add_argument("--floor", type=float, default=0.95)
    p.add_argument("--max-order", type=int, default=100)
    p.add_argument("--max-report", type=int, default=200,
                   help="cap on the number of eigenvalues written")
    p.add_argument("--no-cycle-check", dest="cycle_check", action="store_false")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("tent", help="band-law period vs 1D Ulam detection")
    p.add_argument("--betas", type=_floats, default=[2.0, 1.5, 1.3, 1.15])
    p.add_argument("--nx", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_tent)

    p = sub.add_parser("bv-selftest", help="randomized variation property suite")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--counterexamples", default="bv_counterexamples.json")
    p.add_argument("--inject-fault", choices=("homogeneity",), default=None,
                   help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_bv_selftest)
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def parse(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        cfg = _load_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown config keys for {args.command}: {sorted(unknown)}")
        sub.set_defaults(**cfg)
        args = parser.parse_args(argv)
    if getattr(args, "paper_scale", False):
        for k, v in FULL_SCALE.items():
            setattr(args, k, v)
    return args


def main(argv=None) -> int:
    try:
        args = parse(argv)
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"asyperiod: error: {exc}\n")
        return EXIT_USAGE
    except InvalidInputError as exc:
        sys.stderr.write(f"asyperiod: invalid input: {exc}\n")
        return EXIT_USAGE
    except AsyPeriodError as exc:
        sys.stderr.write(f"asyperiod: {type(exc).__name__}: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
