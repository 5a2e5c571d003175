"""Command-line interface: estimate, simulate, bench and weight-curve."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings
from typing import List, Optional

import numpy as np

from .bench import AGGREGATES, run_bench
from .errors import ConfigError, FwalsError
from .focus import parse_focus
from .amse import OMEGA_MODES
from .methods import METHODS, estimate, parse_methods
from .model import load_dataset
from .priors import PRIOR_KINDS, PriorSpec, prior_weight
from .simulate import BasicDesignConfig, IrfDesignConfig, run_monte_carlo
from .weights import ConvergenceWarning, scalar_optimal_weight

SCHEMA = "fwals/1"
THREADS_ENV = "FWALS_THREADS"
DEFAULT_SIM_METHODS = "fwals,fic,mmse,saic,sbic,wals_lap,wals_cau,wals_par,wals_wei"


def parse_grid(text: str, integer: bool = False) -> List:
    """Comma-separated values, each a number or an inclusive ``start:end:count`` range."""
    out = []
    for item in str(text).split(","):
        item = item.strip()
        if not item:
            continue
        parts = item.split(":")
        try:
            if len(parts) == 1:
                vals = [float(parts[0])]
            elif len(parts) == 3:
                start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
                if count < 1:
                    raise ConfigError(f"range {item!r} needs a positive count")
                vals = list(np.linspace(start, end, count)) if count > 1 else [start]
            else:
                raise ConfigError(f"bad grid item {item!r}; use a number or start:end:count")
        except ValueError:
            raise ConfigError(f"bad grid item {item!r}") from None
        for v in vals:
            if integer:
                if v != round(v):
                    raise ConfigError(f"grid {text!r} must contain integers, got {v}")
                out.append(int(round(v)))
            else:
                # trim linspace noise such as 0.30000000000000004
                out.append(float(f"{v:.12g}"))
    if not out:
        raise ConfigError(f"empty grid {text!r}")
    return out


def _columns(text: str) -> list:
    return [c.strip() for c in text.split(",") if c.strip()]


def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        n = arg
    else:
        raw = os.environ.get(THREADS_ENV, "1")
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigError(f"thread count must be at least 1, got {n}")
    return n


def _emit(text: str, path: Optional[str]) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_estimate(args) -> int:
    methods = parse_methods(args.methods)
    fs = parse_focus(args.focus)
    ds = load_dataset(args.data, _columns(args.core), _columns(args.aux), args.y.strip(),
                      header=not args.no_header)
    results = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        for m in methods:
            results.append(estimate(ds, fs, m, args.omega, args.seed).to_dict())
    doc = {
        "schema": SCHEMA,
        "dataset": {
            "path": args.data,
            "N": ds.N,
            "k1": ds.k1,
            "k2": ds.k2,
            "core": list(ds.core_names),
            "aux": list(ds.aux_names),
            "response": ds.response_name,
        },
        "focus": fs.label(),
        "omega_mode": args.omega,
        "seed": args.seed,
        "results": results,
        "warnings": sorted({str(w.message) for w in caught}),
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.output)
    return 0


def cmd_simulate(args) -> int:
    methods = parse_methods(args.methods)
    threads = _threads(args.threads)
    if args.design == "basic":
        points = [BasicDesignConfig(N=n, k2=k2, tau=tau, r2=r2, k1=args.k1, a=args.a)
                  for n in parse_grid(args.n, integer=True)
                  for k2 in parse_grid(args.k2, integer=True)
                  for tau in parse_grid(args.tau)
                  for r2 in parse_grid(args.r2)]
    else:
        horizons = tuple(parse_grid(args.h, integer=True))
        points = [IrfDesignConfig(k2=k2, c_y=cy, T=args.t, d=args.d, tau=tau,
                                  burn_in=args.burn_in, horizons=horizons)
                  for k2 in parse_grid(args.k2, integer=True)
                  for tau in parse_grid(args.tau)
                  for cy in parse_grid(args.cy)]
    table = run_monte_carlo(points, methods, args.reps, args.seed, threads)
    _emit(table.to_csv(), args.output)
    return 0


def cmd_bench(args) -> int:
    res = run_bench(parse_grid(args.k2, integer=True), N=args.n, repeats=args.repeats,
                    methods=parse_methods(args.methods), seed=args.seed,
                    aggregate=args.aggregate)
    for note in res.notes:
        print(note, file=sys.stderr)
    _emit(res.to_csv(), args.output)
    return 0


def weight_curve_rows(ts) -> list:
    priors = [PriorSpec(k) for k in PRIOR_KINDS]
    rows = []
    for t in ts:
        rows.append([t, scalar_optimal_weight(t)] + [prior_weight(t, p) for p in priors])
    return rows


def cmd_weight_curve(args) -> int:
    ts = parse_grid(args.t)
    if any(t == 0 for t in ts):
        raise ConfigError("the t grid must exclude 0")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "omega_theoretical"] + [f"omega_{k}" for k in PRIOR_KINDS])
    for row in weight_curve_rows(ts):
        w.writerow([repr(float(v)) for v in row])
    _emit(buf.getvalue(), args.output)
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fwals", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("estimate", help="fit averaging estimators to a CSV dataset (JSON out)")
    e.add_argument("--data", required=True, help="CSV file")
    e.add_argument("--core", required=True, help="core columns, names or 0-based indices")
    e.add_argument("--aux", required=True, help="auxiliary columns, names or 0-based indices")
    e.add_argument("--y", required=True, help="response column")
    e.add_argument("--no-header", action="store_true", help="the CSV has no header row")
    e.add_argument("--focus", default=None, help="linear:c1,c2,... or irf:h=<int>")
    e.add_argument("--methods", default="fwals", help=f"comma list from {','.join(METHODS)}")
    e.add_argument("--omega", default="homoskedastic", choices=OMEGA_MODES)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output", default=None)
    e.set_defaults(func=cmd_estimate)

    s = sub.add_parser("simulate", help="Monte Carlo focus risk (CSV out)")
    ssub = s.add_subparsers(dest="design", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--reps", type=int, default=200)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--methods", default=DEFAULT_SIM_METHODS)
    common.add_argument("--threads", type=int, default=None,
                        help=f"worker threads (default ${THREADS_ENV} or 1)")
    common.add_argument("--output", default=None)
    b = ssub.add_parser("basic", parents=[common], help="equicorrelated Gaussian design")
    b.add_argument("--n", default="100", help="sample size grid")
    b.add_argument("--k2", default="2")
    b.add_argument("--k1", type=int, default=3)
    b.add_argument("--tau", default="0.3")
    b.add_argument("--r2", default="0.1:0.9:9")
    b.add_argument("--a", type=float, default=12.0)
    i = ssub.add_parser("irf", parents=[common], help="AR(3) impulse-response design")
    i.add_argument("--k2", default="4")
    i.add_argument("--cy", default="0.1:4:10")
    i.add_argument("--t", type=int, default=100)
    i.add_argument("--d", type=float, default=1.0)
    i.add_argument("--tau", default="0.2")
    i.add_argument("--burn-in", type=int, default=100)
    i.add_argument("--h", default="1,3,5,7", help="IRF horizons")
    s.set_defaults(func=cmd_simulate)

    bn = sub.add_parser("bench", help="timing versus k2 (CSV out)")
    bn.add_argument("--k2", default="2:10:9")
    bn.add_argument("--n", type=int, default=100)
    bn.add_argument("--repeats", type=int, default=3)
    bn.add_argument("--methods", default="fwals,fic,mmse")
    bn.add_argument("--seed", type=int, default=0)
    bn.add_argument("--aggregate", default="mean", choices=AGGREGATES)
    bn.add_argument("--output", default=None)
    bn.set_defaults(func=cmd_bench)

    w = sub.add_parser("weight-curve", help="scalar AMSE weight versus prior weights (CSV out)")
    w.add_argument("--t", default="0.01:10:1000", help="t grid, must exclude 0")
    w.add_argument("--output", default=None)
    w.set_defaults(func=cmd_weight_curve)
    return p


def _error_json(exc: BaseException, code: int) -> str:
    err = {"kind": getattr(exc, "kind", "error"), "message": str(exc), "exit_code": code}
    for attr in ("row", "col", "eigenvalue"):
        if getattr(exc, attr, None) is not None:
            err[attr] = getattr(exc, attr)
    return json.dumps({"schema": SCHEMA, "error": err})


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "estimate" and args.focus is None:
        # default focus: sum of the core coefficients
        n_core = len(_columns(args.core))
        args.focus = "linear:" + ",".join(["1"] * n_core)
    try:
        return args.func(args)
    except FwalsError as exc:
        print(_error_json(exc, exc.exit_code), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
