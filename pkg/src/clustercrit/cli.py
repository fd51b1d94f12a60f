"""Command-line front end.

Two subcommands: `infer` runs the method suite on a user-supplied
delimited file; `mc` reproduces the simulation tables.  Every flag has a
config-file equivalent (JSON keys named like the flags, underscores for
dashes); explicit flags override file values.  Exit codes: 0 success,
2 invalid input or configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .data import PanelSchema, Hypothesis, add_dummies, load_panel, within_transform
from .designs import load_state_year_panel
from .errors import (
    ClusterCritError,
    ConfigError,
    DegenerateVarianceError,
    RankError,
)
from .methods import METHODS, evaluate_methods
from .mc import format_tables, run_grid, write_csv, write_report
from .ols import fit
from .rng import DEFAULT_SEED, substream

_EXIT_INVALID = 2
_EXIT_NUMERICAL = 3


def _parse_floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v != ""]


def _parse_names(text) -> list[str]:
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="clustercrit",
        description="Cluster-robust inference with expansion-corrected critical values.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with flag defaults")
    common.add_argument("--seed", type=int, help=f"RNG seed (default {DEFAULT_SEED})")
    common.add_argument("--threads", type=int, help="worker threads (default $CE_THREADS or 1)")
    common.add_argument("--alpha", type=float, help="significance level (default 0.05)")
    common.add_argument("--methods", help="comma list from: " + ",".join(METHODS))
    common.add_argument("--boot", type=int, help="bootstrap draws (default 999)")
    common.add_argument("--truncation", type=float, help="moment truncation threshold (off by default)")
    common.add_argument("--out", help="write a delimited results table here")
    common.add_argument("--report", help="write a structured JSON report here")

    pi = sub.add_parser("infer", parents=[common], help="inference on a data file")
    pi.add_argument("--data", help="delimited data file")
    pi.add_argument("--delimiter", help="field delimiter (default ,)")
    pi.add_argument("--cluster-col", dest="cluster_col", help="cluster id column")
    pi.add_argument("--y-col", dest="y_col", help="outcome column")
    pi.add_argument("--x-cols", dest="x_cols", help="comma list of regressor columns")
    pi.add_argument("--lambda", dest="lam", help="comma list of test weights")
    pi.add_argument("--null", type=float, help="hypothesized value of lambda'beta (default 0)")
    pi.add_argument("--within", action="store_true", default=None,
                    help="apply the within (cluster demeaning) transformation")
    pi.add_argument("--dummies", action="append",
                    help="expand this column into level dummies (repeatable)")

    pm = sub.add_parser("mc", parents=[common], help="Monte Carlo size study")
    pm.add_argument("--design", help="comma list from: bdm1,exp2,binary3,fe4")
    pm.add_argument("--G", help="comma list of cluster counts")
    pm.add_argument("--reps", type=int, help="Monte Carlo replications (default 1000)")
    pm.add_argument("--panel", help="state-year outcome panel file (bdm1 only)")
    pm.add_argument("--panel-cols", dest="panel_cols",
                    help="panel columns as state,year,outcome (default state,year,lnwage)")
    return p


def _merged(args: argparse.Namespace, defaults: dict) -> dict:
    """Config-file values fill unset flags; hard defaults fill the rest."""
    cfg = {}
    if args.config:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ConfigError(f"config {args.config} must hold a JSON object")
    out = dict(defaults)
    for key in out:
        if key in cfg:
            out[key] = cfg[key]
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            out[key] = cli_val
    unknown = set(cfg) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return out


def _default_threads() -> int:
    env = os.environ.get("CE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"CE_THREADS must be an integer, got {env!r}") from None
    return 1


def cmd_infer(args: argparse.Namespace) -> int:
    opt = _merged(args, {
        "data": None, "delimiter": ",", "cluster_col": None, "y_col": None,
        "x_cols": None, "lam": None, "null": 0.0, "alpha": 0.05,
        "methods": "normal,analytic", "boot": 999, "seed": DEFAULT_SEED,
        "truncation": None, "within": False, "dummies": None,
        "out": None, "report": None, "threads": None,
    })
    for key in ("data", "cluster_col", "y_col", "x_cols", "lam"):
        if opt[key] is None:
            raise ConfigError(f"infer needs --{key.replace('_', '-')}")
    schema = PanelSchema(opt["cluster_col"], opt["y_col"], tuple(_parse_names(opt["x_cols"])))
    d = load_panel(opt["data"], schema, delimiter=opt["delimiter"])
    if opt["dummies"]:
        from .data import read_table

        header, rows = read_table(opt["data"], opt["delimiter"])
        for col in _parse_names(opt["dummies"]):
            if col not in header:
                raise ConfigError(f"--dummies column {col!r} not in {opt['data']}")
            d = add_dummies(d, [row[header.index(col)] for row in rows]).dataset
    if opt["within"]:
        d = within_transform(d)
    lam = np.array(_parse_floats(opt["lam"]))
    h = Hypothesis(lam, float(opt["null"]), float(opt["alpha"]))
    if lam.shape[0] != d.k:
        raise ConfigError(f"--lambda has {lam.shape[0]} weights but the design has k={d.k}")

    f = fit(d, h)
    methods = tuple(_parse_names(opt["methods"]))
    seed = int(opt["seed"])
    results = evaluate_methods(
        d, h, f, methods, boot=int(opt["boot"]),
        boot_rng=lambda m: substream(seed, "infer", m),
        truncation=opt["truncation"],
    )

    print(f"G={d.G}  N={d.N}  k={d.k}")
    print("beta_hat: " + np.array2string(f.beta_hat, precision=6))
    print(f"lambda'beta = {f.lambda_beta:.6g}   sigma_hat = {f.sigma_hat:.6g}   t = {f.t_stat:.6g}")
    print(f"{'method':<12} {'cv':>10} {'decision':<16} {'ci_lo':>12} {'ci_hi':>12}")
    lines = []
    for m in methods:
        r = results[m]
        lo, hi = f.confidence_interval(r.cv_effective)
        verdict = "reject" if r.reject else "fail-to-reject"
        print(f"{m:<12} {r.cv_effective:>10.4f} {verdict:<16} {lo:>12.6g} {hi:>12.6g}")
        lines.append({
            "method": m, "cv": r.cv_effective, "reject": bool(r.reject),
            "ci_lo": lo, "ci_hi": hi, **r.meta,
        })
        if m == "analytic":
            k1, k2, k3, k4 = r.meta["kcum"]
            print(f"{'':<12} k1={k1:.4f} k2={k2:.4f} k3={k3:.4f} k4={k4:.4f} "
                  f"q2(z0)={r.meta['q2_at_z0']:.4f}")
    if opt["report"]:
        payload = {
            "format_version": 1,
            "G": d.G, "N": d.N, "k": d.k,
            "beta_hat": [float(v) for v in f.beta_hat],
            "lambda_beta": f.lambda_beta, "sigma_hat": f.sigma_hat, "t": f.t_stat,
            "alpha": h.alpha, "methods": lines,
        }
        with open(opt["report"], "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if opt["out"]:
        with open(opt["out"], "w", encoding="utf-8") as fh:
            fh.write("method,cv,reject,ci_lo,ci_hi\n")
            for line in lines:
                fh.write(f"{line['method']},{line['cv']!r},{int(line['reject'])},"
                         f"{line['ci_lo']!r},{line['ci_hi']!r}\n")
    return 0


def cmd_mc(args: argparse.Namespace) -> int:
    opt = _merged(args, {
        "design": "exp2", "G": "10,25,50", "reps": 1000, "boot": 999,
        "alpha": 0.05, "methods": "normal,student_d1,student_d2,pairs,wcb,analytic",
        "seed": DEFAULT_SEED, "threads": None, "panel": None,
        "panel_cols": "state,year,lnwage", "truncation": None,
        "out": None, "report": None,
    })
    designs = _parse_names(opt["design"])
    G_list = [int(v) for v in _parse_names(opt["G"])]
    methods = tuple(_parse_names(opt["methods"]))
    threads = int(opt["threads"]) if opt["threads"] is not None else _default_threads()
    panel = None
    if "bdm1" in designs:
        if not opt["panel"]:
            raise ConfigError("design bdm1 requires --panel")
        scol, ycol, vcol = _parse_names(opt["panel_cols"])
        panel = load_state_year_panel(opt["panel"], scol, ycol, vcol)

    gr = run_grid(
        designs, G_list, methods,
        reps=int(opt["reps"]), boot=int(opt["boot"]), alpha=float(opt["alpha"]),
        seed=int(opt["seed"]), threads=threads, panel=panel,
        truncation=opt["truncation"],
    )
    print(format_tables(gr), end="")
    # timing goes to stderr so stdout stays byte-identical across reruns
    total = sum(r.wall_time for r in gr.results) / max(len(gr.methods), 1)
    print(f"[{gr.reps} reps, boot={gr.boot}, seed={gr.seed}, threads={threads}, "
          f"{total:.1f}s simulation time]", file=sys.stderr)
    if opt["out"]:
        write_csv(gr, opt["out"])
    if opt["report"]:
        write_report(gr, opt["report"])
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "infer":
            return cmd_infer(args)
        return cmd_mc(args)
    except (RankError, DegenerateVarianceError) as exc:
        print(f"clustercrit: numerical failure: {exc}", file=sys.stderr)
        return _EXIT_NUMERICAL
    except ClusterCritError as exc:
        print(f"clustercrit: {exc}", file=sys.stderr)
        return _EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"clustercrit: {exc}", file=sys.stderr)
        return _EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
