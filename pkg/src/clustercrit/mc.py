"""Monte Carlo harness: runs the method suite over a (design, G) grid.

Every replication gets its own counter-based random substream keyed by
(seed, design, G, replication), and every method sees the same dataset
within a replication.  Workers write into preassigned slots, so the
aggregated output is a pure function of the configuration: rerunning with
a different --threads value produces byte-identical reports.  Timing is
kept out of the report files for the same reason.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from io import StringIO

import numpy as np

from .designs import DESIGNS, StateYearPanel, generate
from .errors import ConfigError, ValidationError
from .methods import METHODS, evaluate_methods
from .ols import fit
from .rng import mc_se, substream

REPORT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class McResult:
    """One (design, G, method) cell of the simulation tables."""

    design: str
    G: int
    method: str
    alpha: float
    reject_rate: float
    mc_se: float
    median_cv: float
    reps: int
    boot: int
    degenerate_count: int
    pinv_count: int
    wall_time: float  # per (design, G) cell; excluded from report files


@dataclass(frozen=True)
class GridResult:
    """All cells of a grid run plus the empirical |t| quantiles."""

    results: tuple[McResult, ...]
    empirical_cv: dict[tuple[str, int], float]
    designs: tuple[str, ...]
    G_list: tuple[int, ...]
    methods: tuple[str, ...]
    reps: int
    boot: int
    alpha: float
    seed: int


def _one_rep(design, G, rep, seed, methods, boot, alpha, panel, truncation):
    gen = substream(seed, design, G, rep)
    d, h = generate(design, G, gen, alpha, panel)
    f = fit(d, h)
    res = evaluate_methods(
        d,
        h,
        f,
        methods,
        boot=boot,
        boot_rng=lambda method: substream(seed, design, G, rep, method),
        truncation=truncation,
    )
    return abs(f.t_stat), res


def _validate_cell(design, G, seed, methods, boot, alpha, panel, truncation):
    """Probe one replication so configuration errors surface up front."""
    try:
        _one_rep(design, G, 0, seed, methods, boot, alpha, panel, truncation)
    except ValidationError as exc:
        raise ConfigError(f"design {design}, G={G}: {exc}") from exc


def run_grid(
    designs,
    G_list,
    methods,
    reps: int,
    boot: int,
    alpha: float,
    seed: int,
    threads: int = 1,
    panel: StateYearPanel | None = None,
    truncation: float | None = None,
) -> GridResult:
    """Simulate every (design, G) cell and aggregate the method decisions."""
    designs = tuple(designs)
    G_list = tuple(int(G) for G in G_list)
    methods = tuple(methods)
    if reps < 1:
        raise ConfigError("need reps >= 1")
    if any(m in ("pairs", "wcb") for m in methods) and boot < 1:
        raise ConfigError("bootstrap methods need boot >= 1")
    for design in designs:
        if design not in DESIGNS:
            raise ConfigError(f"unknown design {design!r}; choose from {DESIGNS}")
        if design == "bdm1" and panel is None:
            raise ConfigError("design bdm1 requires --panel")
    for m in methods:
        if m not in METHODS:
            raise ConfigError(f"unknown method {m!r}; choose from {METHODS}")
    threads = max(1, int(threads))

    results: list[McResult] = []
    empirical: dict[tuple[str, int], float] = {}
    for design in designs:
        for G in G_list:
            _validate_cell(design, G, seed, methods, boot, alpha, panel, truncation)
            tic = time.perf_counter()
            abs_t = np.empty(reps)
            cvs = {m: np.empty(reps) for m in methods}
            rej = {m: np.zeros(reps, dtype=bool) for m in methods}
            ndeg = {m: np.zeros(reps, dtype=np.int64) for m in methods}
            npinv = {m: np.zeros(reps, dtype=np.int64) for m in methods}

            def work(lo: int, hi: int) -> None:
                for rep in range(lo, hi):
                    t_abs, res = _one_rep(
                        design, G, rep, seed, methods, boot, alpha, panel, truncation
                    )
                    abs_t[rep] = t_abs
                    for m, r in res.items():
                        cvs[m][rep] = r.cv_effective
                        rej[m][rep] = r.reject
                        ndeg[m][rep] = r.meta.get("n_degenerate", 0)
                        npinv[m][rep] = r.meta.get("n_pinv", 0)

            if threads == 1:
                work(0, reps)
            else:
                bounds = np.linspace(0, reps, threads * 8 + 1).astype(int)
                with ThreadPoolExecutor(max_workers=threads) as pool:
                    futures = [
                        pool.submit(work, int(lo), int(hi))
                        for lo, hi in zip(bounds[:-1], bounds[1:])
                        if hi > lo
                    ]
                    for fut in futures:
                        fut.result()
            elapsed = time.perf_counter() - tic

            m_emp = math.ceil(reps * (1.0 - alpha))
            empirical[(design, G)] = float(np.sort(abs_t)[m_emp - 1])
            for m in methods:
                p = float(rej[m].mean())
                results.append(
                    McResult(
                        design=design,
                        G=G,
                        method=m,
                        alpha=alpha,
                        reject_rate=p,
                        mc_se=mc_se(p, reps),
                        median_cv=float(np.median(cvs[m])),
                        reps=reps,
                        boot=boot,
                        degenerate_count=int(ndeg[m].sum()),
                        pinv_count=int(npinv[m].sum()),
                        wall_time=elapsed,
                    )
                )
    return GridResult(
        results=tuple(results),
        empirical_cv=empirical,
        designs=designs,
        G_list=G_list,
        methods=methods,
        reps=reps,
        boot=boot,
        alpha=alpha,
        seed=seed,
    )


def report_dict(gr: GridResult) -> dict:
    """Structured report; deterministic for a given configuration."""
    return {
        "format_version": REPORT_FORMAT_VERSION,
        "alpha": gr.alpha,
        "seed": gr.seed,
        "reps": gr.reps,
        "boot": gr.boot,
        "designs": list(gr.designs),
        "G_list": list(gr.G_list),
        "methods": list(gr.methods),
        "results": [
            {
                "design": r.design,
                "G": r.G,
                "method": r.method,
                "alpha": r.alpha,
                "reject_rate": r.reject_rate,
                "mc_se": r.mc_se,
                "median_cv": r.median_cv,
                "reps": r.reps,
                "boot": r.boot,
                "degenerate_count": r.degenerate_count,
                "pinv_count": r.pinv_count,
            }
            for r in gr.results
        ],
        "empirical_cv": [
            {"design": design, "G": G, "cv": cv}
            for (design, G), cv in sorted(gr.empirical_cv.items())
        ],
    }


def write_report(gr: GridResult, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report_dict(gr), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(gr: GridResult, path) -> None:
    """Long-format delimited table, one row per (design, G, method)."""
    cols = (
        "design,G,method,alpha,reps,boot,reject_rate,mc_se,median_cv,"
        "degenerate_count,pinv_count"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(cols + "\n")
        for r in gr.results:
            fh.write(
                f"{r.design},{r.G},{r.method},{r.alpha!r},{r.reps},{r.boot},"
                f"{r.reject_rate!r},{r.mc_se!r},{r.median_cv!r},"
                f"{r.degenerate_count},{r.pinv_count}\n"
            )


def format_tables(gr: GridResult) -> str:
    """Human-readable rejection-rate and critical-value tables."""
    by_cell = {(r.design, r.G, r.method): r for r in gr.results}
    out = StringIO()
    width = max(len(m) for m in gr.methods) + 2
    for design in gr.designs:
        out.write(f"\n== design {design}: rejection rate at alpha={gr.alpha} ==\n")
        out.write("   G " + "".join(f"{m:>{width}}" for m in gr.methods) + "\n")
        for G in gr.G_list:
            row = "".join(
                f"{by_cell[(design, G, m)].reject_rate:>{width}.3f}" for m in gr.methods
            )
            out.write(f"{G:4d} " + row + "\n")
        out.write(f"\n== design {design}: median critical value ==\n")
        out.write(
            "   G "
            + "".join(f"{m:>{width}}" for m in gr.methods)
            + f"{'simulated':>{max(width, 11)}}\n"
        )
        for G in gr.G_list:
            row = "".join(
                f"{by_cell[(design, G, m)].median_cv:>{width}.3f}" for m in gr.methods
            )
            out.write(
                f"{G:4d} " + row + f"{gr.empirical_cv[(design, G)]:>{max(width, 11)}.3f}\n"
            )
    return out.getvalue()
