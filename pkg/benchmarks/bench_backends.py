"""Throughput comparison of the bootstrap kernel backends.

Runs the pairs and wild-cluster kernels on representative simulated
workloads and reports bootstrap draws per second for the compiled
extension and the pure-numpy fallback.

    python benchmarks/bench_backends.py [--boot 999] [--reps 40]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import clustercrit._kernels as K
from clustercrit.designs import generate
from clustercrit.methods import restricted_beta
from clustercrit.ols import fit
from clustercrit.rng import substream


def _workload(design, G, boot, reps, seed=7):
    """Precompute kernel inputs for `reps` replications of one design."""
    jobs = []
    for rep in range(reps):
        d, h = generate(design, G, substream(seed, design, G, rep))
        f = fit(d, h)
        idx = substream(seed, design, G, rep, "pairs").integers(
            0, d.G, size=(boot, d.G), dtype=np.int64
        )
        bt = restricted_beta(d, h, f)
        u = d.y - d.x @ bt
        cscore = np.add.reduceat(d.x * u[:, None], d.offsets[:-1], axis=0)
        a_inv = f.pi / d.G
        w = a_inv @ h.lam
        signs = substream(seed, design, G, rep, "wcb").integers(
            0, 2, size=(boot, d.G)
        ).astype(np.float64) * 2.0 - 1.0
        jobs.append(
            dict(
                pairs=(f.gram_blocks, f.xty_blocks, h.lam, f.lambda_beta, idx),
                wcb=(f.gram_blocks @ w, cscore @ w, a_inv, cscore, h.lam, signs),
            )
        )
    return jobs


def _time(kernel, jobs, key):
    best = float("inf")
    for _ in range(3):
        tic = time.perf_counter()
        for job in jobs:
            kernel(*job[key])
        best = min(best, time.perf_counter() - tic)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--boot", type=int, default=999)
    ap.add_argument("--reps", type=int, default=40)
    args = ap.parse_args()

    if not K.HAVE_COMPILED:
        print("compiled extension not built; benchmarking the python backend only")

    cases = [("exp2", 50), ("exp2", 200), ("binary3", 50), ("fe4", 50)]
    print(f"{'case':>14} {'kernel':>6} {'python draws/s':>16} {'compiled draws/s':>18} {'speedup':>8}")
    for design, G in cases:
        jobs = _workload(design, G, args.boot, args.reps)
        total = args.boot * args.reps
        for key in ("pairs", "wcb"):
            t_py = _time(getattr(K.reference, f"{key}_abs_tstats"), jobs, key)
            row = f"{design + f'/G={G}':>14} {key:>6} {total / t_py:>16.3e}"
            if K.HAVE_COMPILED:
                t_c = _time(getattr(K._fast, f"{key}_abs_tstats"), jobs, key)
                row += f" {total / t_c:>18.3e} {t_py / t_c:>8.1f}x"
            print(row)


if __name__ == "__main__":
    main()
