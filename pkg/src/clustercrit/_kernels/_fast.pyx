# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled bootstrap kernels.

Same contracts as `clustercrit._kernels.reference`; the draw loops run
without the GIL so the Monte Carlo harness scales across threads.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, sqrt
from scipy.linalg.cython_lapack cimport dgelss

cnp.import_array()

# matches reference.DEGENERATE_RTOL: scores below this fraction of their
# pre-cancellation magnitude are rounding noise
cdef double DEGENERATE_RTOL = 1e-12


def pairs_abs_tstats(
    const double[:, :, ::1] gram,
    const double[:, ::1] xty,
    const double[::1] lam,
    double center,
    const cnp.int64_t[:, ::1] idx,
    double rcond=1e-10,
):
    """See reference.pairs_abs_tstats."""
    cdef Py_ssize_t B = idx.shape[0]
    cdef Py_ssize_t R = idx.shape[1]
    cdef Py_ssize_t G = gram.shape[0]
    cdef int k = <int> gram.shape[1]
    cdef int nrhs = 2, info = 0, rank = 0, lwork = -1
    cdef double wquery = 0.0
    cdef double rc = rcond

    # workspace query
    cdef double[::1] aq = np.zeros(k * k)
    cdef double[::1] bq = np.zeros(k * 2)
    cdef double[::1] sq = np.zeros(k)
    dgelss(&k, &k, &nrhs, &aq[0], &k, &bq[0], &k, &sq[0], &rc, &rank,
           &wquery, &lwork, &info)
    lwork = <int> wquery
    if lwork < 1:
        lwork = 8 * k + 16

    out_arr = np.empty(B)
    cdef double[::1] out = out_arr
    cdef double[::1] work = np.zeros(lwork)
    cdef double[::1] awork = np.zeros(k * k)
    cdef double[::1] bwork = np.zeros(k * 2)
    cdef double[::1] svals = np.zeros(k)

    cdef Py_ssize_t b, r, j
    cdef int i, i2
    cdef cnp.int64_t g
    cdef double acc, e, num, val, t1, t2, smax
    cdef long n_pinv = 0, n_degen = 0

    with nogil:
        for b in range(B):
            # accumulate the resampled Gram matrix and cross-products
            for i in range(k * k):
                awork[i] = 0.0
            for i in range(k):
                bwork[i] = 0.0
                bwork[k + i] = lam[i]
            for r in range(R):
                g = idx[b, r]
                for i in range(k):
                    bwork[i] += xty[g, i]
                    for i2 in range(k):
                        awork[i * k + i2] += gram[g, i, i2]
            # minimal-norm least-squares solve: col 0 -> beta*, col 1 -> pinv(A*) lam
            dgelss(&k, &k, &nrhs, &awork[0], &k, &bwork[0], &k, &svals[0],
                   &rc, &rank, &work[0], &lwork, &info)
            if info != 0:
                out[b] = INFINITY
                n_degen += 1
                continue
            if rank < k:
                n_pinv += 1
            # scores per resampled cluster; the G factors in Pi* and in
            # sigma*^2 cancel against sqrt(G) in the numerator
            acc = 0.0
            smax = 0.0
            for r in range(R):
                g = idx[b, r]
                e = 0.0
                t1 = 0.0
                t2 = 0.0
                for i in range(k):
                    val = 0.0
                    for i2 in range(k):
                        val += gram[g, i, i2] * bwork[i2]
                    t1 += bwork[k + i] * xty[g, i]
                    t2 += bwork[k + i] * val
                e = t1 - t2
                acc += e * e
                val = fabs(t1) + fabs(t2)
                if val > smax:
                    smax = val
            num = -center
            for i in range(k):
                num += lam[i] * bwork[i]
            if acc <= R * (DEGENERATE_RTOL * smax) * (DEGENERATE_RTOL * smax):
                out[b] = INFINITY
                n_degen += 1
            else:
                out[b] = fabs(num) / sqrt(acc)
    return out_arr, int(n_pinv), int(n_degen)


def wcb_abs_tstats(
    const double[:, ::1] proj,
    const double[::1] dscore,
    const double[:, ::1] a_inv,
    const double[:, ::1] cscore,
    const double[::1] lam,
    const double[:, ::1] signs,
):
    """See reference.wcb_abs_tstats."""
    cdef Py_ssize_t B = signs.shape[0]
    cdef Py_ssize_t G = signs.shape[1]
    cdef Py_ssize_t k = cscore.shape[1]

    out_arr = np.empty(B)
    cdef double[::1] out = out_arr
    cdef double[::1] m = np.zeros(k)
    cdef double[::1] delta = np.zeros(k)

    cdef Py_ssize_t b, g, i, j
    cdef double v, acc, s, num, t2, smax
    cdef long n_degen = 0

    with nogil:
        for b in range(B):
            for i in range(k):
                m[i] = 0.0
            for g in range(G):
                v = signs[b, g]
                for i in range(k):
                    m[i] += v * cscore[g, i]
            num = 0.0
            for i in range(k):
                v = 0.0
                for j in range(k):
                    v += a_inv[i, j] * m[j]
                delta[i] = v
                num += lam[i] * v
            acc = 0.0
            smax = 0.0
            for g in range(G):
                t2 = 0.0
                for i in range(k):
                    t2 += proj[g, i] * delta[i]
                s = signs[b, g] * dscore[g] - t2
                acc += s * s
                v = fabs(dscore[g]) + fabs(t2)
                if v > smax:
                    smax = v
            if acc <= G * (DEGENERATE_RTOL * smax) * (DEGENERATE_RTOL * smax):
                out[b] = 0.0
                n_degen += 1
            else:
                out[b] = fabs(num) / sqrt(acc)
    return out_arr, 0, int(n_degen)
