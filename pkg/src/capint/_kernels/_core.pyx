# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled tree kernels. Semantics must match _fallback.py bit for bit.

Children are summed left-associated in ascending z-order, thresholds are
processed ascending, running maxima update with a strict > test, and pow
goes through libm exactly like Python floats, so both backends produce
identical bit patterns; the test suite asserts this.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY
from libc.math cimport pow as cpow

cnp.import_array()


def backend_name():
    return "compiled"


# ---------------------------------------------------------------------------
# dyadic-cover DP


cdef void _reduce_inplace(double* buf, Py_ssize_t width, double lb, int radix) noexcept nogil:
    """One bottom-up DP level in place: width parents from width*radix children."""
    cdef Py_ssize_t j
    cdef int k
    cdef double s
    for j in range(width):
        s = buf[j * radix]
        for k in range(1, radix):
            s = s + buf[j * radix + k]
        if s == 0.0:
            buf[j] = 0.0
        elif lb <= s:
            buf[j] = lb
        else:
            buf[j] = s


def content_batch(occ, lpow, int radix):
    """Root DP values for a batch of z-order leaf occupancy rows.

    occ: (m, radix**depth) 0/1 rows; lpow[d] = side(level d)**beta relative to
    the (sub)tree root at d = 0. Returns (m,) float64.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] a = np.ascontiguousarray(
        np.asarray(occ, dtype=np.float64)
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] lp = np.ascontiguousarray(
        np.asarray(lpow, dtype=np.float64)
    )
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t ncells = a.shape[1]
    cdef int depth = lp.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] out = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] buf = np.empty(ncells, dtype=np.float64)
    cdef Py_ssize_t i, j, width
    cdef int d
    cdef double ld = lp[depth]
    for i in range(m):
        for j in range(ncells):
            buf[j] = a[i, j] * ld
        width = ncells
        for d in range(depth - 1, -1, -1):
            width //= radix
            _reduce_inplace(&buf[0], width, lp[d], radix)
        out[i] = buf[0]
    return out


def content_root_and_tables(occ, lpow, int radix):
    """Single-row DP returning per-level node tables [level 0 .. depth]."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] a = np.ascontiguousarray(
        np.asarray(occ, dtype=np.float64).ravel()
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] lp = np.ascontiguousarray(
        np.asarray(lpow, dtype=np.float64)
    )
    cdef Py_ssize_t ncells = a.shape[0]
    cdef int depth = lp.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] buf = np.empty(ncells, dtype=np.float64)
    cdef Py_ssize_t j, width
    cdef int d
    tables = [None] * (depth + 1)
    for j in range(ncells):
        buf[j] = a[j] * lp[depth]
    tables[depth] = np.asarray(buf[:ncells]).copy()
    width = ncells
    for d in range(depth - 1, -1, -1):
        width //= radix
        _reduce_inplace(&buf[0], width, lp[d], radix)
        tables[d] = np.asarray(buf[:width]).copy()
    return tables


# ---------------------------------------------------------------------------
# layer-cake integrals and the dyadic maximal operator


cdef void _accumulate_layers(
    double* v,
    Py_ssize_t ncells,
    double* lp,
    int depth,
    int radix,
    double* I_flat,
    Py_ssize_t* off,
    double* buf,
    tv,
) except *:
    """Add dt * (level-set DP tables) into I_flat for each threshold in tv."""
    cdef double prev = 0.0
    cdef double t, dt, ld = lp[depth]
    cdef Py_ssize_t j, width
    cdef int d
    for tval in tv:
        t = tval
        dt = t - prev
        prev = t
        for j in range(ncells):
            buf[j] = ld if v[j] >= t else 0.0
        for j in range(ncells):
            I_flat[off[depth] + j] += dt * buf[j]
        width = ncells
        for d in range(depth - 1, -1, -1):
            width //= radix
            _reduce_inplace(buf, width, lp[d], radix)
            for j in range(width):
                I_flat[off[d] + j] += dt * buf[j]


def integral_batch(vals, lpow, int radix):
    """Choquet integrals against the dyadic content for a batch of rows."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] a = np.ascontiguousarray(
        np.asarray(vals, dtype=np.float64)
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] lp = np.ascontiguousarray(
        np.asarray(lpow, dtype=np.float64)
    )
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t ncells = a.shape[1]
    cdef int depth = lp.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] out = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] buf = np.empty(ncells, dtype=np.float64)
    cdef Py_ssize_t i, j, width
    cdef int d
    cdef double total, prev, t, dt, ld = lp[depth]
    for i in range(m):
        tv = np.unique(a[i])
        tv = tv[tv > 0.0]
        total = 0.0
        prev = 0.0
        for tval in tv:
            t = tval
            dt = t - prev
            prev = t
            for j in range(ncells):
                buf[j] = ld if a[i, j] >= t else 0.0
            width = ncells
            for d in range(depth - 1, -1, -1):
                width //= radix
                _reduce_inplace(&buf[0], width, lp[d], radix)
            total += dt * buf[0]
        out[i] = total
    return out


cdef void _maximal_row(
    double* v,
    Py_ssize_t ncells,
    double* lp,
    int depth,
    int radix,
    double* I_flat,
    Py_ssize_t* off,
    double* buf,
    double* A,
    double* A2,
    tv,
    double* out_row,
    double* integ,
) except *:
    """Per-leaf maximal values and root integral for one z-order value row."""
    cdef Py_ssize_t total_nodes = off[depth] + ncells
    cdef Py_ssize_t j, width
    cdef int d
    cdef double pa, vd
    for j in range(total_nodes):
        I_flat[j] = 0.0
    _accumulate_layers(v, ncells, lp, depth, radix, I_flat, off, buf, tv)
    A[0] = I_flat[0] / lp[0]
    width = 1
    for d in range(1, depth + 1):
        width *= radix
        for j in range(width):
            pa = A[j // radix]
            vd = I_flat[off[d] + j] / lp[d]
            A2[j] = pa if pa > vd else vd
        for j in range(width):
            A[j] = A2[j]
    for j in range(ncells):
        out_row[j] = A[j]
    integ[0] = I_flat[0]


def dyadic_maximal_batch(vals, lpow, int radix):
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] a = np.ascontiguousarray(
        np.asarray(vals, dtype=np.float64)
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] lp = np.ascontiguousarray(
        np.asarray(lpow, dtype=np.float64)
    )
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t ncells = a.shape[1]
    cdef int depth = lp.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = np.empty_like(a)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] off = np.empty(depth + 1, dtype=np.intp)
    cdef Py_ssize_t nodes = 0, w = 1
    cdef int d
    for d in range(depth + 1):
        off[d] = nodes
        nodes += w
        w *= radix
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] I_flat = np.empty(nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] buf = np.empty(ncells, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] A = np.empty(ncells, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] A2 = np.empty(ncells, dtype=np.float64)
    cdef Py_ssize_t i
    cdef double integ
    for i in range(m):
        tv = np.unique(a[i])
        tv = tv[tv > 0.0]
        _maximal_row(
            &a[i, 0], ncells, &lp[0], depth, radix,
            &I_flat[0], <Py_ssize_t*> &off[0], &buf[0], &A[0], &A2[0],
            tv, &out[i, 0], &integ,
        )
    return out


def dyweak_stats_batch(vals, lpow, int radix):
    """Per row: (sup_t t*H({Mf >= t}), integral of f). Exact level-set sup."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] a = np.ascontiguousarray(
        np.asarray(vals, dtype=np.float64)
    )
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] lp = np.ascontiguousarray(
        np.asarray(lpow, dtype=np.float64)
    )
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t ncells = a.shape[1]
    cdef int depth = lp.shape[0] - 1
    cdef cnp.ndarray[cnp.float64_t, ndim=2, mode="c"] out = np.empty((m, 2), dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] off = np.empty(depth + 1, dtype=np.intp)
    cdef Py_ssize_t nodes = 0, w = 1
    cdef int d
    for d in range(depth + 1):
        off[d] = nodes
        nodes += w
        w *= radix
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] I_flat = np.empty(nodes, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] buf = np.empty(ncells, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] A = np.empty(ncells, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] A2 = np.empty(ncells, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] mf = np.empty(ncells, dtype=np.float64)
    cdef Py_ssize_t i, j, width
    cdef double integ, best, cand, vthr, ld = lp[depth]
    for i in range(m):
        tv = np.unique(a[i])
        tv = tv[tv > 0.0]
        _maximal_row(
            &a[i, 0], ncells, &lp[0], depth, radix,
            &I_flat[0], <Py_ssize_t*> &off[0], &buf[0], &A[0], &A2[0],
            tv, &mf[0], &integ,
        )
        vv = np.unique(np.asarray(mf[:ncells]))
        vv = vv[vv > 0.0]
        best = 0.0
        for vval in vv:
            vthr = vval
            for j in range(ncells):
                buf[j] = ld if mf[j] >= vthr else 0.0
            width = ncells
            for d in range(depth - 1, -1, -1):
                width //= radix
                _reduce_inplace(&buf[0], width, lp[d], radix)
            cand = vthr * buf[0]
            if cand > best:
                best = cand
        out[i, 0] = best
        out[i, 1] = integ
    return out


# ---------------------------------------------------------------------------
# exact 1-d ball content and ball maximal operators


cdef Py_ssize_t _runs_ge(
    double* v, Py_ssize_t lo, Py_ssize_t hi, double t, Py_ssize_t* rs, Py_ssize_t* re
) noexcept nogil:
    """Maximal runs of {v >= t} within [lo, hi], indices relative to lo."""
    cdef Py_ssize_t R = 0, i
    cdef bint inrun = False
    for i in range(lo, hi + 1):
        if v[i] >= t:
            if not inrun:
                rs[R] = i - lo
                inrun = True
        else:
            if inrun:
                re[R] = i - lo
                R += 1
                inrun = False
    if inrun:
        re[R] = hi + 1 - lo
        R += 1
    return R


cdef double _ball_content_runs(
    Py_ssize_t* rs, Py_ssize_t* re, Py_ssize_t R,
    double beta, double half, double om, double* best,
) noexcept nogil:
    """Quadratic DP over runs: optimal grouping into covering intervals."""
    cdef Py_ssize_t j, i
    cdef double b, cost
    if R == 0:
        return 0.0
    best[0] = 0.0
    for j in range(1, R + 1):
        b = INFINITY
        for i in range(1, j + 1):
            cost = best[i - 1] + om * cpow((re[j - 1] - rs[i - 1]) * half, beta)
            if cost < b:
                b = cost
        best[j] = b
    return best[R]


def ball_content_1d(occ, double beta, double h, double om):
    """Exact ball-cover infimum on the line (optimal covers group runs)."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] a = np.ascontiguousarray(
        (np.asarray(occ).ravel() != 0).astype(np.float64)
    )
    cdef Py_ssize_t C = a.shape[0]
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] rs = np.empty(C + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] re = np.empty(C + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] best = np.empty(C + 2, dtype=np.float64)
    cdef Py_ssize_t R
    if C == 0:
        return 0.0
    R = _runs_ge(&a[0], 0, C - 1, 0.5, <Py_ssize_t*> &rs[0], <Py_ssize_t*> &re[0])
    return _ball_content_runs(
        <Py_ssize_t*> &rs[0], <Py_ssize_t*> &re[0], R, beta, 0.5 * h, om, &best[0]
    )


cdef void _insertion_sort(double* x, Py_ssize_t nv) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double key
    for i in range(1, nv):
        key = x[i]
        j = i - 1
        while j >= 0 and x[j] > key:
            x[j + 1] = x[j]
            j -= 1
        x[j + 1] = key


cdef double _window_integral_c(
    double* v, Py_ssize_t lo, Py_ssize_t hi, double beta, double h, double om,
    double* tbuf, Py_ssize_t* rs, Py_ssize_t* re, double* best,
) noexcept nogil:
    """Layer-cake Choquet integral of v on [lo, hi] against the exact content."""
    cdef Py_ssize_t W = hi + 1 - lo
    cdef Py_ssize_t i, R
    cdef double total = 0.0, prev = 0.0, t, dt, last = -1.0
    for i in range(W):
        tbuf[i] = v[lo + i]
    _insertion_sort(tbuf, W)
    for i in range(W):
        t = tbuf[i]
        if t <= 0.0 or t == last:
            continue
        last = t
        dt = t - prev
        prev = t
        R = _runs_ge(v, lo, hi, t, rs, re)
        total += dt * _ball_content_runs(rs, re, R, beta, 0.5 * h, om, best)
    return total


def ball_maximal_1d(vals, double beta, double h, double om):
    """Centered ball maximal on the line with the exact ball content.

    Windows are the fully contained cell blocks [k-j, k+j] clipped to the
    grid, evaluated at the jump radii (j + 1/2) h; between jumps the average
    decays, and a jump's left limit is dominated by the value at the jump.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] v = np.ascontiguousarray(
        np.asarray(vals, dtype=np.float64).ravel()
    )
    cdef Py_ssize_t C = v.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] out = np.zeros(C, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] tbuf = np.empty(C + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] rs = np.empty(C + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] re = np.empty(C + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] best = np.empty(C + 2, dtype=np.float64)
    cdef Py_ssize_t k, j, lo, hi, jm
    cdef double bestv, num, r, val
    for k in range(C):
        bestv = 0.0
        jm = k if k > C - 1 - k else C - 1 - k
        for j in range(jm + 1):
            lo = k - j
            if lo < 0:
                lo = 0
            hi = k + j
            if hi > C - 1:
                hi = C - 1
            num = _window_integral_c(
                &v[0], lo, hi, beta, h, om,
                &tbuf[0], <Py_ssize_t*> &rs[0], <Py_ssize_t*> &re[0], &best[0],
            )
            r = (j + 0.5) * h
            val = num / (om * cpow(r, beta))
            if val > bestv:
                bestv = val
        out[k] = bestv
    return out


def ball_maximal_1d_uncentered(vals, double beta, double h, double om):
    """Uncentered ball maximal on the line, candidate centers on the L+2 grid.

    Centers g = i*h/4, radii j*h/4; cell c is inside B(g, j h/4) when
    max(i - 4c, 4c + 4 - i) <= j. Window integrals are computed once per
    distinct window; suffix maxima over j serve each cell from the smallest
    radius whose ball contains its center.
    """
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] v = np.ascontiguousarray(
        np.asarray(vals, dtype=np.float64).ravel()
    )
    cdef Py_ssize_t C = v.shape[0]
    cdef double q = h / 4.0
    cdef Py_ssize_t jmax = 4 * C
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] out = np.zeros(C, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] vals_j = np.zeros(jmax + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] dists = np.empty(C + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] order = np.empty(C + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] pos = np.empty(4 * C + 6, dtype=np.intp)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] tbuf = np.empty(C + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] rs = np.empty(C + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.intp_t, ndim=1, mode="c"] re = np.empty(C + 1, dtype=np.intp)
    cdef cnp.ndarray[cnp.float64_t, ndim=1, mode="c"] best = np.empty(C + 2, dtype=np.float64)
    cdef Py_ssize_t i, c, j, k, ptr, lo, hi, plo, phi, j0, dmax, a1, a2
    cdef double num, val
    for i in range(4 * C + 1):
        dmax = 0
        for c in range(C):
            a1 = i - 4 * c
            a2 = 4 * c + 4 - i
            dists[c] = a1 if a1 > a2 else a2
            if dists[c] > dmax:
                dmax = dists[c]
        # counting sort by (distance, cell): stable, cells ascend in ties
        for j in range(dmax + 1):
            pos[j] = 0
        for c in range(C):
            pos[dists[c]] += 1
        ptr = 0
        for j in range(dmax + 1):
            k = pos[j]
            pos[j] = ptr
            ptr += k
        for c in range(C):
            order[pos[dists[c]]] = c
            pos[dists[c]] += 1
        for j in range(jmax + 1):
            vals_j[j] = 0.0
        lo = C
        hi = -1
        ptr = 0
        num = 0.0
        plo = -1
        phi = -1
        for j in range(1, jmax + 1):
            while ptr < C and dists[order[ptr]] <= j:
                c = order[ptr]
                if c < lo:
                    lo = c
                if c > hi:
                    hi = c
                ptr += 1
            if ptr == 0:
                continue
            if lo != plo or hi != phi:
                num = _window_integral_c(
                    &v[0], lo, hi, beta, h, om,
                    &tbuf[0], <Py_ssize_t*> &rs[0], <Py_ssize_t*> &re[0], &best[0],
                )
                plo = lo
                phi = hi
            vals_j[j] = num / (om * cpow(j * q, beta))
        for j in range(jmax - 1, 0, -1):
            if vals_j[j + 1] > vals_j[j]:
                vals_j[j] = vals_j[j + 1]
        for k in range(C):
            j0 = i - 4 * k - 2
            if j0 < 0:
                j0 = -j0
            if j0 < 1:
                j0 = 1
            if vals_j[j0] > out[k]:
                out[k] = vals_j[j0]
    return out
