"""Pure-Python/numpy kernel fallback.

Operation order mirrors the compiled core exactly: children are summed
left-associated in ascending z-order, thresholds are processed ascending,
running maxima update with a strict > test. Transcendental calls (pow) go
through Python floats so both backends hit the same libm. This keeps the
two backends bit-identical, which the test suite asserts.
"""

from __future__ import annotations

import numpy as np


def backend_name():
    return "fallback"


# ---------------------------------------------------------------------------
# dyadic-cover DP


def _reduce_level(buf: np.ndarray, lb: float, radix: int) -> np.ndarray:
    """One bottom-up DP level: rows of (m, width*radix) -> (m, width)."""
    s = buf[:, 0::radix].copy()
    for k in range(1, radix):
        s += buf[:, k::radix]
    return np.where(s == 0.0, 0.0, np.where(lb <= s, lb, s))


def content_batch(occ, lpow, radix):
    """Root DP values for a batch of z-order leaf occupancy rows.

    occ: (m, radix**depth) 0/1 rows; lpow[d] = side(level d)**beta relative to
    the (sub)tree root at d = 0. Returns (m,) float64.
    """
    occ = np.asarray(occ, dtype=np.float64)
    lpow = np.asarray(lpow, dtype=np.float64)
    depth = lpow.shape[0] - 1
    buf = occ * lpow[depth]
    for d in range(depth - 1, -1, -1):
        buf = _reduce_level(buf, lpow[d], radix)
    return buf[:, 0].copy()


def content_root_and_tables(occ, lpow, radix):
    """Single-row DP returning per-level node tables [level 0 .. depth]."""
    occ = np.asarray(occ, dtype=np.float64).reshape(1, -1)
    lpow = np.asarray(lpow, dtype=np.float64)
    depth = lpow.shape[0] - 1
    tables = [None] * (depth + 1)
    buf = occ * lpow[depth]
    tables[depth] = buf[0].copy()
    for d in range(depth - 1, -1, -1):
        buf = _reduce_level(buf, lpow[d], radix)
        tables[d] = buf[0].copy()
    return tables


# ---------------------------------------------------------------------------
# layer-cake integrals and the dyadic maximal operator


def _integral_tables_1(v: np.ndarray, lpow: np.ndarray, radix: int):
    """Per-level tables of integrals over every node: I_d[node] = int_node f dH.

    Layer cake over the distinct positive values of v (ascending); each layer
    contributes dt * (DP table of the level set) at every tree node.
    """
    depth = lpow.shape[0] - 1
    sizes = [radix**d for d in range(depth + 1)]
    I = [np.zeros(sz) for sz in sizes]
    tv = np.unique(v)
    tv = tv[tv > 0.0]
    prev = 0.0
    for t in tv:
        dt = t - prev
        prev = t
        occ = (v >= t).astype(np.float64).reshape(1, -1)
        buf = occ * lpow[depth]
        I[depth] += dt * buf[0]
        for d in range(depth - 1, -1, -1):
            buf = _reduce_level(buf, lpow[d], radix)
            I[d] += dt * buf[0]
    return I


def integral_batch(vals, lpow, radix):
    """Choquet integrals against the dyadic content for a batch of rows."""
    vals = np.asarray(vals, dtype=np.float64)
    lpow = np.asarray(lpow, dtype=np.float64)
    out = np.empty(vals.shape[0])
    for i in range(vals.shape[0]):
        out[i] = _integral_tables_1(vals[i], lpow, radix)[0][0]
    return out


def _maximal_1(v: np.ndarray, lpow: np.ndarray, radix: int):
    """(per-leaf maximal values, root integral) for one z-order value row."""
    depth = lpow.shape[0] - 1
    I = _integral_tables_1(v, lpow, radix)
    A = I[0] / lpow[0]
    for d in range(1, depth + 1):
        A = np.maximum(np.repeat(A, radix), I[d] / lpow[d])
    return A, I[0][0]


def dyadic_maximal_batch(vals, lpow, radix):
    vals = np.asarray(vals, dtype=np.float64)
    lpow = np.asarray(lpow, dtype=np.float64)
    out = np.empty_like(vals)
    for i in range(vals.shape[0]):
        out[i], _ = _maximal_1(vals[i], lpow, radix)
    return out


def dyweak_stats_batch(vals, lpow, radix):
    """Per row: (sup_t t*H({Mf >= t}), integral of f). Exact level-set sup.

    The sup over t > 0 of t*H({Mf > t}) is attained as a left limit at the
    distinct values of Mf, where the strict superlevel set equals {Mf >= v}.
    """
    vals = np.asarray(vals, dtype=np.float64)
    lpow = np.asarray(lpow, dtype=np.float64)
    m = vals.shape[0]
    out = np.empty((m, 2))
    for i in range(m):
        mf, integ = _maximal_1(vals[i], lpow, radix)
        vv = np.unique(mf)
        vv = vv[vv > 0.0]
        best = 0.0
        for v in vv:
            occ = (mf >= v).astype(np.float64).reshape(1, -1)
            hv = content_batch(occ, lpow, radix)[0]
            cand = v * hv
            if cand > best:
                best = cand
        out[i, 0] = best
        out[i, 1] = integ
    return out


# ---------------------------------------------------------------------------
# exact 1-d ball content and ball maximal operators


def _runs(occ) -> list[tuple[int, int]]:
    """Maximal runs [start, end) of occupied cells in a 0/1 row."""
    runs = []
    start = -1
    for i, o in enumerate(occ):
        if o and start < 0:
            start = i
        elif not o and start >= 0:
            runs.append((start, i))
            start = -1
    if start >= 0:
        runs.append((start, len(occ)))
    return runs


def ball_content_1d(occ, beta: float, h: float, omega: float) -> float:
    """Exact ball-cover infimum on the line.

    Balls are intervals; an optimal cover groups consecutive occupied runs
    and never splits a run (x**beta is subadditive for beta <= 1), so a
    quadratic DP over runs is exact. Cost of one ball spanning length ell
    is omega * (ell/2)**beta.
    """
    occ = [bool(x) for x in np.asarray(occ).ravel()]
    runs = _runs(occ)
    R = len(runs)
    if R == 0:
        return 0.0
    half = 0.5 * h
    best = [0.0] * (R + 1)
    for j in range(1, R + 1):
        end_j = runs[j - 1][1]
        b = float("inf")
        for i in range(1, j + 1):
            span_cells = end_j - runs[i - 1][0]
            cost = best[i - 1] + omega * pow(span_cells * half, beta)
            if cost < b:
                b = cost
        best[j] = b
    return best[R]


def _window_integral_1d(v, lo: int, hi: int, beta: float, h: float, omega: float) -> float:
    """Choquet integral of v restricted to cells [lo, hi] against the exact
    1-d ball content; layer cake over the window's distinct positive values."""
    w = v[lo : hi + 1]
    tv = np.unique(w)
    tv = tv[tv > 0.0]
    total = 0.0
    prev = 0.0
    for t in tv:
        dt = t - prev
        prev = t
        occ = w >= t
        total += dt * ball_content_1d(occ, beta, h, omega)
    return total


def ball_maximal_1d(vals, beta: float, h: float, omega: float):
    """Centered ball maximal on the line with the exact ball content.

    The ball B(x, r) at a cell center fully contains the window of cells
    within j of the center exactly when r >= (j + 1/2) h, so those are the
    radii where the average jumps; between jumps it decays, and a jump's
    left limit is dominated by the value at the jump (same denominator,
    smaller window). Integrating over fully contained cells keeps every
    numerator <= max(f) * omega * r**beta, the L-infinity contraction.
    """
    v = np.asarray(vals, dtype=np.float64).ravel()
    C = v.size
    out = np.zeros(C)
    for k in range(C):
        best = 0.0
        for j in range(max(k, C - 1 - k) + 1):
            lo = max(0, k - j)
            hi = min(C - 1, k + j)
            num = _window_integral_1d(v, lo, hi, beta, h, omega)
            r = (j + 0.5) * h
            val = num / (omega * pow(r, beta))
            if val > best:
                best = val
        out[k] = best
    return out


def ball_maximal_1d_uncentered(vals, beta: float, h: float, omega: float):
    """Uncentered ball maximal on the line, candidate centers on the L+2 grid.

    Centers g = i*h/4; every candidate radius is j*h/4. Cell c is fully
    inside B(g, j*h/4) when max(i - 4c, 4c + 4 - i) <= j, so per center the
    window changes at those containment distances and integrals are computed
    once per distinct window. A cell x is served by (g, j) when
    |g - x_center| <= j*h/4; suffix maxima over j make the lookup O(1).
    """
    v = np.asarray(vals, dtype=np.float64).ravel()
    C = v.size
    q = h / 4.0
    jmax = 4 * C  # radius up to diam Q0 = 1
    out = np.zeros(C)
    for i in range(4 * C + 1):
        # containment distance from g = i*q to cell c = [4c, 4c+4]*q, q units
        vals_j = np.zeros(jmax + 1)
        dists = [max(i - 4 * c, 4 * c + 4 - i) for c in range(C)]
        order = sorted(range(C), key=lambda c: (dists[c], c))
        lo = C
        hi = -1
        ptr = 0
        num = 0.0
        j_prev = None
        for j in range(1, jmax + 1):
            while ptr < C and dists[order[ptr]] <= j:
                c = order[ptr]
                lo = min(lo, c)
                hi = max(hi, c)
                ptr += 1
            if ptr == 0:
                continue
            if (lo, hi) != j_prev:
                num = _window_integral_1d(v, lo, hi, beta, h, omega)
                j_prev = (lo, hi)
            vals_j[j] = num / (omega * pow(j * q, beta))
        # suffix max over j, then serve each cell center
        for j in range(jmax - 1, 0, -1):
            if vals_j[j + 1] > vals_j[j]:
                vals_j[j] = vals_j[j + 1]
        for k in range(C):
            j0 = max(1, abs(i - 4 * k - 2))
            if vals_j[j0] > out[k]:
                out[k] = vals_j[j0]
    return out
