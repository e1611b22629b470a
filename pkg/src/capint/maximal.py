"""Capacitary maximal operators on step functions.

Three operators share one skeleton: at each cell, take the sup over a
finite family of windows (dyadic ancestors, or discretized balls at the
finitely many radii where the discretization changes) of a normalized
Choquet average. Dyadic averages are exact; ball averages carry the
certified content intervals; capacity averages carry solver tolerance.

The sup over continuous radii collapses to the critical radii because the
discretized ball is right-continuous and piecewise constant in r while the
normalization grows, so on each constancy interval the average is largest
at its left endpoint, and the left limit at a critical radius is dominated
by the value there (same denominator, smaller window).
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .choquet import BallContentEvaluator
from .content import Interval, omega
from .errors import DomainError
from .lattice import DyadicCube, StepFunction, root


@dataclass
class MaximalResult:
    """Per-cell maximal values (row-major); floats when exact, Intervals
    when content enclosures are involved."""

    operator: str
    n: int
    L: int
    params: dict
    values: list
    radii_note: str = ""

    def lo(self) -> np.ndarray:
        return np.array(
            [v.lo if isinstance(v, Interval) else v for v in self.values], dtype=np.float64
        )

    def hi(self) -> np.ndarray:
        return np.array(
            [v.hi if isinstance(v, Interval) else v for v in self.values], dtype=np.float64
        )

    def is_exact(self) -> bool:
        return all(not isinstance(v, Interval) or v.is_point() for v in self.values)


def dyadic_maximal(f: StepFunction, beta, Q0: DyadicCube | None = None) -> MaximalResult:
    """sup over dyadic subcubes of Q0 containing the cell of the cube's
    content-normalized integral; exact. Cells outside Q0 get 0."""
    beta = float(beta)
    if not (0 < beta <= f.n):
        raise DomainError(f"beta must lie in (0, n], got {beta}")
    if Q0 is None:
        Q0 = root(f.n)
    if Q0.n != f.n or Q0.level > f.L:
        raise DomainError("Q0 incompatible with the function's grid")
    if not f.support().within(Q0):
        raise DomainError("f has support outside Q0")
    from .content import level_side_powers
    from .lattice import zorder_perms

    z0, z1 = Q0.cell_span(f.L)
    dense_z = f.dense(order="z")
    lpow = level_side_powers(beta, Q0.level, f.L)
    vals_z = _kernels.dyadic_maximal_batch(
        dense_z[z0:z1].reshape(1, -1), lpow, 1 << f.n
    )
    out_z = np.zeros(f.size, dtype=np.float64)
    out_z[z0:z1] = vals_z[0]
    row_of_z, _ = zorder_perms(f.n, f.L)
    out = np.empty_like(out_z)
    out[row_of_z] = out_z
    return MaximalResult(
        operator="dyadic",
        n=f.n,
        L=f.L,
        params={"beta": beta, "Q0_level": Q0.level, "Q0_index": Q0.index},
        values=[float(v) for v in out],
        radii_note="dyadic ancestors within Q0",
    )


def _group_prefix(d2_flat: list[int]):
    """Group cells by squared distance: ascending distinct values with
    cumulative containment bitmasks."""
    order = sorted(range(len(d2_flat)), key=d2_flat.__getitem__)
    r2s: list[int] = []
    masks: list[int] = []
    bits = 0
    i = 0
    m = len(order)
    while i < m:
        v = d2_flat[order[i]]
        while i < m and d2_flat[order[i]] == v:
            bits |= 1 << order[i]
            i += 1
        r2s.append(v)
        masks.append(bits)
    return r2s, masks


@lru_cache(maxsize=None)
def _window_tables(n: int, L: int, grid: bool):
    """Prefix windows for every ball center, in exact integer arithmetic.

    Work in quarter-cell units u = h/4, where cell m spans [4m, 4m+4] along
    each axis; every center coordinate is then an integer (cell centers sit
    at 4m+2, the twice-refined grid points at 0..2^(L+2)). The farthest
    corner of a cell from a center is max(c - 4m, 4m+4 - c) >= 2 per axis,
    an integer, so squared far distances are exact integers and windows
    (cells entirely inside the closed ball) change only at their square
    roots. Radii in length units are sqrt(r2) * h/4.

    grid=False: centers at the 4^L cell centers, row-major (the centered
    operator's centers). grid=True: centers at the (2^(L+2)+1)^n refined
    grid points, row-major (the uncentered operator's centers).

    Returns a list of (coords, r2s, masks) per center: integer coordinates
    in u, ascending distinct squared far distances, cumulative bitmasks.
    """
    side = 1 << L
    if grid:
        coords1 = list(range(4 * side + 1))
    else:
        coords1 = [4 * m + 2 for m in range(side)]
    far1 = {c: [max(c - 4 * m, 4 * m + 4 - c) for m in range(side)] for c in coords1}
    out = []
    if n == 1:
        for c in coords1:
            f = far1[c]
            r2s, masks = _group_prefix([v * v for v in f])
            out.append(((c,), r2s, masks))
        return out
    for cx in coords1:
        fx2 = [v * v for v in far1[cx]]
        for cy in coords1:
            fy2 = [v * v for v in far1[cy]]
            d2 = [a + b for a in fx2 for b in fy2]
            r2s, masks = _group_prefix(d2)
            out.append(((cx, cy), r2s, masks))
    return out


class _LevelMasks:
    """Distinct positive thresholds of f with their level-set bitmasks."""

    def __init__(self, f: StepFunction):
        self.n = f.n
        self.L = f.L
        self.ts = [float(t) for t in f.distinct_positive_values()]
        dense = f.dense()
        # thresholds ascend, level sets shrink: walk cells by value once
        order = sorted(range(len(dense)), key=lambda i: -dense[i])
        masks_rev = []
        bits = 0
        ptr = 0
        for t in reversed(self.ts):
            while ptr < len(order) and dense[order[ptr]] >= t:
                bits |= 1 << order[ptr]
                ptr += 1
            masks_rev.append(bits)
        self.masks = masks_rev[::-1]

    def window_integral(self, window_bits: int, evaluator, layer_cap: float = math.inf) -> Interval:
        """Choquet integral of f restricted to the window, as an Interval.

        layer_cap is an external certified upper bound on each layer's
        content (the containing ball's own cover cost omega r^beta); it
        tightens hi endpoints that the generic bounds leave loose.
        """
        acc_lo = 0.0
        acc_hi = 0.0
        prev = 0.0
        n, L = self.n, self.L
        for t, mask in zip(self.ts, self.masks):
            m = mask & window_bits
            if m:
                v = evaluator.bounds_of_bits(n, L, m)
                acc_lo += (t - prev) * min(v.lo, layer_cap)
                acc_hi += (t - prev) * min(v.hi, layer_cap)
            prev = t
        return Interval(acc_lo, acc_hi)


def ball_maximal(f: StepFunction, beta, mode: str = "centered", tight: bool = False) -> MaximalResult:
    """Content-normalized ball maximal function, interval-valued.

    Centered takes balls at the cell's center; uncentered sups over balls
    containing it whose centers lie on the grid refined two levels further.
    Exact on the line (degenerate intervals); two-sided in the plane, where
    tight=True trades speed for the enumerated cover bounds.
    """
    beta = float(beta)
    if not (0 < beta <= f.n):
        raise DomainError(f"beta must lie in (0, n], got {beta}")
    if mode not in ("centered", "uncentered"):
        raise DomainError(f"unknown mode {mode!r}")
    om = omega(beta)
    h = pow(2.0, -f.L)
    if f.n == 1:
        kern = (
            _kernels.ball_maximal_1d if mode == "centered" else _kernels.ball_maximal_1d_uncentered
        )
        vals = kern(f.dense(), beta, h, om)
        note = (
            "critical radii (m - 1/2)h from cell centers"
            if mode == "centered"
            else "centers on the L+2 grid, radii in steps of h/4"
        )
        return MaximalResult(
            operator=mode,
            n=1,
            L=f.L,
            params={"beta": beta},
            values=[Interval.point(float(v)) for v in vals],
            radii_note=note,
        )
    return _ball_maximal_2d(f, beta, mode, om, tight)


def _ball_maximal_2d(
    f: StepFunction, beta: float, mode: str, om: float, tight: bool = False
) -> MaximalResult:
    levels = _LevelMasks(f)
    evaluator = BallContentEvaluator(beta, tight=tight)
    L = f.L
    u = pow(2.0, -L) / 4.0  # quarter-cell unit in length
    values: list[Interval] = []

    # numerators dedup across centers: the same window recurs at the same
    # jump radius (the cap enters the integral, so the key carries r2)
    memo: dict[tuple[int, int], Interval] = {}

    def window_num(bits: int, r2: int, cap: float) -> Interval:
        key = (bits, r2)
        v = memo.get(key)
        if v is None:
            v = levels.window_integral(bits, evaluator, layer_cap=cap)
            memo[key] = v
        return v

    if mode == "centered":
        for _, r2s, masks in _window_tables(2, L, False):
            best_lo = 0.0
            best_hi = 0.0
            for r2, bits in zip(r2s, masks):
                cap = om * pow(math.sqrt(r2) * u, beta)
                num = window_num(bits, r2, cap)
                best_lo = max(best_lo, num.lo / cap)
                best_hi = max(best_hi, num.hi / cap)
            values.append(Interval(best_lo, best_hi))
        return MaximalResult(
            operator="centered",
            n=f.n,
            L=f.L,
            params={"beta": beta},
            values=values,
            radii_note="radii where the ball swallows a cell, from cell centers",
        )
    # uncentered: per ball center, window values and suffix maxima over radii
    per_center = []
    for coords, r2s, masks in _window_tables(2, L, True):
        caps = [om * pow(math.sqrt(r2) * u, beta) for r2 in r2s]
        nums = [window_num(b, r2, c) for b, r2, c in zip(masks, r2s, caps)]
        vals_lo = [nm.lo / cap for nm, cap in zip(nums, caps)]
        vals_hi = [nm.hi / cap for nm, cap in zip(nums, caps)]
        for i in range(len(vals_lo) - 2, -1, -1):
            vals_lo[i] = max(vals_lo[i], vals_lo[i + 1])
            vals_hi[i] = max(vals_hi[i], vals_hi[i + 1])
        per_center.append((coords, r2s, nums, vals_lo, vals_hi))

    side = 1 << L
    for kx in range(side):
        for ky in range(side):
            x = (4 * kx + 2, 4 * ky + 2)  # cell center in quarter-cell units
            best_lo = 0.0
            best_hi = 0.0
            for (cx, cy), r2s, nums, s_lo, s_hi in per_center:
                d2 = (cx - x[0]) ** 2 + (cy - x[1]) ** 2
                # balls containing x have radius >= |c - x|: the windows at
                # later jump radii, plus the window in force at exactly |c - x|
                m0 = bisect.bisect_left(r2s, d2)
                if m0 < len(r2s):
                    if s_lo[m0] > best_lo:
                        best_lo = s_lo[m0]
                    if s_hi[m0] > best_hi:
                        best_hi = s_hi[m0]
                if d2 > 0:
                    mprev = bisect.bisect_right(r2s, d2) - 1
                    if mprev >= 0:
                        denom = om * pow(math.sqrt(d2) * u, beta)
                        best_lo = max(best_lo, nums[mprev].lo / denom)
                        best_hi = max(best_hi, nums[mprev].hi / denom)
            values.append(Interval(best_lo, best_hi))
    return MaximalResult(
        operator="uncentered",
        n=f.n,
        L=f.L,
        params={"beta": beta},
        values=values,
        radii_note="centers on the L+2 grid; per center critical radii and the through-x radius",
    )


def riesz_maximal(f: StepFunction, alpha, s, capacity_evaluator) -> MaximalResult:
    """Capacity-normalized centered maximal function, approximate.

    capacity_evaluator is a CapacityContext from the riesz module; values
    inherit its solver tolerance (recorded in params, not enclosed).
    """
    alpha = float(alpha)
    s = float(s)
    n = f.n
    if not (0 < alpha < n):
        raise DomainError(f"alpha must lie in (0, n), got {alpha}")
    if not (1 < s < n / alpha):
        raise DomainError(f"s must lie in (1, n/alpha), got {s}")
    ctx = capacity_evaluator
    if getattr(ctx, "n", None) != n or getattr(ctx, "L", None) != f.L:
        raise DomainError("capacity evaluator grid differs from the function's")
    delta = n - alpha * s
    c_unit = ctx.unit_ball_capacity()
    levels = _LevelMasks(f)
    u = pow(2.0, -f.L) / 4.0
    values = []
    memo: dict[int, float] = {}
    for _, r2s, masks in _window_tables(n, f.L, False):
        best = 0.0
        for r2, bits in zip(r2s, masks):
            num = memo.get(bits)
            if num is None:
                num = levels_window_capacity(levels, bits, ctx)
                memo[bits] = num
            denom = c_unit * pow(math.sqrt(r2) * u, delta)
            best = max(best, num / denom)
        values.append(best)
    return MaximalResult(
        operator="riesz",
        n=n,
        L=f.L,
        params={"alpha": alpha, "s": s, "c_unit": c_unit, "tol": ctx.tol},
        values=[float(v) for v in values],
        radii_note="critical radii: distinct cell distances from cell centers",
    )


def levels_window_capacity(levels: _LevelMasks, window_bits: int, ctx) -> float:
    """Layer-cake integral of f restricted to a window against the capacity."""
    acc = 0.0
    prev = 0.0
    for t, mask in zip(levels.ts, levels.masks):
        m = mask & window_bits
        if m:
            acc += (t - prev) * ctx.capacity_of_bits(m)
        prev = t
    return acc
