"""Hausdorff content: exact dyadic values, certified ball-content bounds.

The exact object is the dyadic content H^{beta,Q0} (tree DP). The ball-based
content is represented by certified intervals: a geometric lower bound
(every ball of radius r is covered by at most 2^n dyadic cubes of side <= 4r)
and upper bounds from explicit ball covers (every cube of side l fits in a
ball of radius (sqrt(n)/2) l; enumerated covers tighten this). On the line
the ball-cover infimum is computed exactly, which collapses the interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import DomainError
from .lattice import DyadicCube, GridSet, root, zorder_perms


def omega(beta: float, precision: float = 1e-12) -> float:
    """Normalization pi^(b/2) / Gamma(b/2 + 1); IEEE double evaluation is
    accurate to ~1e-15 relative, well under the required precision."""
    if beta <= 0:
        raise DomainError(f"omega requires beta > 0, got {beta}")
    if not (0 < precision):
        raise DomainError("precision must be positive")
    return math.pi ** (beta / 2.0) / math.gamma(beta / 2.0 + 1.0)


@dataclass(frozen=True)
class ContentParams:
    beta: float
    n: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {self.n}")
        if not (0 < self.beta <= self.n):
            raise DomainError(f"beta must lie in (0, n], got {self.beta}")

    @property
    def omega_beta(self) -> float:
        return omega(self.beta)


@dataclass(frozen=True)
class Interval:
    """Certified enclosure [lo, hi] of a non-negative quantity."""

    lo: float
    hi: float

    def __post_init__(self):
        lo = float(self.lo)
        hi = float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError("interval endpoints must be finite")
        if lo < 0 or lo > hi:
            raise DomainError(f"invalid interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @staticmethod
    def point(v: float) -> "Interval":
        return Interval(v, v)

    def __add__(self, other: "Interval") -> "Interval":
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def scale(self, c: float) -> "Interval":
        if c < 0:
            raise DomainError("interval scale factor must be non-negative")
        return Interval(self.lo * c, self.hi * c)

    def power(self, p: float) -> "Interval":
        """x -> x^p for p > 0, monotone on [0, inf)."""
        if p <= 0:
            raise DomainError("power must be positive")
        return Interval(self.lo**p, self.hi**p)

    def join_max(self, other: "Interval") -> "Interval":
        """Enclosure of max(a, b) for a in self, b in other."""
        return Interval(max(self.lo, other.lo), max(self.hi, other.hi))

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def is_point(self) -> bool:
        return self.lo == self.hi


def level_side_powers(beta: float, level_from: int, level_to: int) -> np.ndarray:
    """(2^-j)^beta for j = level_from .. level_to, the DP level costs."""
    return np.array(
        [pow(2.0, -j * beta) for j in range(level_from, level_to + 1)], dtype=np.float64
    )


def dyadic_content(E: GridSet, beta: float, Q0: DyadicCube | None = None) -> float:
    """Exact dyadic Hausdorff content of E relative to the lattice of Q0.

    DP recursion: a cube meeting E costs min(l(Q)^beta, sum of children);
    ties go to the coarser cube. A set inside a subcube has the same content
    in the subtree as in the full lattice, so the DP runs on Q0's slice.
    """
    params = ContentParams(beta, E.n)
    if Q0 is None:
        Q0 = root(E.n)
    if Q0.n != E.n:
        raise DomainError("Q0 dimension differs from the set's")
    if Q0.level > E.L:
        raise DomainError("Q0 is finer than the set's resolution")
    if not E.within(Q0):
        raise DomainError("set has cells outside Q0")
    if E.is_empty():
        return 0.0
    z0, z1 = Q0.cell_span(E.L)
    occ = E.dense(order="z")[z0:z1].reshape(1, -1)
    lpow = level_side_powers(params.beta, Q0.level, E.L)
    return float(_kernels.content_batch(occ, lpow, 1 << E.n)[0])


def dyadic_content_batch(dense_z: np.ndarray, beta: float, n: int, L: int) -> np.ndarray:
    """Batch DP over z-order occupancy rows (full root lattice)."""
    ContentParams(beta, n)
    lpow = level_side_powers(beta, 0, L)
    return _kernels.content_batch(np.asarray(dense_z, dtype=np.float64), lpow, 1 << n)


# ---------------------------------------------------------------------------
# exact ball content on the line


def ball_content_exact_1d(E: GridSet, beta: float) -> float:
    """Exact ball-cover infimum H^beta_inf on the line (balls are intervals;
    optimal covers group consecutive occupied runs)."""
    if E.n != 1:
        raise DomainError("exact ball content is available only for n = 1")
    ContentParams(beta, 1)
    if E.is_empty():
        return 0.0
    h = pow(2.0, -E.L)
    return float(_kernels.ball_content_1d(E.dense(), beta, h, omega(beta)))


# ---------------------------------------------------------------------------
# enumerated ball covers (upper bounds)


def _corner_points(n: int, L: int, flat_cells: list[int]) -> list[tuple[Fraction, ...]]:
    side = 1 << L
    s = Fraction(1, side)
    pts = set()
    if n == 1:
        for f in flat_cells:
            pts.add((f * s,))
            pts.add(((f + 1) * s,))
            pts.add((Fraction(2 * f + 1, 2 * side),))
    else:
        for f in flat_cells:
            kx, ky = f // side, f % side
            for dx in (0, 1):
                for dy in (0, 1):
                    pts.add(((kx + dx) * s, (ky + dy) * s))
            pts.add((Fraction(2 * kx + 1, 2 * side), Fraction(2 * ky + 1, 2 * side)))
    return sorted(pts)


def _covered_mask(
    center: tuple[Fraction, ...], r2: Fraction, n: int, L: int, flat_cells: list[int]
) -> int:
    """Bitmask (over the listed cells) of cells entirely inside the ball."""
    side = 1 << L
    s = Fraction(1, side)
    mask = 0
    for pos, f in enumerate(flat_cells):
        idx = (f,) if n == 1 else (f // side, f % side)
        far2 = Fraction(0)
        for c, k in zip(center, idx):
            lo, hi = k * s, (k + 1) * s
            far = max(abs(c - lo), abs(c - hi))
            far2 += far * far
        if far2 <= r2:
            mask |= 1 << pos
    return mask


def _bbox(n: int, L: int, flat_cells: list[int]):
    """Bounding box of the cells, as inclusive index ranges per axis."""
    side = 1 << L
    if n == 1:
        ks = flat_cells
        return [(min(ks), max(ks))]
    xs = [f // side for f in flat_cells]
    ys = [f % side for f in flat_cells]
    return [(min(xs), max(xs)), (min(ys), max(ys))]


def _bbox_ball(n: int, L: int, flat_cells: list[int]):
    """(center, radius squared) of the bounding box's circumball, exact."""
    s = Fraction(1, 1 << L)
    box = _bbox(n, L, flat_cells)
    center = tuple(Fraction(a + b + 1, 2) * s for a, b in box)
    r2 = sum(((Fraction(b + 1 - a) * s) / 2) ** 2 for a, b in box)
    return center, r2


def enumerated_cover_value(E: GridSet, beta: float, max_balls: int = 6):
    """Cheapest found cover of E by at most max_balls candidate balls.

    Candidates: centers at occupied-cell centers and corners, radii
    2^-j sqrt(n)/2 (j <= L) plus half-diameters of occupied-cell pairs;
    greedy weighted set cover plus exhaustive search over tiny instances.
    The candidate set is thinned for larger sets (pair radii dropped past
    6 cells, everything but the circumball past 16) so enumeration stays
    bounded; the bounding-box circumball always covers, so a cover is
    always returned. Returns (value, list of (center, radius^2, cost)).
    """
    n, L = E.n, E.L
    flat_cells = E.flats()
    m = len(flat_cells)
    if m == 0:
        return 0.0, []
    om = omega(beta)
    side = 1 << L
    s = Fraction(1, side)
    bb_center, bb_r2 = _bbox_ball(n, L, flat_cells)
    bb_cost = om * pow(math.sqrt(float(bb_r2)), beta)
    if m > 16:
        return bb_cost, [(bb_center, bb_r2, bb_cost)]

    # candidate radii squared (exact), deduplicated
    radii2 = {bb_r2}
    for j in range(L + 1):
        r = Fraction(1, 1 << j) * Fraction(1, 2)
        radii2.add(n * r * r)  # (2^-j sqrt(n)/2)^2
    if m <= 6:
        # half-diameters of occupied cell pairs (hull corner-to-corner / 2)
        cell_corner_sets = []
        for f in flat_cells:
            idx = (f,) if n == 1 else (f // side, f % side)
            cs = []
            for off in range(1 << n):
                pt = tuple((k + ((off >> a) & 1)) * s for a, k in enumerate(idx))
                cs.append(pt)
            cell_corner_sets.append(cs)
        for i in range(m):
            for j in range(i, m):
                best2 = Fraction(0)
                for p in cell_corner_sets[i]:
                    for q in cell_corner_sets[j]:
                        d2 = sum((a - b) ** 2 for a, b in zip(p, q))
                        if d2 > best2:
                            best2 = d2
                radii2.add(best2 / 4)
    radii2.discard(Fraction(0))
    centers = _corner_points(n, L, flat_cells)
    centers.append(bb_center)

    # candidate balls with their covered masks and costs
    full = (1 << m) - 1
    cand = {}
    for c in centers:
        for r2 in radii2:
            mask = _covered_mask(c, r2, n, L, flat_cells)
            if mask == 0:
                continue
            cost = om * pow(math.sqrt(float(r2)), beta)
            if mask not in cand or cost < cand[mask][0]:
                cand[mask] = (cost, c, r2)
    items = sorted(
        ((mask, cv[0], cv[1], cv[2]) for mask, cv in cand.items()),
        key=lambda it: (it[1], -it[0]),
    )

    # greedy weighted cover
    def greedy():
        left = full
        total = 0.0
        picked = []
        for _ in range(max_balls):
            best = None
            for mask, cost, c, r2 in items:
                gain = (mask & left).bit_count()
                if gain == 0:
                    continue
                score = cost / gain
                if best is None or score < best[0]:
                    best = (score, mask, cost, c, r2)
            if best is None:
                return None
            _, mask, cost, c, r2 = best
            total += cost
            picked.append((c, r2, cost))
            left &= ~mask
            if left == 0:
                return total, picked
        return None

    best = greedy()
    if best is None or bb_cost < best[0]:
        best = (bb_cost, [(bb_center, bb_r2, bb_cost)])

    # exhaustive over the candidates when the instance is tiny
    if len(items) <= 24 and m <= 6:
        import itertools

        for k in range(1, min(max_balls, len(items)) + 1):
            for combo in itertools.combinations(items, k):
                cov = 0
                tot = 0.0
                for mask, cost, _, _ in combo:
                    cov |= mask
                    tot += cost
                if cov == full and tot < best[0]:
                    best = (tot, [(c, r2, cost) for mask, cost, c, r2 in combo])
    return best


def content_interval(E: GridSet, beta: float) -> Interval:
    """Certified enclosure of the ball-based content H^beta_inf(E).

    lo: omega * dyadic / (2^n 4^beta) - every ball of radius r is covered by
    at most 2^n dyadic cubes of side <= 4r, so the dyadic content can only
    overshoot by that factor. hi: min(enumerated covers, omega (sqrt(n)/2)^beta
    * dyadic) - every cube of side l sits inside a ball of radius sqrt(n) l/2.
    """
    params = ContentParams(beta, E.n)
    if E.is_empty():
        return Interval(0.0, 0.0)
    om = params.omega_beta
    D = dyadic_content(E, beta)
    lo = om * D / ((1 << E.n) * pow(4.0, beta))
    hi = om * pow(math.sqrt(E.n) / 2.0, beta) * D
    enum_value, _ = enumerated_cover_value(E, beta)
    if enum_value < hi:
        hi = enum_value
    if hi < lo:  # covers can only tighten; guard numerics
        hi = lo
    return Interval(lo, hi)


# ---------------------------------------------------------------------------
# internal tighter bounds used by the ball-based operators
#
# Everything here works on raw occupancy bitmasks so the maximal operators,
# which evaluate thousands of window/layer intersections, stay cheap. The
# planar set is row-major: cell (kx, ky) is bit kx*side + ky, so row kx is a
# contiguous bit field and columns are gathered bit by bit.


def _row_bits_2d(bits: int, side: int) -> list[int]:
    full = (1 << side) - 1
    return [(bits >> (kx * side)) & full for kx in range(side)]


def _col_bits_2d(bits: int, side: int) -> list[int]:
    cols = [0] * side
    b = bits
    while b:
        f = (b & -b).bit_length() - 1
        b &= b - 1
        cols[f % side] |= 1 << (f // side)
    return cols


def _run_widths(row: int) -> list[int]:
    """Widths of the maximal runs of set bits."""
    widths = []
    m = row
    while m:
        low = (m & -m).bit_length() - 1
        w = 1
        while (m >> (low + w)) & 1:
            w += 1
        widths.append(w)
        m &= ~(((1 << w) - 1) << low)
    return widths


def _content_1d_bits(row: int, side: int, beta: float, h: float, om: float) -> float:
    """Exact 1-d ball content of a row occupancy bitmask."""
    if row == 0:
        return 0.0
    dense = np.array([(row >> i) & 1 for i in range(side)], dtype=np.float64)
    return float(_kernels.ball_content_1d(dense, beta, h, om))


def ball_content_bounds(E: GridSet, beta: float, tight: bool = True) -> Interval:
    """Two-sided ball-content bounds; exact (degenerate) on the line.

    For n = 2 the lower bound is the best of: the dyadic conversion factor,
    the Lebesgue bound at beta = n (balls have measure omega_2 r^2),
    axis-projection contents for beta <= 1, computed exactly in 1-d
    (projections are 1-Lipschitz, so they cannot increase the content,
    and 1-d contents vanish identically past beta = 1), and for beta > 1 a
    slicing bound: a ball of radius r meets each horizontal line in an
    interval of half-length <= r over a y-range of length 2r, so any cover
    spends at least omega_beta/(2 omega_{beta-1}) * h * sum of exact
    H^{beta-1} row contents. The upper bound is the best of the scaled
    dyadic content, run covers (circumballs of the horizontal or vertical
    cell runs), the bounding-box circumball, and, when tight, enumerated
    multi-ball covers (slower; skipped inside the maximal operators).
    """
    ContentParams(beta, E.n)
    if E.is_empty():
        return Interval(0.0, 0.0)
    if E.n == 1:
        v = ball_content_exact_1d(E, beta)
        return Interval(v, v)
    om = omega(beta)
    L = E.L
    h = pow(2.0, -L)
    side = 1 << L
    bits = E.bits
    rows = _row_bits_2d(bits, side)
    cols = _col_bits_2d(bits, side)

    D = dyadic_content(E, beta)
    lo = om * D / (4.0 * pow(4.0, beta))
    hi = om * pow(math.sqrt(2.0) / 2.0, beta) * D

    # run covers along each axis
    for axis_rows in (rows, cols):
        total = 0.0
        for row in axis_rows:
            for w in _run_widths(row):
                total += om * pow(0.5 * h * math.sqrt(w * w + 1.0), beta)
        hi = min(hi, total)
    # bounding-box circumball
    occ_x = [kx for kx in range(side) if rows[kx]]
    proj_y = 0
    for row in rows:
        proj_y |= row
    occ_y = [ky for ky in range(side) if (proj_y >> ky) & 1]
    dx = occ_x[-1] - occ_x[0] + 1
    dy = occ_y[-1] - occ_y[0] + 1
    hi = min(hi, om * pow(0.5 * h * math.sqrt(dx * dx + dy * dy), beta))
    if tight:
        enum_value, _ = enumerated_cover_value(E, beta)
        hi = min(hi, enum_value)

    if beta == 2.0:
        lo = max(lo, E.count * h * h)
    if beta <= 1.0:
        # for beta > 1 the 1-d ball content vanishes (covers refine away),
        # so the projection bound carries information only up to beta = 1
        proj_x = 0
        for kx in occ_x:
            proj_x |= 1 << kx
        lo = max(lo, _content_1d_bits(proj_x, side, beta, h, om))
        lo = max(lo, _content_1d_bits(proj_y, side, beta, h, om))
    if beta > 1.0:
        om1 = omega(beta - 1.0)
        factor = om / (2.0 * om1)
        for axis_rows in (rows, cols):
            tot = 0.0
            for row in axis_rows:
                tot += _content_1d_bits(row, side, beta - 1.0, h, om1)
            lo = max(lo, factor * h * tot)
    return Interval(lo, max(hi, lo))
