"""Dyadic cubes, grid sets, step functions, balls, and instance generators.

The universe is the unit cube Q0 = [0,1]^n for n in {1, 2}. Sets are finite
unions of level-L cells (L <= 8), functions are non-negative constants per
cell. Cube geometry is exact (fractions.Fraction); cell values are doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError

MAX_RESOLUTION = 8
_MAX_LEVEL = 30  # guard for children(); far beyond any usable resolution

VALUE_LAWS = ("uniform", "levels", "sparse")
_LEVEL_VALUES = np.array([0.0, 1.0, 2.0, 4.0, 8.0])
_SPARSE_FILL = 0.25


# ---------------------------------------------------------------------------
# dyadic cubes


@dataclass(frozen=True)
class DyadicCube:
    """Cube [k_i 2^-j, (k_i+1) 2^-j]^n, level j >= 0, 0 <= k_i < 2^j."""

    level: int
    index: tuple[int, ...]
    n: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {self.n}")
        if not (0 <= self.level <= _MAX_LEVEL):
            raise DomainError(f"level out of range: {self.level}")
        idx = tuple(int(k) for k in self.index)
        object.__setattr__(self, "index", idx)
        if len(idx) != self.n:
            raise DomainError(f"index arity {len(idx)} != dimension {self.n}")
        top = 1 << self.level
        for k in idx:
            if not (0 <= k < top):
                raise DomainError(f"index {idx} out of range at level {self.level}")

    @property
    def side(self) -> Fraction:
        return Fraction(1, 1 << self.level)

    def bounds(self) -> tuple[tuple[Fraction, Fraction], ...]:
        s = self.side
        return tuple((k * s, (k + 1) * s) for k in self.index)

    def center(self) -> tuple[Fraction, ...]:
        s = self.side
        return tuple((2 * k + 1) * s / 2 for k in self.index)

    def children(self) -> list["DyadicCube"]:
        """The 2^n cubes of the next level tiling this one, in z-order."""
        if self.level >= _MAX_LEVEL:
            raise DomainError("maximum refinement depth reached")
        j = self.level + 1
        if self.n == 1:
            (k,) = self.index
            return [DyadicCube(j, (2 * k,), 1), DyadicCube(j, (2 * k + 1,), 1)]
        kx, ky = self.index
        return [
            DyadicCube(j, (2 * kx, 2 * ky), 2),
            DyadicCube(j, (2 * kx, 2 * ky + 1), 2),
            DyadicCube(j, (2 * kx + 1, 2 * ky), 2),
            DyadicCube(j, (2 * kx + 1, 2 * ky + 1), 2),
        ]

    def parent(self) -> "DyadicCube | None":
        if self.level == 0:
            return None
        return DyadicCube(self.level - 1, tuple(k // 2 for k in self.index), self.n)

    def contains(self, other: "DyadicCube") -> bool:
        if other.n != self.n or other.level < self.level:
            return False
        shift = other.level - self.level
        return all(ko >> shift == ks for ko, ks in zip(other.index, self.index))

    def zindex(self) -> int:
        """Morton index of this cube among its level's cubes."""
        if self.n == 1:
            return self.index[0]
        return _interleave(self.index[0], self.index[1])

    def cell_span(self, L: int) -> tuple[int, int]:
        """Half-open z-order range of the level-L cells inside this cube."""
        if L < self.level:
            raise DomainError("resolution coarser than the cube level")
        width = 1 << (self.n * (L - self.level))
        z0 = self.zindex() * width
        return z0, z0 + width


def root(n: int) -> DyadicCube:
    return DyadicCube(0, (0,) * n, n)


def _interleave(kx: int, ky: int) -> int:
    """Morton code with x in the odd (higher) bit positions."""
    z = 0
    b = 0
    while kx or ky:
        z |= (ky & 1) << (2 * b)
        z |= (kx & 1) << (2 * b + 1)
        kx >>= 1
        ky >>= 1
        b += 1
    return z


_PERM_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def zorder_perms(n: int, L: int) -> tuple[np.ndarray, np.ndarray]:
    """(row_of_z, z_of_row): dense_z = dense_row[row_of_z]; inverses of each other."""
    key = (n, L)
    if key not in _PERM_CACHE:
        size = 1 << (n * L)
        if n == 1:
            row_of_z = np.arange(size, dtype=np.int64)
            z_of_row = row_of_z
        else:
            side = 1 << L
            z_of_row = np.empty(size, dtype=np.int64)
            for kx in range(side):
                for ky in range(side):
                    z_of_row[kx * side + ky] = _interleave(kx, ky)
            row_of_z = np.empty(size, dtype=np.int64)
            row_of_z[z_of_row] = np.arange(size, dtype=np.int64)
        _PERM_CACHE[key] = (row_of_z, z_of_row)
    return _PERM_CACHE[key]


# ---------------------------------------------------------------------------
# grid sets


def _flat(n: int, L: int, idx: tuple[int, ...]) -> int:
    if n == 1:
        return idx[0]
    return idx[0] * (1 << L) + idx[1]


def _unflat(n: int, L: int, flat: int) -> tuple[int, ...]:
    if n == 1:
        return (flat,)
    side = 1 << L
    return (flat // side, flat % side)


@dataclass(frozen=True)
class GridSet:
    """Union of level-L cells; membership bit per cell, row-major bit order."""

    n: int
    L: int
    bits: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {self.n}")
        if not (0 <= self.L <= MAX_RESOLUTION):
            raise DomainError(f"resolution out of range: {self.L}")
        if not (0 <= self.bits < (1 << self.size)):
            raise DomainError("membership bits out of range for the resolution")

    @property
    def size(self) -> int:
        return 1 << (self.n * self.L)

    @property
    def count(self) -> int:
        return self.bits.bit_count()

    def is_empty(self) -> bool:
        return self.bits == 0

    @staticmethod
    def empty(n: int, L: int) -> "GridSet":
        return GridSet(n, L, 0)

    @staticmethod
    def full(n: int, L: int) -> "GridSet":
        return GridSet(n, L, (1 << (1 << (n * L))) - 1)

    @staticmethod
    def from_cells(n: int, L: int, cells) -> "GridSet":
        bits = 0
        top = 1 << L
        for c in cells:
            idx = tuple(int(k) for k in (c if isinstance(c, (tuple, list)) else (c,)))
            if len(idx) != n or any(not 0 <= k < top for k in idx):
                raise DomainError(f"cell {idx} invalid for n={n}, L={L}")
            bits |= 1 << _flat(n, L, idx)
        return GridSet(n, L, bits)

    @staticmethod
    def from_dense(n: int, L: int, dense) -> "GridSet":
        arr = np.asarray(dense).ravel()
        if arr.size != 1 << (n * L):
            raise DomainError("dense mask has wrong size")
        bits = 0
        for i in np.flatnonzero(arr):
            bits |= 1 << int(i)
        return GridSet(n, L, bits)

    def cells(self) -> list[tuple[int, ...]]:
        return [_unflat(self.n, self.L, f) for f in self.flats()]

    def flats(self) -> list[int]:
        out = []
        b = self.bits
        while b:
            low = b & -b
            out.append(low.bit_length() - 1)
            b ^= low
        return out

    def dense(self, order: str = "row") -> np.ndarray:
        """0/1 float64 membership vector, row-major or z-order."""
        arr = np.zeros(self.size, dtype=np.float64)
        fl = self.flats()
        if fl:
            arr[fl] = 1.0
        if order == "row":
            return arr
        if order == "z":
            row_of_z, _ = zorder_perms(self.n, self.L)
            return arr[row_of_z]
        raise DomainError(f"unknown order {order!r}")

    def _check(self, other: "GridSet"):
        if self.n != other.n or self.L != other.L:
            raise DomainError("grid sets live on different grids")

    def union(self, other: "GridSet") -> "GridSet":
        self._check(other)
        return GridSet(self.n, self.L, self.bits | other.bits)

    def intersection(self, other: "GridSet") -> "GridSet":
        self._check(other)
        return GridSet(self.n, self.L, self.bits & other.bits)

    def difference(self, other: "GridSet") -> "GridSet":
        self._check(other)
        return GridSet(self.n, self.L, self.bits & ~other.bits)

    def issubset(self, other: "GridSet") -> bool:
        self._check(other)
        return self.bits & ~other.bits == 0

    def complement(self) -> "GridSet":
        return GridSet(self.n, self.L, ~self.bits & ((1 << self.size) - 1))

    def within(self, q: DyadicCube) -> bool:
        """True iff every member cell lies inside the cube q."""
        if q.n != self.n:
            return False
        if q.level > self.L:
            return self.is_empty()
        z0, z1 = q.cell_span(self.L)
        _, z_of_row = zorder_perms(self.n, self.L)
        return all(z0 <= z_of_row[f] < z1 for f in self.flats())

    def indicator(self) -> "StepFunction":
        return StepFunction(self.n, self.L, self.dense())


# ---------------------------------------------------------------------------
# step functions


class StepFunction:
    """Non-negative per-cell values on the level-L grid, zero outside Q0."""

    __slots__ = ("n", "L", "values")

    def __init__(self, n: int, L: int, values):
        if n not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {n}")
        if not (0 <= L <= MAX_RESOLUTION):
            raise DomainError(f"resolution out of range: {L}")
        vals = np.asarray(values, dtype=np.float64).ravel().copy()
        if vals.size != 1 << (n * L):
            raise DomainError(f"expected {1 << (n * L)} cell values, got {vals.size}")
        if not np.all(np.isfinite(vals)):
            raise DomainError("cell values must be finite")
        if np.any(vals < 0):
            raise DomainError("cell values must be non-negative")
        vals.setflags(write=False)
        self.n = n
        self.L = L
        self.values = vals

    def __eq__(self, other):
        return (
            isinstance(other, StepFunction)
            and self.n == other.n
            and self.L == other.L
            and np.array_equal(self.values, other.values)
        )

    def __repr__(self):
        return f"StepFunction(n={self.n}, L={self.L}, max={self.values.max():.6g})"

    @property
    def size(self) -> int:
        return self.values.size

    def value_at(self, idx) -> float:
        idx = tuple(int(k) for k in (idx if isinstance(idx, (tuple, list)) else (idx,)))
        return float(self.values[_flat(self.n, self.L, idx)])

    def dense(self, order: str = "row") -> np.ndarray:
        if order == "row":
            return self.values
        if order == "z":
            row_of_z, _ = zorder_perms(self.n, self.L)
            return self.values[row_of_z]
        raise DomainError(f"unknown order {order!r}")

    def support(self) -> GridSet:
        return GridSet.from_dense(self.n, self.L, self.values > 0)

    def distinct_positive_values(self) -> np.ndarray:
        """Sorted ascending distinct values > 0."""
        u = np.unique(self.values)
        return u[u > 0]

    def level_set(self, t: float, strict: bool = False) -> GridSet:
        """{f >= t}, or {f > t} when strict."""
        mask = self.values > t if strict else self.values >= t
        return GridSet.from_dense(self.n, self.L, mask)

    def restrict(self, E: GridSet) -> "StepFunction":
        if E.n != self.n or E.L != self.L:
            raise DomainError("restriction set lives on a different grid")
        return StepFunction(self.n, self.L, self.values * E.dense())

    def scale(self, c: float) -> "StepFunction":
        if c < 0:
            raise DomainError("scale factor must be non-negative")
        return StepFunction(self.n, self.L, self.values * float(c))

    def power(self, p: float) -> "StepFunction":
        return StepFunction(self.n, self.L, self.values**float(p))

    def add(self, other: "StepFunction") -> "StepFunction":
        if other.n != self.n or other.L != self.L:
            raise DomainError("operands live on different grids")
        return StepFunction(self.n, self.L, self.values + other.values)

    def max_value(self) -> float:
        return float(self.values.max())

    @staticmethod
    def zero(n: int, L: int) -> "StepFunction":
        return StepFunction(n, L, np.zeros(1 << (n * L)))

    @staticmethod
    def from_midpoint_samples(n: int, L: int, fn) -> "StepFunction":
        """Sample fn at cell midpoints (floats); fn maps a point tuple to a value."""
        side = 1 << L
        h = 1.0 / side
        if n == 1:
            vals = [fn(((k + 0.5) * h,)) for k in range(side)]
        else:
            vals = [
                fn(((kx + 0.5) * h, (ky + 0.5) * h))
                for kx in range(side)
                for ky in range(side)
            ]
        return StepFunction(n, L, np.array(vals, dtype=np.float64))


# ---------------------------------------------------------------------------
# balls and discretization


@dataclass(frozen=True)
class Ball:
    """Closed ball B(center, r), r > 0; center coordinates are exact rationals."""

    center: tuple[Fraction, ...]
    radius: Fraction

    def __post_init__(self):
        c = tuple(Fraction(x) for x in self.center)
        object.__setattr__(self, "center", c)
        r = Fraction(self.radius)
        object.__setattr__(self, "radius", r)
        if len(c) not in (1, 2):
            raise DomainError("ball center must be 1- or 2-dimensional")
        if r <= 0:
            raise DomainError("ball radius must be positive")

    @property
    def n(self) -> int:
        return len(self.center)


def _cell_dist2(center: tuple[Fraction, ...], n: int, L: int, idx: tuple[int, ...]) -> Fraction:
    """Exact squared distance from a point to the closed cell."""
    s = Fraction(1, 1 << L)
    d2 = Fraction(0)
    for c, k in zip(center, idx):
        lo = k * s
        hi = (k + 1) * s
        if c < lo:
            d = lo - c
        elif c > hi:
            d = c - hi
        else:
            continue
        d2 += d * d
    return d2


def cell_distances_sq(center: tuple[Fraction, ...], n: int, L: int) -> list[Fraction]:
    """Exact squared point-to-cell distances for every level-L cell (row-major)."""
    center = tuple(Fraction(x) for x in center)
    side = 1 << L
    if n == 1:
        return [_cell_dist2(center, n, L, (k,)) for k in range(side)]
    return [
        _cell_dist2(center, n, L, (kx, ky)) for kx in range(side) for ky in range(side)
    ]


def cells_in_ball(b: Ball, L: int) -> GridSet:
    """Level-L cells whose closure meets the closed ball (inclusive convention)."""
    n = b.n
    r2 = b.radius * b.radius
    bits = 0
    for flat, d2 in enumerate(cell_distances_sq(b.center, n, L)):
        if d2 <= r2:
            bits |= 1 << flat
    return GridSet(n, L, bits)


def _cell_far_dist2(center: tuple[Fraction, ...], n: int, L: int, idx: tuple[int, ...]) -> Fraction:
    """Exact squared distance from a point to the farthest corner of a cell."""
    s = Fraction(1, 1 << L)
    d2 = Fraction(0)
    for c, k in zip(center, idx):
        d = max(abs(c - k * s), abs(c - (k + 1) * s))
        d2 += d * d
    return d2


def cell_far_distances_sq(center: tuple[Fraction, ...], n: int, L: int) -> list[Fraction]:
    """Exact squared farthest-corner distances for every level-L cell
    (row-major); a cell lies inside the closed ball B(center, r) exactly
    when its value here is <= r**2."""
    center = tuple(Fraction(x) for x in center)
    side = 1 << L
    if n == 1:
        return [_cell_far_dist2(center, n, L, (k,)) for k in range(side)]
    return [
        _cell_far_dist2(center, n, L, (kx, ky)) for kx in range(side) for ky in range(side)
    ]


def cells_inside_ball(b: Ball, L: int) -> GridSet:
    """Level-L cells entirely contained in the closed ball."""
    n = b.n
    r2 = b.radius * b.radius
    bits = 0
    for flat, d2 in enumerate(cell_far_distances_sq(b.center, n, L)):
        if d2 <= r2:
            bits |= 1 << flat
    return GridSet(n, L, bits)


# ---------------------------------------------------------------------------
# deterministic instance generation


def _rng_for(seed) -> np.random.Generator:
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, tuple):
        ss = np.random.SeedSequence(seed)
    else:
        ss = np.random.SeedSequence(int(seed))
    return np.random.default_rng(ss)


def random_step_function(seed, L: int, n: int, value_law: str = "uniform") -> StepFunction:
    """Deterministic per-seed random function; laws: uniform, levels, sparse."""
    if value_law not in VALUE_LAWS:
        raise DomainError(f"unknown value law {value_law!r}; pick from {VALUE_LAWS}")
    rng = _rng_for(seed)
    size = 1 << (n * L)
    if value_law == "uniform":
        vals = rng.uniform(0.0, 1.0, size)
    elif value_law == "levels":
        vals = rng.choice(_LEVEL_VALUES, size)
    else:
        vals = (rng.uniform(0.0, 1.0, size) < _SPARSE_FILL).astype(np.float64)
    return StepFunction(n, L, vals)


def random_grid_set(seed, L: int, n: int, density: float = 0.35) -> GridSet:
    """Deterministic random cell set; each cell kept with the given density."""
    if not (0 <= density <= 1):
        raise DomainError("density must lie in [0, 1]")
    rng = _rng_for(seed)
    size = 1 << (n * L)
    return GridSet.from_dense(n, L, rng.uniform(0.0, 1.0, size) < density)
