"""Capacitary maximal operators: dyadic, centered/uncentered ball, Riesz."""

import itertools
import math

import numpy as np
import pytest

from capint import DomainError
from capint.choquet import DyadicContentEvaluator, choquet_integral
from capint.content import omega
from capint.lattice import DyadicCube, GridSet, StepFunction, random_step_function
from capint.maximal import ball_maximal, dyadic_maximal, riesz_maximal
from capint.riesz import CapacityContext


# ---------------------------------------------------------------------------
# independent oracles


def dyadic_oracle(f, beta):
    """Exhaustive sup over the <= L+1 dyadic ancestors of each cell."""
    n, L = f.n, f.L
    C = DyadicContentEvaluator(beta)
    out = []
    side = 1 << L
    for flat in range(f.size):
        idx = (flat,) if n == 1 else (flat // side, flat % side)
        best = 0.0
        for lev in range(L + 1):
            q = DyadicCube(n=n, level=lev, index=tuple(k >> (L - lev) for k in idx))
            lo, hi = q.cell_span(L)
            zmask = np.zeros(f.size, dtype=bool)
            zmask[lo:hi] = True
            dense_z = f.dense("z") * zmask
            rest = StepFunction(n, L, np.zeros(f.size))
            # rebuild row-major restriction of f to the cube
            from capint.lattice import zorder_perms

            row_of_z, _ = zorder_perms(n, L)
            vals = np.zeros(f.size)
            vals[row_of_z] = dense_z
            rest = StepFunction(n, L, vals)
            num = choquet_integral(rest, C)
            best = max(best, num / float(q.side) ** beta)
        out.append(best)
    return np.array(out)


def runs_of(cells, L):
    """Consecutive occupied runs as (start, end) cell index pairs, inclusive."""
    runs = []
    cur = None
    for c in range(1 << L):
        if c in cells:
            if cur is None:
                cur = [c, c]
            else:
                cur[1] = c
        elif cur is not None:
            runs.append(tuple(cur))
            cur = None
    if cur is not None:
        runs.append(tuple(cur))
    return runs


def exact_content_1d_oracle(cells, L, beta):
    """Min-cost grouping of consecutive runs into covering intervals.

    Brute force over all 2^(k-1) consecutive groupings of the k runs; each
    group is covered by one ball spanning it.
    """
    if not cells:
        return 0.0
    h = 2.0 ** -L
    runs = runs_of(cells, L)
    k = len(runs)
    om = omega(beta)
    best = math.inf
    for cuts in itertools.product([0, 1], repeat=k - 1):
        cost = 0.0
        start = 0
        for i in range(k):
            if i == k - 1 or cuts[i]:
                a = runs[start][0]
                b = runs[i][1]
                length = (b - a + 1) * h
                cost += om * (length / 2) ** beta
                start = i + 1
        best = min(best, cost)
    return best


def ball_oracle_1d(f, beta, mode="centered"):
    """Brute-force sup over all critical (center, radius) pairs on the line."""
    L = f.L
    side = 1 << L
    h = 2.0 ** -L
    om = omega(beta)
    dense = f.dense()
    ts = sorted(set(float(v) for v in dense if v > 0))
    out = []
    for k in range(side):
        x = 4 * k + 2  # position in h/4 units
        if mode == "centered":
            centers = [x]
        else:
            centers = list(range(0, 4 * side + 1))
        best = 0.0
        for c in centers:
            serve = abs(c - x)
            fars = sorted(
                {max(c - 4 * m, 4 * m + 4 - c) for m in range(side)} | {serve}
            )
            for rq in fars:  # radius in h/4 units
                if rq < serve or rq <= 0:
                    continue
                window = {m for m in range(side) if max(c - 4 * m, 4 * m + 4 - c) <= rq}
                if not window:
                    continue
                r = rq * h / 4
                num = 0.0
                prev = 0.0
                for t in ts:
                    layer = {m for m in window if dense[m] >= t}
                    num += (t - prev) * min(
                        exact_content_1d_oracle(layer, L, beta), om * r ** beta
                    )
                    prev = t
                best = max(best, num / (om * r ** beta))
        out.append(best)
    return np.array(out)


# ---------------------------------------------------------------------------
# dyadic maximal


def test_dyadic_constant_one():
    f = GridSet.full(1, 3).indicator()
    m = dyadic_maximal(f, 0.5)
    assert np.allclose(m.values, 1.0)


def test_dyadic_zero():
    m = dyadic_maximal(StepFunction.zero(2, 2), 1.5)
    assert np.allclose(m.values, 0.0)


def test_dyadic_single_cell_sibling():
    # chi of one level-L cell: 1 on the cell, 2^-beta on its sibling
    beta = 0.7
    L = 3
    f = GridSet.from_cells(1, L, [(4,)]).indicator()
    m = dyadic_maximal(f, beta)
    assert abs(m.values[4] - 1.0) < 1e-12
    assert abs(m.values[5] - 2.0 ** -beta) < 1e-12


def test_dyadic_matches_ancestor_oracle():
    for seed, n, L, beta in [(1, 1, 3, 0.5), (2, 1, 4, 0.8), (3, 2, 2, 1.2)]:
        f = random_step_function(seed, L, n)
        m = dyadic_maximal(f, beta)
        want = dyadic_oracle(f, beta)
        assert np.allclose(m.values, want, atol=1e-12)


def test_dyadic_subroot():
    q = DyadicCube(n=1, level=1, index=(0,))
    f = GridSet.from_cells(1, 3, [(1,)]).indicator()
    m = dyadic_maximal(f, 0.5, Q0=q)
    assert m.values[1] == 1.0
    assert m.values[4] == 0.0  # outside Q0
    with pytest.raises(DomainError):
        dyadic_maximal(GridSet.from_cells(1, 3, [(6,)]).indicator(), 0.5, Q0=q)


def test_dyadic_rejects_bad_beta():
    f = StepFunction.zero(1, 2)
    with pytest.raises(DomainError):
        dyadic_maximal(f, 0.0)
    with pytest.raises(DomainError):
        dyadic_maximal(f, 1.5)


# ---------------------------------------------------------------------------
# ball maximal on the line (exact)


def test_ball_example_quarter_indicator():
    # chi_[0,1/4) at L=2, beta=1: the cell at x=0.125 sees value 1 at r=0.125
    f = GridSet.from_cells(1, 2, [(0,)]).indicator()
    m = ball_maximal(f, 1.0)
    assert m.values[0].is_point()
    assert abs(m.values[0].lo - 1.0) < 1e-12


def test_ball_matches_bruteforce_centered():
    for seed, L, beta in [(5, 2, 1.0), (6, 3, 0.6), (7, 3, 1.0), (8, 2, 0.35)]:
        f = random_step_function(seed, L, 1, ["uniform", "levels"][seed % 2])
        m = ball_maximal(f, beta)
        want = ball_oracle_1d(f, beta)
        assert np.allclose(m.lo(), want, atol=1e-10)
        assert np.allclose(m.hi(), want, atol=1e-10)


def test_ball_matches_bruteforce_uncentered():
    for seed, L, beta in [(9, 2, 1.0), (10, 2, 0.5)]:
        f = random_step_function(seed, L, 1)
        m = ball_maximal(f, beta, mode="uncentered")
        want = ball_oracle_1d(f, beta, mode="uncentered")
        assert np.allclose(m.lo(), want, atol=1e-10)


def test_ball_zero():
    m = ball_maximal(StepFunction.zero(1, 3), 0.5)
    assert np.allclose(m.hi(), 0.0)


def test_uncentered_dominates_centered():
    for seed in range(4):
        f = random_step_function(seed, 3, 1)
        c = ball_maximal(f, 0.8)
        u = ball_maximal(f, 0.8, mode="uncentered")
        assert np.all(u.hi() >= c.hi() - 1e-12)
        assert np.all(u.lo() >= c.lo() - 1e-12)


def test_ball_2d_interval_and_linf():
    f = random_step_function(11, 2, 2)
    m = ball_maximal(f, 1.5)
    assert np.all(m.lo() <= m.hi() + 1e-15)
    assert np.max(m.hi()) <= f.max_value() * (1 + 1e-9)
    mu = ball_maximal(f, 1.5, mode="uncentered")
    assert np.all(mu.hi() >= m.hi() - 1e-12)


def test_ball_2d_tight_never_looser():
    f = random_step_function(12, 2, 2, "levels")
    loose = ball_maximal(f, 1.2, tight=False)
    tight = ball_maximal(f, 1.2, tight=True)
    assert np.all(tight.hi() <= loose.hi() + 1e-12)
    assert np.all(tight.lo() >= loose.lo() - 1e-12)


# ---------------------------------------------------------------------------
# shared operator properties


def _operators(f):
    ops = [
        lambda g: dyadic_maximal(g, 0.6),
        lambda g: ball_maximal(g, 0.6),
        lambda g: ball_maximal(g, 0.6, mode="uncentered"),
    ]
    return ops


def test_linf_contraction_all_operators():
    for seed in range(3):
        f = random_step_function(seed, 3, 1)
        for op in _operators(f):
            m = op(f)
            assert np.max(m.hi()) <= f.max_value() * (1 + 1e-9) + 1e-15


def test_monotone_in_f_all_operators():
    for seed in range(3):
        f = random_step_function(seed, 3, 1)
        g = f.add(random_step_function(seed + 100, 3, 1))
        for op in _operators(f):
            mf, mg = op(f), op(g)
            assert np.all(mf.lo() <= mg.lo() + 1e-12)
            assert np.all(mf.hi() <= mg.hi() + 1e-12)


def test_quasi_sublinear_all_operators():
    # M(f1+f2) <= 2 (M f1 + M f2) per cell; interval-outer for ball operators
    for seed in range(3):
        f1 = random_step_function(seed, 3, 1)
        f2 = random_step_function(seed + 50, 3, 1)
        s = f1.add(f2)
        for op in _operators(f1):
            lhs = op(s)
            r1, r2 = op(f1), op(f2)
            bound = 2.0 * (r1.hi() + r2.hi())
            assert np.all(lhs.lo() <= bound * (1 + 1e-9) + 1e-15)


# ---------------------------------------------------------------------------
# Riesz capacitary maximal


def test_riesz_zero():
    ctx = CapacityContext(0.4, 2.0, 1, 3)
    m = riesz_maximal(StepFunction.zero(1, 3), 0.4, 2.0, ctx)
    assert np.allclose(m.values, 0.0)


def test_riesz_single_term_lower_bound():
    # value at x is at least the single-radius term for the cell's own window
    ctx = CapacityContext(0.4, 2.0, 1, 3)
    f = GridSet.from_cells(1, 3, [(3,), (4,)]).indicator()
    m = riesz_maximal(f, 0.4, 2.0, ctx)
    c_unit = ctx.unit_ball_capacity()
    h = 2.0 ** -3
    # ball around cell 3's center of radius 3h/2 contains cells 2..4 entirely
    window = GridSet.from_cells(1, 3, [(2,), (3,), (4,)])
    layer = window.intersection(f.support())
    r = 1.5 * h
    term = ctx.evaluate(layer) / (c_unit * r ** (1 - 0.4 * 2.0))
    assert m.values[3] >= term - 1e-9


def riesz_oracle(f, alpha, s, ctx):
    side = 1 << f.L
    h = 2.0 ** -f.L
    delta = f.n - alpha * s
    c_unit = ctx.unit_ball_capacity()
    dense = f.dense()
    ts = sorted(set(float(v) for v in dense if v > 0))
    out = []
    for k in range(side):
        c = 4 * k + 2
        fars = sorted({max(c - 4 * m, 4 * m + 4 - c) for m in range(side)})
        best = 0.0
        for rq in fars:
            window = [m for m in range(side) if max(c - 4 * m, 4 * m + 4 - c) <= rq]
            if not window:
                continue
            r = rq * h / 4
            num = 0.0
            prev = 0.0
            for t in ts:
                layer = [m for m in window if dense[m] >= t]
                if layer:
                    num += (t - prev) * ctx.evaluate(GridSet.from_cells(1, f.L, layer))
                prev = t
            best = max(best, num / (c_unit * r ** delta))
        out.append(best)
    return np.array(out)


def test_riesz_matches_radius_enumeration_oracle():
    ctx = CapacityContext(0.4, 2.0, 1, 3)
    for seed in (21, 22):
        f = random_step_function(seed, 3, 1)
        m = riesz_maximal(f, 0.4, 2.0, ctx)
        want = riesz_oracle(f, 0.4, 2.0, ctx)
        assert np.allclose(m.values, want, rtol=1e-10)


def test_riesz_rejects_bad_params():
    ctx = CapacityContext(0.4, 2.0, 1, 3)
    f = StepFunction.zero(1, 3)
    with pytest.raises(DomainError):
        riesz_maximal(f, 0.4, 2.5, ctx)  # alpha*s = 1 = n not allowed here
    with pytest.raises(DomainError):
        riesz_maximal(StepFunction.zero(1, 2), 0.4, 2.0, ctx)  # grid mismatch
