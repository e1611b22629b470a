"""Choquet layer-cake integration against contents and capacities."""

import numpy as np
import pytest

from capint import DomainError
from capint.choquet import (
    BallContentEvaluator,
    DyadicContentEvaluator,
    choquet_integral,
    lp_quasinorm,
)
from capint.content import Interval, dyadic_content
from capint.lattice import GridSet, StepFunction, random_step_function


def riemann_oracle(f, C, samples=100_000):
    """Brute-force Riemann sums of t -> C({f > t}).

    Returns (midpoint sum, bracket width): the map is non-increasing, so the
    left and right sums bracket the true integral and their gap is the
    oracle's own error bound.
    """
    top = f.max_value()
    if top == 0:
        return 0.0, 0.0
    ts = np.sort(f.distinct_positive_values())
    # for t in (ts[i-1], ts[i]) the strict superlevel set is {f >= ts[i]}
    svals = np.array([C.evaluate(f.level_set(float(t))) for t in ts])
    dt = top / samples
    grid = (np.arange(samples) + 0.5) * dt
    idx = np.searchsorted(ts, grid, side="left")
    g = np.where(idx < ts.size, svals[np.minimum(idx, svals.size - 1)], 0.0)
    mid = float(np.sum(g) * dt)
    # monotone integrand: midpoint sum and the true value both sit between
    # the left and right sums, which differ by g(0+) * dt
    return mid, float(svals[0] * dt)


def test_indicator_single_layer():
    E = GridSet.from_cells(1, 3, [(1,), (2,), (5,)])
    C = DyadicContentEvaluator(0.6)
    assert choquet_integral(E.indicator(), C) == C.evaluate(E)


def test_two_layer_closed_form():
    # f = 2 chi_A + chi_{B\A} with A inside B: integral = C(B) + C(A)
    A = GridSet.from_cells(1, 3, [(2,)])
    B = GridSet.from_cells(1, 3, [(1,), (2,), (6,)])
    f_vals = np.zeros(8)
    f_vals[list(B.flats())] = 1.0
    f_vals[list(A.flats())] = 2.0
    f = StepFunction(1, 3, f_vals)
    C = DyadicContentEvaluator(0.7)
    want = C.evaluate(B) + C.evaluate(A)
    assert abs(choquet_integral(f, C) - want) < 1e-15


def test_zero_function():
    C = DyadicContentEvaluator(0.5)
    assert choquet_integral(StepFunction.zero(1, 2), C) == 0.0
    iv = choquet_integral(StepFunction.zero(1, 2), BallContentEvaluator(0.5))
    assert iv.lo == 0.0 and iv.hi == 0.0


def test_riemann_sum_oracle():
    # agrees with a brute-force Riemann sum up to the sampling error bound
    C = DyadicContentEvaluator(0.8)
    for seed in range(6):
        f = random_step_function(seed, 3, 1, ["uniform", "levels"][seed % 2])
        got = choquet_integral(f, C)
        mid, err = riemann_oracle(f, C)
        assert abs(got - mid) <= err + 1e-9


def test_interval_evaluator_integral():
    f = random_step_function(4, 2, 1, "levels")
    iv = choquet_integral(f, BallContentEvaluator(1.0))
    ex = choquet_integral(f, DyadicContentEvaluator(1.0))
    assert isinstance(iv, Interval)
    assert iv.lo <= iv.hi
    # dyadic and ball contents agree within the documented envelope at beta=1
    assert iv.hi <= 2.0 * ex + 1e-12


def test_monotone_in_f():
    rng = np.random.default_rng(2)
    C = DyadicContentEvaluator(0.5)
    for _ in range(25):
        f = random_step_function(int(rng.integers(1e9)), 3, 1)
        g = f.add(random_step_function(int(rng.integers(1e9)), 3, 1))
        assert choquet_integral(f, C) <= choquet_integral(g, C) + 1e-12


def test_chebyshev_layers():
    # t * C({f > t}) <= integral at every layer threshold
    C = DyadicContentEvaluator(0.4)
    for seed in range(10):
        f = random_step_function(seed, 4, 1)
        total = choquet_integral(f, C)
        for t in f.distinct_positive_values():
            t = float(t)
            assert t * C.evaluate(f.level_set(t, strict=True)) <= total + 1e-12


def test_finite_subadditivity_families():
    C = DyadicContentEvaluator(0.6)
    rng = np.random.default_rng(8)
    for _ in range(300):
        k = int(rng.integers(2, 6))
        fs = [random_step_function(int(rng.integers(1e9)), 3, 1) for _ in range(k)]
        tot = fs[0]
        for g in fs[1:]:
            tot = tot.add(g)
        lhs = choquet_integral(tot, C)
        rhs = sum(choquet_integral(g, C) for g in fs)
        assert lhs <= rhs * (1 + 1e-12) + 1e-15


def test_lp_quasinorm():
    C = DyadicContentEvaluator(0.9)
    f = random_step_function(13, 3, 1)
    assert lp_quasinorm(f, 1.0, C) == choquet_integral(f, C)
    # positive homogeneity
    a = lp_quasinorm(f.scale(3.0), 2.0, C)
    b = 3.0 * lp_quasinorm(f, 2.0, C)
    assert abs(a - b) <= 1e-12 * max(1.0, b)
    # indicator of the root has norm 1 for every p and beta
    one = GridSet.full(1, 2).indicator()
    for p, beta in [(1.0, 0.3), (2.0, 0.8), (1.5, 1.0)]:
        assert abs(lp_quasinorm(one, p, DyadicContentEvaluator(beta)) - 1.0) < 1e-12
    with pytest.raises(DomainError):
        lp_quasinorm(f, 0.0, C)


def test_evaluator_root_normalization():
    for beta in (0.3, 1.0):
        C = DyadicContentEvaluator(beta)
        assert C.evaluate(GridSet.full(1, 3)) == 1.0
        assert dyadic_content(GridSet.full(1, 3), beta) == 1.0
