"""Inequality catalog and ensemble verification engine.

Every quantitative estimate the toolkit can test is cataloged here: weak and
strong type bounds for the maximal operators, dimension-change inequalities
for contents and capacities, the explicit interpolation constant, the
capacity Gamma-functional bound, and differentiation trends. Exact dyadic
arithmetic is used wherever possible and certified interval enclosures
elsewhere, with three-way verdicts so a loose enclosure can never pass or
fail a check it does not actually decide.

Constants come in three kinds. Explicit constants are closed formulas.
Chained constants are closed formulas consuming a previously frozen
empirical constant (the interpolation route to strong type bounds).
Empirical constants are estimated on a seed block, frozen into FROZEN with
headroom, and re-checked on fresh seeds; a frozen constant that a fresh
ensemble exceeds is a finding, not a tuning knob.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .content import Interval, dyadic_content, level_side_powers, omega
from .choquet import BallContentEvaluator, DyadicContentEvaluator, choquet_integral
from .errors import DomainError
from .lattice import GridSet, StepFunction, random_step_function
from .maximal import ball_maximal, dyadic_maximal, riesz_maximal
from .riesz import CapacityContext, gamma_functional, kernel_matrix

#: multiplicative slack on exact comparison paths (floating point only)
GUARD = 1e-9

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive-interval"

VALUE_LAWS = ("uniform", "levels", "sparse")


# ---------------------------------------------------------------------------
# explicit constants


def interpolation_constant(K, A1, A2, p) -> float:
    """Strong-type constant from a weak (1,1) bound A1, an L-infinity bound
    A2 and quasi-linearity constant K: (A1/A2)(2 A2 K)^p + 2 A1 K (2 A2 K)^(p-1)/(p-1)."""
    K = float(K)
    A1 = float(A1)
    A2 = float(A2)
    p = float(p)
    if p <= 1:
        raise DomainError(f"interpolation exponent must exceed 1, got {p}")
    if K < 1 or A1 <= 0 or A2 <= 0:
        raise DomainError("need K >= 1 and positive A1, A2")
    base = 2.0 * A2 * K
    return (A1 / A2) * base**p + 2.0 * A1 * K * base ** (p - 1.0) / (p - 1.0)


def gamma_bound_constant(s) -> float:
    """Explicit constant 2^s/(1 - 2^(-s)) of the Gamma-functional bound."""
    s = float(s)
    if s <= 1:
        raise DomainError(f"exponent must exceed 1, got {s}")
    return 2.0**s / (1.0 - 2.0**-s)


def lem22_ball_constant(gamma, beta) -> float:
    """omega_beta * omega_gamma^(-beta/gamma) * (beta/gamma), the ball-form
    integral dimension-change constant."""
    q = beta / gamma
    return omega(beta) * omega(gamma) ** (-q) * q


def lem22_conversion_factor(gamma, beta) -> float:
    """Geometric conversion from ball-cover to cube-cover normalization.

    Multiplying the ball-form constant by omega_gamma^(beta/gamma)/omega_beta
    leaves exactly beta/gamma, which is the sharp constant for the dyadic
    (cube-normalized) contents: the cover side lengths obey the power-mean
    inequality (sum l^beta)^(1/beta) <= (sum l^gamma)^(1/gamma) with no
    geometric factors at all.
    """
    return omega(gamma) ** (beta / gamma) / omega(beta)


# ---------------------------------------------------------------------------
# frozen empirical constants
#
# Estimated on the seed block (seed=1, instances 0..99, laws cycling) over
# the resolutions the suites use, then frozen. The dyadic weak-type constant
# is frozen at its exact value (the root threshold attains it and 90k
# instances over L = 1..6 never moved it past roundoff). Interval and
# capacity paths are frozen at 1.25 times the measured upper envelope
# because fresh seeds explore the enclosure and solver slack. A frozen
# constant a fresh ensemble exceeds is a finding, not a tuning knob.

FROZEN = {
    # sup_t t H({Mf >= t}) / int f for the dyadic pair, per beta; n=1, L <= 6.
    # The root cube forces ratio >= 1 (threshold at the root average) and
    # sweeps never exceed it.
    ("DYWEAK", 0.3): 1.0,
    ("DYWEAK", 0.5): 1.0,
    ("DYWEAK", 0.8): 1.0,
    # centered ball maximal vs ball content weak (1,1), n=1; measured sup
    # 0.99/0.98/0.98 over L in {3,4}
    ("THM12II", 0.3, 1): 1.24,
    ("THM12II", 0.5, 1): 1.24,
    ("THM12II", 0.8, 1): 1.23,
    # two-sided dyadic/ball content equivalence per (beta, n); measured sup
    # 1.371/1.393/1.230 over random sets, L <= 5
    ("CBETA", 0.3, 1): 1.72,
    ("CBETA", 0.5, 1): 1.75,
    ("CBETA", 0.8, 1): 1.54,
    # pointwise capacity maximal dimension change per (gamma, alpha, s, n);
    # L <= 3, measured sup 1.378
    ("LEM26", 0.3, 0.5, 1.5, 1): 1.73,
    # potential weak type sup_t t cap({M((I*phi)^s) > t}) / ||phi||_s^s;
    # measured sup 1.054
    ("LEM32", 0.5, 1.5, 1): 1.32,
    # capacity maximal weak (1,1) per (alpha, s, n); L <= 3, measured 0.904
    ("THM17II", 0.5, 1.5, 1): 1.13,
    # L-infinity bound of the capacity maximal operator: sup of M(1) is
    # deterministic per grid and stays below 1 through L = 3 (0.968), so the
    # structural bound 1 is frozen
    ("THM17A2", 0.5, 1.5, 1): 1.0,
    # mixed capacity strong/weak constants per (gamma, alpha, s[, p], n);
    # measured sup 1.300/1.044 at L <= 3
    ("COR19I", 0.3, 0.5, 1.5, 1.0, 1): 1.63,
    ("COR19II", 0.3, 0.5, 1.5, 1): 1.31,
}


def frozen_constant(*key) -> float:
    """Look up a frozen empirical constant; raises if it was never frozen."""
    k = tuple(round(float(x), 12) if isinstance(x, float) else x for x in key)
    try:
        return FROZEN[k]
    except KeyError:
        raise DomainError(f"no frozen constant for {k}; pass constant= explicitly") from None


# ---------------------------------------------------------------------------
# catalog


@dataclass(frozen=True)
class InequalitySpec:
    """One cataloged inequality: statement shape, constant kind, semantics."""

    id: str
    statement: str
    constant_kind: str  # "explicit" | "chained" | "empirical"
    semantics: str  # "exact" | "interval"
    instance_kind: str  # "function" | "function-threshold" | "family" | "density"
    default_params: dict = field(default_factory=dict)


CATALOG = {
    s.id: s
    for s in [
        InequalitySpec(
            "THM12i",
            "int (M_ball f)^p dH^b <= C int f^p dH^b, p > 1; C from the interpolation chain",
            "chained",
            "interval",
            "function",
            {"beta": 0.5, "p": 2.0, "n": 1, "L": 4, "evaluator": "dyadic"},
        ),
        InequalitySpec(
            "THM12ii",
            "t H^b({M_ball f > t}) <= C int f dH^b",
            "empirical",
            "interval",
            "function-threshold",
            {"beta": 0.5, "n": 1, "L": 4},
        ),
        InequalitySpec(
            "DYWEAK",
            "t H^{b,Q0}({M_dyadic f >= t}) <= C int f dH^{b,Q0}, exact",
            "empirical",
            "exact",
            "function-threshold",
            {"beta": 0.5, "n": 1, "L": 5},
        ),
        InequalitySpec(
            "COR14i",
            "int (M_ball^b f)^p dH^g <= C int f^p dH^g, p > g/b",
            "chained",
            "interval",
            "function",
            {"gamma": 0.5, "beta": 1.0, "p": 1.0, "n": 1, "L": 4, "evaluator": "dyadic"},
        ),
        InequalitySpec(
            "COR14ii",
            "t^p H^g({M_ball^b f > t}) <= C int f^p dH^g at p = g/b",
            "chained",
            "interval",
            "function-threshold",
            {"gamma": 0.5, "beta": 1.0, "n": 1, "L": 4, "evaluator": "dyadic"},
        ),
        InequalitySpec(
            "LEM22",
            "int f dH^b <= C (int f^{g/b} dH^g)^{b/g}",
            "explicit",
            "interval",
            "function",
            {"gamma": 0.5, "beta": 1.0, "n": 1, "L": 4, "evaluator": "dyadic"},
        ),
        InequalitySpec(
            "LEM23",
            "M^b f(x) <= (b/g) (M^g(f^{g/b})(x))^{b/g} per cell",
            "explicit",
            "interval",
            "function",
            {"gamma": 0.5, "beta": 1.0, "n": 1, "L": 4, "evaluator": "dyadic"},
        ),
        InequalitySpec(
            "LEM24",
            "H^b({M_ball f > t}) <= 3^n H^b({M_dyadic f > c t})",
            "explicit",
            "interval",
            "function-threshold",
            {"beta": 0.5, "n": 1, "L": 4},
        ),
        InequalitySpec(
            "LEM26",
            "M_cap(g,s) f <= C (M_cap(a,s) f^{(n-as)/(n-gs)})^{(n-gs)/(n-as)} per cell",
            "empirical",
            "interval",
            "function",
            {"gamma": 0.3, "alpha": 0.5, "s": 1.5, "n": 1, "L": 3},
        ),
        InequalitySpec(
            "LEM31",
            "Gamma_{a,s}(f) <= 2^s/(1-2^-s) int f^s dcap_{a,s}",
            "explicit",
            "interval",
            "function",
            {"alpha": 0.5, "s": 2.0, "n": 1, "L": 3},
        ),
        InequalitySpec(
            "LEM32",
            "t cap({M_cap (I_a * phi)^s > t}) <= C ||phi||_s^s",
            "empirical",
            "interval",
            "density",
            {"alpha": 0.5, "s": 1.5, "n": 1, "L": 3},
        ),
        InequalitySpec(
            "THM17i",
            "int (M_cap f)^p dcap <= C int f^p dcap, p > 1; C from the interpolation chain",
            "chained",
            "interval",
            "function",
            {"alpha": 0.5, "s": 1.5, "p": 2.0, "n": 1, "L": 3},
        ),
        InequalitySpec(
            "THM17ii",
            "t cap({M_cap f > t}) <= C int f dcap",
            "empirical",
            "interval",
            "function-threshold",
            {"alpha": 0.5, "s": 1.5, "n": 1, "L": 3},
        ),
        InequalitySpec(
            "COR19i",
            "int (M_cap(g,s) f)^p dcap(a,s) <= C int f^p dcap(a,s), p > (n-as)/(n-gs)",
            "empirical",
            "interval",
            "function",
            {"gamma": 0.3, "alpha": 0.5, "s": 1.5, "p": 1.0, "n": 1, "L": 3},
        ),
        InequalitySpec(
            "COR19ii",
            "t^p cap(a,s)({M_cap(g,s) f > t}) <= C int f^p dcap(a,s) at p = (n-as)/(n-gs)",
            "empirical",
            "interval",
            "function-threshold",
            {"gamma": 0.3, "alpha": 0.5, "s": 1.5, "n": 1, "L": 3},
        ),
        InequalitySpec(
            "SUBLIN",
            "int sum f_j dH^{b,Q0} <= sum int f_j dH^{b,Q0}, exact",
            "explicit",
            "exact",
            "family",
            {"beta": 0.5, "n": 1, "L": 4, "members": 3},
        ),
    ]
}


def catalog() -> dict:
    """The full inequality catalog keyed by id."""
    return dict(CATALOG)


# ---------------------------------------------------------------------------
# check records


@dataclass
class InequalityCheck:
    """Outcome of one inequality instance.

    lhs and rhs are the recorded witness pair (the worst cell or threshold
    for aggregated checks), ratio is lhs/(constant*rhs) as an interval, and
    verdict is three-way. A fail is only reported when the enclosures prove
    lhs > constant*rhs; consistent() is pass-or-inconclusive.
    """

    spec_id: str
    descriptor: dict
    lhs: Interval
    rhs: Interval
    constant: float
    ratio: Interval
    verdict: str
    note: str = ""

    def consistent(self) -> bool:
        return self.verdict != FAIL


def _as_iv(x) -> Interval:
    return x if isinstance(x, Interval) else Interval.point(float(x))


#: finite stand-in for an unbounded ratio endpoint (rhs enclosure hit zero)
RATIO_CAP = 1e300


def _div(num: float, den: float) -> float:
    if den > 0.0:
        return num / den
    return 0.0 if num == 0.0 else math.inf


def _ratio_interval(lhs: Interval, rhs: Interval, constant: float) -> Interval:
    lo = min(_div(lhs.lo, constant * rhs.hi), RATIO_CAP)
    hi = min(_div(lhs.hi, constant * rhs.lo), RATIO_CAP)
    return Interval(lo, max(lo, hi))


def _pair_verdict(lhs: Interval, rhs: Interval, constant: float, tolerance: float) -> str:
    bound_lo = constant * rhs.lo
    bound_hi = constant * rhs.hi
    slack = 1.0 + tolerance
    if lhs.hi <= bound_lo * slack:
        return PASS
    if lhs.lo > bound_hi * slack:
        return FAIL
    return INCONCLUSIVE


def _aggregate(pairs, constant, tolerance):
    """Verdict over witness pairs: any fail wins, else any inconclusive."""
    verdict = PASS
    counts = {PASS: 0, FAIL: 0, INCONCLUSIVE: 0}
    witness = None
    witness_key = -1.0
    for lhs, rhs in pairs:
        v = _pair_verdict(lhs, rhs, constant, tolerance)
        counts[v] += 1
        key = _div(lhs.hi, constant * rhs.lo)
        if witness is None or key > witness_key:
            witness, witness_key = (lhs, rhs), key
        if v == FAIL:
            verdict = FAIL
        elif v == INCONCLUSIVE and verdict == PASS:
            verdict = INCONCLUSIVE
    if witness is None:
        witness = (Interval.point(0.0), Interval.point(0.0))
    return verdict, counts, witness


# ---------------------------------------------------------------------------
# shared evaluator caches (contents and capacities are pure in their params)

_DY_EVALS: dict = {}
_BALL_EVALS: dict = {}
_CTXS: dict = {}


def _dy(beta) -> DyadicContentEvaluator:
    key = round(float(beta), 12)
    if key not in _DY_EVALS:
        _DY_EVALS[key] = DyadicContentEvaluator(key)
    return _DY_EVALS[key]


def _ball(beta, tight=True) -> BallContentEvaluator:
    key = (round(float(beta), 12), bool(tight))
    if key not in _BALL_EVALS:
        _BALL_EVALS[key] = BallContentEvaluator(key[0], tight=key[1])
    return _BALL_EVALS[key]


def capacity_context(alpha, s, n, L) -> CapacityContext:
    """Shared memoized capacity context per parameter set."""
    key = (round(float(alpha), 12), round(float(s), 12), int(n), int(L))
    if key not in _CTXS:
        _CTXS[key] = CapacityContext(*key)
    return _CTXS[key]


def _dyadic_integral(f: StepFunction, beta) -> float:
    return choquet_integral(f, _dy(beta))


def _ball_integral(f: StepFunction, beta, tight=True) -> Interval:
    return _as_iv(choquet_integral(f, _ball(beta, tight)))


def _cap_integral(f: StepFunction, ctx: CapacityContext) -> float:
    """Layer cake of f against the capacity, sharing the context cache."""
    ts = f.distinct_positive_values()
    total = 0.0
    prev = 0.0
    for t in ts:
        t = float(t)
        total += (t - prev) * ctx.capacity_of_bits(f.level_set(t).bits)
        prev = t
    return total


def _maximal_function(mres, power=1.0) -> StepFunction:
    """Exact maximal values as a step function, optionally raised to a power."""
    vals = mres.lo()
    if power != 1.0:
        vals = vals**power
    return StepFunction(mres.n, mres.L, vals)


def _threshold_grid(values: np.ndarray) -> list:
    """Distinct positive values plus geometric midpoints between neighbours;
    level sets only change there."""
    u = np.unique(values[values > 0.0])
    if u.size == 0:
        return []
    ts = list(map(float, u))
    mids = [math.sqrt(a * b) for a, b in zip(ts, ts[1:])]
    grid = sorted(set(ts + mids))
    return grid


def _weak_pairs(mres, contents, exponent=1.0, thresholds=None):
    """Pairs (t^p * C({M > t}), 1) over a threshold grid, as intervals.

    contents maps a GridSet to an Interval. The superlevel set of an
    interval-valued maximal function is bracketed by the sets cut from the
    lower and upper endpoint fields.
    """
    los = mres.lo()
    his = mres.hi()
    if thresholds is None:
        thresholds = _threshold_grid(his)
    pairs = []
    n, L = mres.n, mres.L
    for t in thresholds:
        outer = GridSet.from_dense(n, L, his > t)
        inner = GridSet.from_dense(n, L, los > t)
        c_out = contents(outer)
        c_in = contents(inner)
        tp = t**exponent
        pairs.append((t, Interval(tp * c_in.lo, tp * c_out.hi)))
    return pairs


# ---------------------------------------------------------------------------
# per-id recipes: params, instance -> (pairs, suggested constant, note)


def _r_sublin(p, inst):
    beta = p["beta"]
    fam = list(inst)
    if not fam:
        raise DomainError("sublinearity needs at least one function")
    total = fam[0]
    for g in fam[1:]:
        total = total.add(g)
    lhs = _dyadic_integral(total, beta)
    rhs = sum(_dyadic_integral(g, beta) for g in fam)
    return [(_as_iv(lhs), _as_iv(rhs))], 1.0, f"family of {len(fam)}"


def _dyweak_stats(f: StepFunction, beta) -> tuple:
    lpow = level_side_powers(beta, 0, f.L)
    row = f.dense("z").reshape(1, -1)
    out = _kernels.dyweak_stats_batch(row, lpow, 1 << f.n)
    return float(out[0, 0]), float(out[0, 1])


def _r_dyweak(p, inst):
    beta = p["beta"]
    if isinstance(inst, tuple):
        f, t = inst
        mres = dyadic_maximal(f, beta)
        sup = GridSet.from_dense(f.n, f.L, mres.lo() >= t)
        lhs = t * dyadic_content(sup, beta)
        rhs = _dyadic_integral(f, beta)
        note = f"t={t:.6g}"
    else:
        lhs, rhs = _dyweak_stats(inst, beta)
        note = "sup over level thresholds"
    return [(_as_iv(lhs), _as_iv(rhs))], None, note


def _strong_pair_content(f, beta, p, evaluator, mode="centered"):
    """(int (Mf)^p dC, int f^p dC) for the chosen content evaluator."""
    if evaluator == "dyadic":
        m = dyadic_maximal(f, beta)
        lhs = _dyadic_integral(_maximal_function(m, p), beta)
        rhs = _dyadic_integral(f.power(p), beta)
        return _as_iv(lhs), _as_iv(rhs)
    m = ball_maximal(f, beta, mode=mode)
    ev = _ball(beta)
    lo_p = StepFunction(f.n, f.L, m.lo() ** p)
    hi_p = StepFunction(f.n, f.L, m.hi() ** p)
    lhs = Interval(
        _as_iv(choquet_integral(lo_p, ev)).lo,
        _as_iv(choquet_integral(hi_p, ev)).hi,
    )
    rhs = _ball_integral(f.power(p), beta)
    return lhs, rhs


def _r_thm12i(p, inst):
    beta, pp = p["beta"], p["p"]
    if pp <= 1:
        raise DomainError(f"strong type needs p > 1, got {pp}")
    lhs, rhs = _strong_pair_content(inst, beta, pp, p.get("evaluator", "dyadic"))
    a1 = p.get("A1")
    if a1 is None:
        a1 = frozen_constant("DYWEAK", beta)
    const = interpolation_constant(2.0, a1, 1.0, pp)
    return [(lhs, rhs)], const, f"A3 chain with A1={a1:.6g}"


def _r_thm12ii(p, inst):
    beta = p["beta"]
    explicit_t = None
    if isinstance(inst, tuple):
        inst, explicit_t = inst
    m = ball_maximal(inst, beta)
    ev = _ball(beta)

    def contents(E):
        return _as_iv(ev.evaluate(E))

    ts = [explicit_t] if explicit_t is not None else None
    weak = _weak_pairs(m, contents, 1.0, ts)
    rhs = _ball_integral(inst, beta)
    pairs = [(iv, rhs) for _, iv in weak]
    if not pairs:
        pairs = [(Interval.point(0.0), rhs)]
    return pairs, None, "centered ball maximal, ball content"


def _r_cor14i(p, inst):
    gamma, beta, pp = p["gamma"], p["beta"], p["p"]
    if not (0 < gamma < beta):
        raise DomainError("need 0 < gamma < beta")
    if pp <= gamma / beta:
        raise DomainError(f"strong mixed type needs p > gamma/beta, got {pp}")
    evaluator = p.get("evaluator", "dyadic")
    if evaluator == "dyadic":
        m = dyadic_maximal(inst, beta)
        lhs = _as_iv(_dyadic_integral(_maximal_function(m, pp), gamma))
        rhs = _as_iv(_dyadic_integral(inst.power(pp), gamma))
    else:
        m = ball_maximal(inst, beta)
        ev = _ball(gamma)
        lhs = Interval(
            _as_iv(choquet_integral(StepFunction(inst.n, inst.L, m.lo() ** pp), ev)).lo,
            _as_iv(choquet_integral(StepFunction(inst.n, inst.L, m.hi() ** pp), ev)).hi,
        )
        rhs = _ball_integral(inst.power(pp), gamma)
    a1 = p.get("A1")
    if a1 is None:
        a1 = frozen_constant("DYWEAK", gamma)
    inner_p = pp * beta / gamma
    const = (beta / gamma) ** pp * interpolation_constant(2.0, a1, 1.0, inner_p)
    return [(lhs, rhs)], const, f"chained via exponent {inner_p:.6g}"


def _r_cor14ii(p, inst):
    gamma, beta = p["gamma"], p["beta"]
    pp = gamma / beta
    explicit_t = None
    if isinstance(inst, tuple):
        inst, explicit_t = inst
    evaluator = p.get("evaluator", "dyadic")
    if evaluator == "dyadic":
        m = dyadic_maximal(inst, beta)

        def contents(E):
            return _as_iv(dyadic_content(E, gamma))

    else:
        m = ball_maximal(inst, beta)
        ev = _ball(gamma)

        def contents(E):
            return _as_iv(ev.evaluate(E))

    ts = [explicit_t] if explicit_t is not None else None
    weak = _weak_pairs(m, contents, pp, ts)
    if evaluator == "dyadic":
        rhs = _as_iv(_dyadic_integral(inst.power(pp), gamma))
    else:
        rhs = _ball_integral(inst.power(pp), gamma)
    a1 = p.get("A1")
    if a1 is None:
        a1 = frozen_constant("DYWEAK", gamma)
    const = a1 * (beta / gamma) ** pp
    pairs = [(iv, rhs) for _, iv in weak] or [(Interval.point(0.0), rhs)]
    return pairs, const, f"endpoint p={pp:.6g}"


def _r_lem22(p, inst):
    gamma, beta = p["gamma"], p["beta"]
    if not (0 < gamma < beta):
        raise DomainError("need 0 < gamma < beta")
    q = beta / gamma
    evaluator = p.get("evaluator", "dyadic")
    if evaluator == "dyadic":
        lhs = _as_iv(_dyadic_integral(inst, beta))
        rhs = _as_iv(_dyadic_integral(inst.power(1.0 / q), gamma)).power(q)
        const = lem22_ball_constant(gamma, beta) * lem22_conversion_factor(gamma, beta)
        note = f"converted constant {const:.6g} = beta/gamma"
    else:
        lhs = _ball_integral(inst, beta)
        rhs = _ball_integral(inst.power(1.0 / q), gamma).power(q)
        const = lem22_ball_constant(gamma, beta)
        note = "ball form, unconverted"
    return [(lhs, rhs)], const, note


def _r_lem23(p, inst):
    gamma, beta = p["gamma"], p["beta"]
    if not (0 < gamma <= beta):
        raise DomainError("need 0 < gamma <= beta")
    q = beta / gamma
    evaluator = p.get("evaluator", "dyadic")
    if evaluator == "dyadic":
        mb = dyadic_maximal(inst, beta)
        mg = dyadic_maximal(inst.power(1.0 / q), gamma)
        pairs = [
            (Interval.point(a), Interval.point(b**q)) for a, b in zip(mb.lo(), mg.lo())
        ]
    else:
        tight = bool(p.get("tight", False))
        mb = ball_maximal(inst, beta, tight=tight)
        mg = ball_maximal(inst.power(1.0 / q), gamma, tight=tight)
        pairs = [
            (a, Interval(b.lo**q, b.hi**q)) for a, b in zip(mb.values, mg.values)
        ]
    return pairs, q, f"per cell over {len(pairs)}"


def _r_lem24(p, inst):
    beta, n = p["beta"], p["n"]
    explicit_t = None
    if isinstance(inst, tuple):
        inst, explicit_t = inst
    cbeta = p.get("CBETA")
    if cbeta is None:
        cbeta = frozen_constant("CBETA", beta, n)
    small_c = omega(beta) / (cbeta**3 * 2.0 ** (n + 2.0 * beta))
    mb = ball_maximal(inst, beta)
    md = dyadic_maximal(inst, beta)
    ev = _ball(beta)
    mdv = md.lo()
    ts = [explicit_t] if explicit_t is not None else _threshold_grid(mb.hi())
    pairs = []
    for t in ts:
        outer = GridSet.from_dense(inst.n, inst.L, mb.hi() > t)
        inner = GridSet.from_dense(inst.n, inst.L, mb.lo() > t)
        lhs = Interval(_as_iv(ev.evaluate(inner)).lo, _as_iv(ev.evaluate(outer)).hi)
        dset = GridSet.from_dense(inst.n, inst.L, mdv > small_c * t)
        pairs.append((lhs, _as_iv(ev.evaluate(dset))))
    if not pairs:
        pairs = [(Interval.point(0.0), Interval.point(0.0))]
    return pairs, 3.0**n, f"c={small_c:.6g} from CBETA={cbeta:.6g}"


def _r_lem26(p, inst):
    gamma, alpha, s, n, L = p["gamma"], p["alpha"], p["s"], p["n"], p["L"]
    if not (0 < gamma < alpha):
        raise DomainError("need 0 < gamma < alpha")
    dg = n - gamma * s
    da = n - alpha * s
    if da <= 0:
        raise DomainError("need s < n/alpha")
    ctx_g = capacity_context(gamma, s, n, L)
    ctx_a = capacity_context(alpha, s, n, L)
    mg = riesz_maximal(inst, gamma, s, ctx_g)
    ma = riesz_maximal(inst.power(da / dg), alpha, s, ctx_a)
    q = dg / da
    pairs = [
        (Interval.point(a), Interval.point(b**q)) for a, b in zip(mg.lo(), ma.lo())
    ]
    return pairs, None, f"per cell over {len(pairs)}, inner exponent {da / dg:.6g}"


def _r_lem31(p, inst):
    alpha, s = p["alpha"], p["s"]
    ctx = capacity_context(alpha, s, inst.n, inst.L)
    lhs = gamma_functional(inst, ctx)
    rhs = _cap_integral(inst.power(s), ctx)
    return [(_as_iv(lhs), _as_iv(rhs))], gamma_bound_constant(s), ""


def potential_of(phi: StepFunction, ctx: CapacityContext) -> StepFunction:
    """Riesz potential of a cell density, sampled on the same grid."""
    B = kernel_matrix(ctx.L, ctx.n, ctx.alpha) * ctx.hn
    return StepFunction(phi.n, phi.L, B @ phi.values)


def _r_lem32(p, inst):
    alpha, s = p["alpha"], p["s"]
    ctx = capacity_context(alpha, s, inst.n, inst.L)
    u = potential_of(inst, ctx)
    m = riesz_maximal(u.power(s), alpha, s, ctx)
    rhs = _as_iv(float(np.sum(inst.values**s) * ctx.hn))

    def contents(E):
        return _as_iv(ctx.capacity_of_bits(E.bits))

    weak = _weak_pairs(m, contents, 1.0)
    pairs = [(iv, rhs) for _, iv in weak] or [(Interval.point(0.0), rhs)]
    return pairs, None, "density instance"


def _r_thm17i(p, inst):
    alpha, s, pp = p["alpha"], p["s"], p["p"]
    if pp <= 1:
        raise DomainError(f"strong type needs p > 1, got {pp}")
    ctx = capacity_context(alpha, s, inst.n, inst.L)
    m = riesz_maximal(inst, alpha, s, ctx)
    lhs = _cap_integral(_maximal_function(m, pp), ctx)
    rhs = _cap_integral(inst.power(pp), ctx)
    a1 = p.get("A1")
    if a1 is None:
        a1 = frozen_constant("THM17II", alpha, s, inst.n)
    a2 = p.get("A2")
    if a2 is None:
        a2 = frozen_constant("THM17A2", alpha, s, inst.n)
    const = interpolation_constant(2.0, a1, a2, pp)
    return [(_as_iv(lhs), _as_iv(rhs))], const, f"A3 chain with A1={a1:.6g}, A2={a2:.6g}"


def _r_thm17ii(p, inst):
    alpha, s = p["alpha"], p["s"]
    explicit_t = None
    if isinstance(inst, tuple):
        inst, explicit_t = inst
    ctx = capacity_context(alpha, s, inst.n, inst.L)
    m = riesz_maximal(inst, alpha, s, ctx)
    rhs = _as_iv(_cap_integral(inst, ctx))

    def contents(E):
        return _as_iv(ctx.capacity_of_bits(E.bits))

    ts = [explicit_t] if explicit_t is not None else None
    weak = _weak_pairs(m, contents, 1.0, ts)
    pairs = [(iv, rhs) for _, iv in weak] or [(Interval.point(0.0), rhs)]
    return pairs, None, "capacity maximal weak type"


def _cor19_exponent(p):
    n = p["n"]
    da = n - p["alpha"] * p["s"]
    dg = n - p["gamma"] * p["s"]
    if da <= 0 or dg <= 0:
        raise DomainError("need s below n/alpha and n/gamma")
    return da / dg


def _r_cor19i(p, inst):
    gamma, alpha, s, pp = p["gamma"], p["alpha"], p["s"], p["p"]
    if not (0 < gamma < alpha):
        raise DomainError("need 0 < gamma < alpha")
    edge = _cor19_exponent(p)
    if pp <= edge:
        raise DomainError(f"strong mixed type needs p > {edge:.6g}, got {pp}")
    ctx_g = capacity_context(gamma, s, inst.n, inst.L)
    ctx_a = capacity_context(alpha, s, inst.n, inst.L)
    m = riesz_maximal(inst, gamma, s, ctx_g)
    lhs = _cap_integral(_maximal_function(m, pp), ctx_a)
    rhs = _cap_integral(inst.power(pp), ctx_a)
    return [(_as_iv(lhs), _as_iv(rhs))], None, f"edge exponent {edge:.6g}"


def _r_cor19ii(p, inst):
    gamma, alpha, s = p["gamma"], p["alpha"], p["s"]
    if not (0 < gamma < alpha):
        raise DomainError("need 0 < gamma < alpha")
    pp = _cor19_exponent(p)
    explicit_t = None
    if isinstance(inst, tuple):
        inst, explicit_t = inst
    ctx_g = capacity_context(gamma, s, inst.n, inst.L)
    ctx_a = capacity_context(alpha, s, inst.n, inst.L)
    m = riesz_maximal(inst, gamma, s, ctx_g)
    rhs = _as_iv(_cap_integral(inst.power(pp), ctx_a))

    def contents(E):
        return _as_iv(ctx_a.capacity_of_bits(E.bits))

    ts = [explicit_t] if explicit_t is not None else None
    weak = _weak_pairs(m, contents, pp, ts)
    pairs = [(iv, rhs) for _, iv in weak] or [(Interval.point(0.0), rhs)]
    return pairs, None, f"endpoint p={pp:.6g}"


_RECIPES = {
    "SUBLIN": _r_sublin,
    "DYWEAK": _r_dyweak,
    "THM12i": _r_thm12i,
    "THM12ii": _r_thm12ii,
    "COR14i": _r_cor14i,
    "COR14ii": _r_cor14ii,
    "LEM22": _r_lem22,
    "LEM23": _r_lem23,
    "LEM24": _r_lem24,
    "LEM26": _r_lem26,
    "LEM31": _r_lem31,
    "LEM32": _r_lem32,
    "THM17i": _r_thm17i,
    "THM17ii": _r_thm17ii,
    "COR19i": _r_cor19i,
    "COR19ii": _r_cor19ii,
}

#: frozen-table keys consulted when no constant is passed, per spec id
_FROZEN_KEYS = {
    "DYWEAK": ("beta",),
    "THM12ii": ("beta", "n"),
    "LEM26": ("gamma", "alpha", "s", "n"),
    "LEM32": ("alpha", "s", "n"),
    "THM17ii": ("alpha", "s", "n"),
    "COR19i": ("gamma", "alpha", "s", "p", "n"),
    "COR19ii": ("gamma", "alpha", "s", "n"),
}


def _resolve_constant(spec_id, params, suggested):
    if "constant" in params and params["constant"] is not None:
        return float(params["constant"])
    if suggested is not None:
        return float(suggested)
    fields = _FROZEN_KEYS.get(spec_id)
    if fields is None:
        raise DomainError(f"{spec_id}: no constant available")
    return frozen_constant(spec_id.upper(), *(params[k] for k in fields))


def check(spec_id, instance, params=None, constant=None, tolerance=GUARD) -> InequalityCheck:
    """Evaluate one cataloged inequality on one instance.

    instance is a StepFunction, an (f, t) pair for threshold checks, a list
    of StepFunctions for family checks, or a density for the potential
    weak-type check. Domain violations raise DomainError (a rejected
    instance, not a verdict).
    """
    if spec_id not in CATALOG:
        raise DomainError(f"unknown inequality id {spec_id!r}")
    merged = dict(CATALOG[spec_id].default_params)
    merged.update(params or {})
    if constant is not None:
        merged["constant"] = constant
    stale = sum(c.tainted_reads for c in _CTXS.values())
    pairs, suggested, note = _RECIPES[spec_id](merged, instance)
    const = _resolve_constant(spec_id, merged, suggested)
    verdict, counts, witness = _aggregate(pairs, const, tolerance)
    if verdict == PASS and sum(c.tainted_reads for c in _CTXS.values()) > stale:
        verdict = INCONCLUSIVE
        note = f"{note}; solver non-convergence" if note else "solver non-convergence"
    lhs, rhs = witness
    if len(pairs) > 1:
        tally = f"{len(pairs)} pairs, {counts[INCONCLUSIVE]} inconclusive"
        note = f"{note}; {tally}" if note else tally
    return InequalityCheck(
        spec_id=spec_id,
        descriptor={k: v for k, v in merged.items() if k != "constant"},
        lhs=lhs,
        rhs=rhs,
        constant=const,
        ratio=_ratio_interval(lhs, rhs, const),
        verdict=verdict,
        note=note,
    )


# ---------------------------------------------------------------------------
# ensembles


def _instance_for(spec_id, params, seed, idx):
    kind = CATALOG[spec_id].instance_kind
    n, L = params["n"], params["L"]
    law = params.get("law") or VALUE_LAWS[idx % len(VALUE_LAWS)]
    if kind == "family":
        m = int(params.get("members", 3))
        return [random_step_function((seed, idx, j), L, n, law) for j in range(m)]
    if kind == "density":
        return random_step_function((seed, idx), L, n, law)
    return random_step_function((seed, idx), L, n, law)


def _pmap(fn, items):
    workers = max(1, int(os.environ.get("CAPINT_THREADS", "1") or "1"))
    if workers == 1 or len(items) < 4:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def run_ensemble(
    spec_id, params=None, seed=0, size=100, constant=None, tolerance=GUARD
) -> list:
    """Deterministic ensemble of checks; instance i uses seed (seed, i)."""
    if size < 1:
        raise DomainError("ensemble size must be at least 1")
    merged = dict(CATALOG[spec_id].default_params)
    merged.update(params or {})

    def one(idx):
        inst = _instance_for(spec_id, merged, seed, idx)
        rec = check(spec_id, inst, merged, constant=constant, tolerance=tolerance)
        rec.descriptor["seed"] = (seed, idx)
        return rec

    return _pmap(one, list(range(size)))


def dyweak_ratio_batch(beta, L, n, seeds, law=None) -> np.ndarray:
    """sup_t t H({Mf >= t}) / int f for a block of seeds, kernel-batched."""
    rows = []
    for i, sd in enumerate(seeds):
        f = random_step_function(sd, L, n, law or VALUE_LAWS[i % len(VALUE_LAWS)])
        rows.append(f.dense("z"))
    lpow = level_side_powers(beta, 0, L)
    out = _kernels.dyweak_stats_batch(np.array(rows), lpow, 1 << n)
    sup, integ = out[:, 0], out[:, 1]
    ratios = np.zeros(len(rows))
    pos = integ > 0
    ratios[pos] = sup[pos] / integ[pos]
    return ratios


def estimate_sharp_constant(
    spec_id, params=None, seed=0, size=100, which="lower"
) -> float:
    """sup over an ensemble of the raw ratio lhs/rhs.

    which="lower" uses lhs.lo/rhs.hi (a conservative lower estimate of the
    sharp constant); which="upper" uses lhs.hi/rhs.lo (an upper envelope).
    Deterministic per seed, monotone in ensemble size.
    """
    if which not in ("lower", "upper"):
        raise DomainError(f"unknown estimate side {which!r}")
    merged = dict(CATALOG[spec_id].default_params)
    merged.update(params or {})

    def one(idx):
        inst = _instance_for(spec_id, merged, seed, idx)
        pairs, _, _ = _RECIPES[spec_id](merged, inst)
        best = 0.0
        for lhs, rhs in pairs:
            r = _div(lhs.lo, rhs.hi) if which == "lower" else _div(lhs.hi, rhs.lo)
            if r > best:
                best = r
        return best

    return float(max(_pmap(one, list(range(size))), default=0.0))


# ---------------------------------------------------------------------------
# differentiation trends


def _window_bits(n, L, cell, r) -> int:
    """Cells whose far corner lies within the closed ball B(center(cell), r)."""
    side = 1 << L
    h = 2.0**-L
    u = h / 4.0
    rq = (r / u) ** 2
    if n == 1:
        k = cell if isinstance(cell, int) else cell[0]
        c = 4 * k + 2
        bits = 0
        for m_ in range(side):
            far = max(c - 4 * m_, 4 * m_ + 4 - c)
            if far * far <= rq:
                bits |= 1 << m_
        return bits
    kx, ky = cell
    cx, cy = 4 * kx + 2, 4 * ky + 2
    bits = 0
    for mx in range(side):
        fx = max(cx - 4 * mx, 4 * mx + 4 - cx)
        for my in range(side):
            fy = max(cy - 4 * my, 4 * my + 4 - cy)
            if fx * fx + fy * fy <= rq:
                bits |= 1 << (mx * side + my)
    return bits


def differentiation_trend(f: StepFunction, cell, p, evaluator, radii) -> list:
    """Normalized averages of |f - f(cell)|^p over shrinking balls.

    evaluator picks the set function and its scale normalization: a content
    evaluator divides by omega_beta r^beta, a CapacityContext divides by
    c_unit r^(n - alpha s). Returns [(r, Interval)] in the given radius
    order; no limit is claimed, only the finite trend.
    """
    h = 2.0**-f.L
    for r in radii:
        if not r >= h:
            raise DomainError(f"radius {r} below the cell size {h}")
    fx = f.value_at(cell)
    g = np.abs(f.values - fx) ** float(p)
    is_cap = isinstance(evaluator, CapacityContext)
    if is_cap:
        delta = evaluator.n - evaluator.alpha * evaluator.s
        if delta <= 0:
            raise DomainError("capacity trend needs s < n/alpha")
        c_unit = evaluator.unit_ball_capacity()
    out = []
    for r in radii:
        window = GridSet(f.n, f.L, _window_bits(f.n, f.L, cell, r))
        gf = StepFunction(f.n, f.L, g * window.dense())
        if is_cap:
            val = _as_iv(_cap_integral(gf, evaluator))
            norm = c_unit * r**delta
        else:
            val = _as_iv(choquet_integral(gf, evaluator))
            norm = omega(evaluator.beta) * r ** evaluator.beta
        out.append((float(r), val.scale(1.0 / norm)))
    return out


# ---------------------------------------------------------------------------
# the full battery


def suite_plan() -> list:
    """Default parameter/ensemble plan for a full verification run."""
    return [
        {"spec": "SUBLIN", "params": {"beta": 0.5, "n": 1, "L": 4}, "size": 150},
        {"spec": "SUBLIN", "params": {"beta": 0.8, "n": 2, "L": 2}, "size": 50},
        {"spec": "DYWEAK", "params": {"beta": 0.3, "n": 1, "L": 5}, "size": 400},
        {"spec": "DYWEAK", "params": {"beta": 0.5, "n": 1, "L": 5}, "size": 400},
        {"spec": "DYWEAK", "params": {"beta": 0.8, "n": 1, "L": 4}, "size": 400},
        {
            "spec": "THM12i",
            "params": {"beta": 0.5, "p": 2.0, "n": 1, "L": 4, "evaluator": "dyadic"},
            "size": 150,
        },
        {
            "spec": "THM12i",
            "params": {"beta": 0.5, "p": 1.5, "n": 1, "L": 4, "evaluator": "dyadic"},
            "size": 100,
        },
        {"spec": "THM12ii", "params": {"beta": 0.5, "n": 1, "L": 4}, "size": 100},
        {
            "spec": "COR14i",
            "params": {"gamma": 0.5, "beta": 1.0, "p": 1.0, "n": 1, "L": 4},
            "size": 100,
        },
        {
            "spec": "COR14ii",
            "params": {"gamma": 0.5, "beta": 1.0, "n": 1, "L": 4},
            "size": 100,
        },
        {
            "spec": "LEM22",
            "params": {"gamma": 0.5, "beta": 1.0, "n": 1, "L": 4, "evaluator": "dyadic"},
            "size": 150,
        },
        {
            "spec": "LEM22",
            "params": {"gamma": 0.4, "beta": 0.8, "n": 1, "L": 4, "evaluator": "ball"},
            "size": 60,
        },
        {
            "spec": "LEM23",
            "params": {"gamma": 0.5, "beta": 1.0, "n": 1, "L": 4, "evaluator": "dyadic"},
            "size": 150,
        },
        {
            "spec": "LEM23",
            "params": {"gamma": 0.5, "beta": 1.0, "n": 1, "L": 4, "evaluator": "ball"},
            "size": 60,
        },
        {"spec": "LEM24", "params": {"beta": 0.5, "n": 1, "L": 4}, "size": 100},
        {
            "spec": "LEM26",
            "params": {"gamma": 0.3, "alpha": 0.5, "s": 1.5, "n": 1, "L": 3},
            "size": 40,
        },
        {"spec": "LEM31", "params": {"alpha": 0.5, "s": 2.0, "n": 1, "L": 3}, "size": 60},
        {"spec": "LEM31", "params": {"alpha": 0.5, "s": 1.5, "n": 1, "L": 3}, "size": 40},
        {"spec": "LEM32", "params": {"alpha": 0.5, "s": 1.5, "n": 1, "L": 3}, "size": 40},
        {
            "spec": "THM17i",
            "params": {"alpha": 0.5, "s": 1.5, "p": 2.0, "n": 1, "L": 3},
            "size": 40,
        },
        {"spec": "THM17ii", "params": {"alpha": 0.5, "s": 1.5, "n": 1, "L": 3}, "size": 60},
        {
            "spec": "COR19i",
            "params": {"gamma": 0.3, "alpha": 0.5, "s": 1.5, "p": 1.0, "n": 1, "L": 3},
            "size": 40,
        },
        {
            "spec": "COR19ii",
            "params": {"gamma": 0.3, "alpha": 0.5, "s": 1.5, "n": 1, "L": 3},
            "size": 40,
        },
    ]


def run_suite(seed=42, plan=None, tolerance=GUARD) -> dict:
    """Run the full battery; returns records, per-id tallies and constants."""
    if plan is None:
        plan = suite_plan()
    records = []
    tallies = {}
    constants = {}
    for job in plan:
        sid = job["spec"]
        recs = run_ensemble(
            sid, job.get("params"), seed=seed, size=job["size"], tolerance=tolerance
        )
        records.extend(recs)
        t = tallies.setdefault(sid, {PASS: 0, FAIL: 0, INCONCLUSIVE: 0})
        for r in recs:
            t[r.verdict] += 1
        if recs:
            kind = CATALOG[sid].constant_kind
            constants[f"{sid}:{_param_tag(job.get('params') or {})}"] = (
                recs[0].constant,
                kind,
            )
    summary = {
        "checks": len(records),
        "fails": sum(t[FAIL] for t in tallies.values()),
        "inconclusive": sum(t[INCONCLUSIVE] for t in tallies.values()),
    }
    return {
        "seed": seed,
        "records": records,
        "tallies": tallies,
        "constants": constants,
        "summary": summary,
    }


def _param_tag(params: dict) -> str:
    keep = {k: v for k, v in params.items() if k not in ("evaluator", "law")}
    ev = params.get("evaluator")
    parts = [f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in sorted(keep.items())]
    if ev:
        parts.append(ev)
    return ",".join(parts)
