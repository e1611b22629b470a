"""Riesz kernels, discretized Riesz capacity, and capacitary integration.

The capacity of a cell set E is the convex program

    min sum_j phi_j^s h^n   s.t.  (K phi)(x_i) >= 1 on E,  phi >= 0,

where K is the matrix of cell-averaged Riesz kernels. It is solved in the
dual: for multipliers lam >= 0 on the constraints the inner minimization
has the closed form phi_j = ((K^T lam)_j / s)^(1/(s-1)) (the cell volumes
cancel), giving a concave dual maximized by projected gradient ascent with
backtracking. Weak duality plus an infeasibility-corrected primal point
yields a certified bracket [dual value, corrected objective] whose relative
width is the reported optimality gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .choquet import SetFunctionEvaluator
from .errors import DomainError
from .lattice import GridSet, StepFunction

#: largest constraint-matrix size (rows * columns) the solver will build
MAX_KERNEL_ENTRIES = 1 << 24

KKT_TOL = 1e-6
MAX_ITERATIONS = 100_000


def gamma_alpha(alpha: float, n: int) -> float:
    """Riesz normalization gamma(a) = pi^(n/2) 2^a Gamma(a/2) / Gamma((n-a)/2)."""
    if not (0 < alpha < n):
        raise DomainError(f"alpha must lie in (0, n), got {alpha}")
    return (
        math.pi ** (n / 2.0)
        * 2.0**alpha
        * math.gamma(alpha / 2.0)
        / math.gamma((n - alpha) / 2.0)
    )


def _displacement_table_1d(L: int, alpha: float) -> np.ndarray:
    """G[d] = average of |x - y|^(a-1)/gamma(a) over a cell at lattice
    distance d from the evaluation point (a cell center), d = 0..2^L-1.

    Exact closed forms: the self cell integrates to 2 (h/2)^a / (a h) and a
    disjoint cell at distance d spans [dh - h/2, dh + h/2] from the center,
    integrating to ((d2)^a - (d1)^a) / (a h).
    """
    h = 2.0**-L
    g = gamma_alpha(alpha, 1)
    d = np.arange(1, 1 << L, dtype=np.float64)
    near = d * h - h / 2.0
    far = d * h + h / 2.0
    out = np.empty(1 << L)
    out[0] = 2.0 * (h / 2.0) ** alpha / (alpha * h * g)
    out[1:] = (far**alpha - near**alpha) / (alpha * h * g)
    return out


def _displacement_table_2d(L: int, alpha: float) -> np.ndarray:
    """G[dx, dy] for n = 2 by 4 x 4 midpoint subsampling of the source cell.

    Subsample midpoints sit at offsets (2k+1)/8 h from the cell corner, so
    the nearest sample to the singularity is sqrt(2) h/8 away even on the
    diagonal entry; the sample set is symmetric, making G even in each
    displacement coordinate and the kernel matrix exactly symmetric.
    """
    h = 2.0**-L
    g = gamma_alpha(alpha, 2)
    side = 1 << L
    offs = (np.arange(4, dtype=np.float64) + 0.5) / 4.0 - 0.5  # in units of h
    dx = np.arange(side, dtype=np.float64)[:, None, None, None]
    dy = np.arange(side, dtype=np.float64)[None, :, None, None]
    px = (dx + offs[None, None, :, None]) * h
    py = (dy + offs[None, None, None, :]) * h
    r = np.sqrt(px * px + py * py)
    vals = r ** (alpha - 2.0) / g
    return vals.mean(axis=(2, 3))


def kernel_matrix(L: int, n: int, alpha: float) -> np.ndarray:
    """Symmetric matrix of cell-pair kernel averages over the unit cube,
    row-major cell order: entry (i, j) = average over cell j of
    I_alpha(x_i - y) with x_i the center of cell i."""
    if n not in (1, 2):
        raise DomainError(f"dimension must be 1 or 2, got {n}")
    if not (0 < alpha < n):
        raise DomainError(f"alpha must lie in (0, n), got {alpha}")
    N = 1 << (n * L)
    if N * N > MAX_KERNEL_ENTRIES:
        raise DomainError(f"kernel matrix with {N} cells exceeds the size guard")
    if n == 1:
        G = _displacement_table_1d(L, alpha)
        idx = np.arange(N)
        return G[np.abs(idx[:, None] - idx[None, :])]
    G = _displacement_table_2d(L, alpha)
    side = 1 << L
    kx = np.arange(N) // side
    ky = np.arange(N) % side
    return G[np.abs(kx[:, None] - kx[None, :]), np.abs(ky[:, None] - ky[None, :])]


@dataclass
class CapacitySolution:
    """Solver output: corrected primal point and its certificates."""

    potential: StepFunction | None
    objective: float
    slack: float
    gap: float
    iterations: int
    converged: bool
    dual_value: float = 0.0


def _newton_refine(B_E, rhs, s, hn, lam, g, dual_val, max_steps=40):
    """Active-set Newton ascent on the dual from a stalled iterate.

    The projected gradient crawls when the constraint rows are nearly
    parallel (adjacent cells); Newton steps restricted to the free
    coordinates close the last digits of the duality gap quadratically.
    """
    pexp = 1.0 / (s - 1.0)
    for _ in range(max_steps):
        a = B_E.T @ lam
        ap = np.maximum(a, 0.0)
        phi = (ap / (s * hn)) ** pexp
        grad = rhs - B_E @ phi
        free = (lam > 0) | (grad > 0)
        if not free.any():
            break
        gf = grad[free]
        if float(np.linalg.norm(gf)) == 0.0:
            break
        d = np.zeros(a.size)
        pos = a > 0
        d[pos] = (ap[pos] / (s * hn)) ** (pexp - 1.0) / ((s - 1.0) * s * hn)
        Bf = B_E[free]
        H = (Bf * d[None, :]) @ Bf.T
        ridge = 1e-12 * max(float(np.trace(H)) / max(H.shape[0], 1), 1e-300)
        try:
            delta = np.linalg.solve(H + ridge * np.eye(H.shape[0]), gf)
        except np.linalg.LinAlgError:
            break
        t = 1.0
        improved = False
        for _ in range(40):
            lam_new = lam.copy()
            lam_new[free] = np.maximum(lam_new[free] + t * delta, 0.0)
            g_new = dual_val(lam_new)
            if g_new > g:
                lam, g = lam_new, g_new
                improved = True
                break
            t *= 0.5
        if not improved:
            break
    return lam, g


def _solve_obstacle(B_E: np.ndarray, rhs: np.ndarray, s: float, hn: float):
    """Dual projected-gradient ascent for min sum phi^s hn, B_E phi >= rhs.

    Returns (phi_corrected, objective, slack, gap, iterations, converged,
    dual_value). B_E has one row per constraint; rhs > 0. The objective is
    a certified upper bound (the corrected point is feasible); the best
    corrected primal seen along the iteration is the one returned.
    """
    m, N = B_E.shape
    sexp = s / (s - 1.0)
    pexp = 1.0 / (s - 1.0)

    def phi_of(lam):
        a = B_E.T @ lam
        np.maximum(a, 0.0, out=a)
        return (a / (s * hn)) ** pexp

    def dual_val(lam):
        a = B_E.T @ lam
        np.maximum(a, 0.0, out=a)
        return float(lam @ rhs - (s - 1.0) * hn * np.sum((a / (s * hn)) ** sexp))

    # positive start: scale so the first potential roughly reaches the rhs
    lam = np.full(m, 1.0 / max(m, 1))
    v = B_E @ phi_of(lam)
    pos = v > 0
    if pos.any():
        lam *= float(np.max(rhs[pos] / v[pos])) ** (s - 1.0)
    g = dual_val(lam)
    step = 1.0
    it = 0
    converged = False
    tiny = 1e-300
    best_primal = np.inf
    best_phi = None

    def consider(phi, v):
        nonlocal best_primal, best_phi
        scale = float(np.min(v / rhs))
        if scale > tiny:
            primal = float(np.sum(phi**s) * hn) / scale**s
            if primal < best_primal:
                best_primal = primal
                best_phi = phi / scale

    while it < MAX_ITERATIONS:
        it += 1
        phi = phi_of(lam)
        v = B_E @ phi
        grad = rhs - v
        consider(phi, v)
        if best_primal - g <= KKT_TOL * max(best_primal, 1.0):
            converged = True
            break
        accepted = False
        for _ in range(60):
            lam_new = np.maximum(lam + step * grad, 0.0)
            g_new = dual_val(lam_new)
            if g_new > g + 1e-12 * abs(g):
                lam = lam_new
                g = g_new
                step *= 1.3
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # float-precision stall; polish with second-order steps
            lam, g = _newton_refine(B_E, rhs, s, hn, lam, g, dual_val)
            phi = phi_of(lam)
            consider(phi, B_E @ phi)
            break
    if best_phi is None:
        # no scalable iterate at all; fall back to a crude feasible point
        phi = np.ones(N)
        v = B_E @ phi
        scale = float(np.min(v / rhs))
        best_phi = phi / scale
        best_primal = float(np.sum(best_phi**s) * hn)
    phi_corr = best_phi
    objective = best_primal
    slack = float(np.min(B_E @ phi_corr - rhs)) if m else 0.0
    gap = max(objective - g, 0.0)
    converged = converged or gap <= KKT_TOL * max(objective, 1.0)
    return phi_corr, objective, slack, gap, it, converged, g


class CapacityContext(SetFunctionEvaluator):
    """Riesz capacity cap_{alpha,s} on one grid, with memoized solves.

    Carries the kernel normalization, the displacement table, a per-bitmask
    cache of capacities (level sets of one function are nested, so a layer
    cake costs one solve per distinct layer), and the unit-ball capacity
    c_{alpha,s} used to normalize the capacitary maximal operator.
    """

    exact = False  # approximate within solver tolerance, not interval-certified
    strongly_subadditive = False

    def __init__(self, alpha, s, n, L):
        alpha = float(alpha)
        s = float(s)
        if n not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {n}")
        if not (0 < alpha < n):
            raise DomainError(f"alpha must lie in (0, n), got {alpha}")
        # The obstacle problem is a well-posed convex program for any s > 1;
        # the stricter requirement alpha*s < n only matters for the capacitary
        # maximal operator, which enforces it separately.
        if not (1 < s <= n / alpha):
            raise DomainError(f"s must lie in (1, n/alpha], got {s}")
        if not (1 <= L <= 8):
            raise DomainError(f"resolution must lie in 1..8, got {L}")
        self.alpha = alpha
        self.s = s
        self.n = n
        self.L = int(L)
        self.gamma_alpha = gamma_alpha(alpha, n)
        self.tol = KKT_TOL
        self.hn = (2.0**-L) ** n
        self._G = (
            _displacement_table_1d(self.L, alpha)
            if n == 1
            else _displacement_table_2d(self.L, alpha)
        )
        self._cache: dict[int, float] = {}
        self._solution_cache: dict[int, CapacitySolution] = {}
        self._c_unit: float | None = None
        self._c_unit_converged = True
        #: running count of solves that stopped outside the KKT gap tolerance
        self.nonconverged = 0
        #: running count of capacity reads backed by a non-converged solve;
        #: unlike `nonconverged` this also counts cache hits, so a consumer
        #: can bracket a computation and learn whether any value it used was
        #: uncertified, independent of cache warmth
        self.tainted_reads = 0

    # -- kernel rows --------------------------------------------------

    def _rows(self, rows: np.ndarray) -> np.ndarray:
        """Constraint rows B[rows, :] = h^n K[rows, :] over the full grid."""
        N = 1 << (self.n * self.L)
        if rows.size * N > MAX_KERNEL_ENTRIES:
            raise DomainError("constraint matrix exceeds the solver size guard")
        if self.n == 1:
            idx = np.arange(N)
            K = self._G[np.abs(rows[:, None] - idx[None, :])]
        else:
            side = 1 << self.L
            kx = np.arange(N) // side
            ky = np.arange(N) % side
            K = self._G[
                np.abs((rows // side)[:, None] - kx[None, :]),
                np.abs((rows % side)[:, None] - ky[None, :]),
            ]
        return K * self.hn

    # -- solves --------------------------------------------------------

    def solve(self, E: GridSet) -> CapacitySolution:
        """Full capacity solve for E, cached per occupancy pattern."""
        if E.n != self.n or E.L != self.L:
            raise DomainError("set grid differs from the capacity context")
        sol = self._solution_cache.get(E.bits)
        if sol is not None:
            if not sol.converged:
                self.tainted_reads += 1
            return sol
        if E.is_empty():
            sol = CapacitySolution(
                potential=StepFunction.zero(self.n, self.L),
                objective=0.0,
                slack=0.0,
                gap=0.0,
                iterations=0,
                converged=True,
            )
        else:
            rows = np.array(E.flats(), dtype=np.int64)
            B_E = self._rows(rows)
            rhs = np.ones(rows.size)
            phi, obj, slack, gap, it, conv, dual = _solve_obstacle(B_E, rhs, self.s, self.hn)
            if not conv:
                self.nonconverged += 1
            sol = CapacitySolution(
                potential=StepFunction(self.n, self.L, phi),
                objective=obj,
                slack=slack,
                gap=gap,
                iterations=it,
                converged=conv,
                dual_value=dual,
            )
        self._solution_cache[E.bits] = sol
        self._cache[E.bits] = sol.objective
        if not sol.converged:
            self.tainted_reads += 1
        return sol

    def capacity_of_bits(self, bits: int) -> float:
        v = self._cache.get(bits)
        if v is None:
            v = self.solve(GridSet(self.n, self.L, bits)).objective
        elif not self._solution_cache[bits].converged:
            self.tainted_reads += 1
        return v

    def evaluate(self, E: GridSet) -> float:
        if E.n != self.n or E.L != self.L:
            raise DomainError("set grid differs from the capacity context")
        return self.capacity_of_bits(E.bits)

    # -- unit ball -------------------------------------------------------

    def unit_ball_capacity(self) -> float:
        """cap_{alpha,s}(B(0,1)) discretized with this context's cell side.

        The ball lives on its own grid covering [-1,1]^n (2^(L+1) cells per
        axis, same cell side h); occupied cells are those meeting the closed
        ball, matching the discretization convention everywhere else.
        """
        if self._c_unit is not None:
            if not self._c_unit_converged:
                self.tainted_reads += 1
            return self._c_unit
        L, n = self.L, self.n
        h = 2.0**-L
        side = 1 << (L + 1)
        centers = (np.arange(side) + 0.5) * h - 1.0
        if n == 1:
            mindist = np.abs(centers) - h / 2.0
            occ = np.nonzero(mindist <= 1.0)[0]
            N = side
            idx = np.arange(N)
            K = self._G2_unit_1d()[np.abs(occ[:, None] - idx[None, :])]
        else:
            cx = np.repeat(centers, side)
            cy = np.tile(centers, side)
            mx = np.maximum(np.abs(cx) - h / 2.0, 0.0)
            my = np.maximum(np.abs(cy) - h / 2.0, 0.0)
            occ = np.nonzero(mx * mx + my * my <= 1.0)[0]
            N = side * side
            if occ.size * N > MAX_KERNEL_ENTRIES:
                raise DomainError(
                    "unit-ball capacity at this resolution exceeds the solver size guard"
                )
            kx = np.arange(N) // side
            ky = np.arange(N) % side
            G = self._G2_unit_2d()
            K = G[
                np.abs((occ // side)[:, None] - kx[None, :]),
                np.abs((occ % side)[:, None] - ky[None, :]),
            ]
        B_E = K * self.hn
        rhs = np.ones(occ.size)
        phi, obj, slack, gap, it, conv, dual = _solve_obstacle(B_E, rhs, self.s, self.hn)
        if not conv:
            self.nonconverged += 1
            self.tainted_reads += 1
        self._c_unit = obj
        self._c_unit_converged = conv
        return obj

    def _G2_unit_1d(self):
        # displacement table up to the doubled extent of the [-1,1] grid
        h = 2.0**-self.L
        g = self.gamma_alpha
        d = np.arange(1, 1 << (self.L + 1), dtype=np.float64)
        near = d * h - h / 2.0
        far = d * h + h / 2.0
        out = np.empty(1 << (self.L + 1))
        out[0] = 2.0 * (h / 2.0) ** self.alpha / (self.alpha * h * g)
        out[1:] = (far**self.alpha - near**self.alpha) / (self.alpha * h * g)
        return out

    def _G2_unit_2d(self):
        h = 2.0**-self.L
        g = self.gamma_alpha
        side = 1 << (self.L + 1)
        offs = (np.arange(4, dtype=np.float64) + 0.5) / 4.0 - 0.5
        dx = np.arange(side, dtype=np.float64)[:, None, None, None]
        dy = np.arange(side, dtype=np.float64)[None, :, None, None]
        px = (dx + offs[None, None, :, None]) * h
        py = (dy + offs[None, None, None, :]) * h
        r = np.sqrt(px * px + py * py)
        vals = r ** (self.alpha - 2.0) / g
        return vals.mean(axis=(2, 3))


def capacity(E: GridSet, params: CapacityContext) -> CapacitySolution:
    """Discretized Riesz capacity of E with a certified-upper-bound objective."""
    return params.solve(E)


def gamma_functional(f: StepFunction, params: CapacityContext) -> float:
    """inf ||phi||_s^s over potentials with I_alpha * phi >= f; upper bound."""
    if f.n != params.n or f.L != params.L:
        raise DomainError("function grid differs from the capacity context")
    sup = f.support()
    if sup.is_empty():
        return 0.0
    rows = np.array(sup.flats(), dtype=np.int64)
    B_E = params._rows(rows)
    rhs = f.dense()[rows]
    phi, obj, slack, gap, it, conv, dual = _solve_obstacle(B_E, rhs, params.s, params.hn)
    if not conv:
        params.nonconverged += 1
        params.tainted_reads += 1
    return obj


def choquet_wrt_capacity(f: StepFunction, params: CapacityContext) -> float:
    """Layer-cake integral of f against the capacity; one solve per layer,
    memoized in the context (level sets are nested)."""
    if f.n != params.n or f.L != params.L:
        raise DomainError("function grid differs from the capacity context")
    total = 0.0
    prev = 0.0
    for t in f.distinct_positive_values():
        t = float(t)
        total += (t - prev) * params.evaluate(f.level_set(t))
        prev = t
    return total
