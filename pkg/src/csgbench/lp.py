"""Dense bounded-variable primal simplex.

Solves ``max c.x  s.t.  A x (<=|=|>=) b,  lo <= x <= hi`` with a two-phase
method on a full tableau. Nonbasic variables sit at one of their bounds, so
the ``[0, 1]`` boxes of set-partitioning relaxations never become explicit
rows. Entering variables are chosen by the Dantzig rule; after a degenerate
pivot the next choice falls back to Bland's rule (lowest eligible index),
which rules out cycling. Ratio-test ties always go to the lowest variable
index, so the pivot sequence is a deterministic function of the input.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

FEAS_TOL = 1e-8
INT_TOL = 1e-6
PIVOT_TOL = 1e-11
_COST_TOL = 1e-9
_DEGENERATE_STEP = 1e-12
MAX_PIVOTS = 10**6

SENSES = ("<=", "=", ">=")


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """``max c.x`` subject to ``A x (sense) b`` and ``lo <= x <= hi``."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple[str, ...]
    b: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.asarray(self.b, dtype=float)
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if A.size == 0:
            A = A.reshape(len(b), len(c))
        m, nv = A.shape
        if c.shape != (nv,) or b.shape != (m,) or lo.shape != (nv,) or hi.shape != (nv,):
            raise ValueError(
                f"dimension mismatch: A is {A.shape}, c {c.shape}, b {b.shape}, "
                f"lo {lo.shape}, hi {hi.shape}")
        if len(self.senses) != m or any(s not in SENSES for s in self.senses):
            raise ValueError(f"need one sense from {SENSES} per row")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("variable bounds must be finite")
        if np.any(lo > hi):
            raise ValueError("lower bound exceeds upper bound")
        for name, arr in (("c", c), ("A", A), ("b", b), ("lo", lo), ("hi", hi)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "senses", tuple(self.senses))

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape


@dataclass(eq=False)
class LpSolution:
    status: str
    x: np.ndarray
    objective_value: float
    pivot_count: int
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Working state of one solve. Columns: structural, slack, artificial."""

    def __init__(self, lp: LinearProgram):
        m, nv = lp.shape
        slack_rows = [i for i, s in enumerate(lp.senses) if s != "="]
        ns = len(slack_rows)
        S = np.zeros((m, ns))
        for j, i in enumerate(slack_rows):
            S[i, j] = 1.0 if lp.senses[i] == "<=" else -1.0
        A_full = np.hstack([lp.A, S])
        self.nv, self.ns, self.m = nv, ns, m
        self.n_real = nv + ns
        self.lo = np.concatenate([lp.lo, np.zeros(ns), np.zeros(m)])
        self.hi = np.concatenate([lp.hi, np.full(ns, np.inf), np.full(m, np.inf)])
        self.x = self.lo.copy()
        self.at_upper = np.zeros(self.n_real + m, dtype=bool)

        resid = lp.b - A_full @ self.x[:self.n_real]
        self.sign = np.where(resid >= 0, 1.0, -1.0)
        self.T = np.hstack([self.sign[:, None] * A_full, np.eye(m)])
        self.A_full = A_full
        self.basis = list(range(self.n_real, self.n_real + m))
        self.is_basic = np.zeros(self.n_real + m, dtype=bool)
        self.is_basic[self.basis] = True
        self.xB = np.abs(resid)
        self.pivots = 0

    def run(self, cost: np.ndarray, budget: int) -> str:
        bland = False
        T = self.T
        while True:
            if self.pivots >= budget:
                return "iteration_limit"
            d = cost - cost[self.basis] @ T
            movable = (~self.is_basic) & (self.hi > self.lo)
            up = movable & ~self.at_upper & (d > _COST_TOL)
            down = movable & self.at_upper & (d < -_COST_TOL)
            eligible = up | down
            if not eligible.any():
                return "optimal"
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                score = np.where(eligible, np.abs(d), -1.0)
                q = int(np.argmax(score))
            direction = 1.0 if up[q] else -1.0

            delta = -direction * T[:, q]
            basis = np.asarray(self.basis)
            lB = self.lo[basis]
            uB = self.hi[basis]
            limits = np.full(self.m, np.inf)
            dec = delta < -PIVOT_TOL
            inc = delta > PIVOT_TOL
            limits[dec] = (self.xB[dec] - lB[dec]) / -delta[dec]
            with np.errstate(invalid="ignore"):
                limits[inc] = (uB[inc] - self.xB[inc]) / delta[inc]
            np.maximum(limits, 0.0, out=limits)

            t_row = limits.min() if self.m else np.inf
            t_flip = self.hi[q] - self.lo[q]
            self.pivots += 1

            if t_flip <= t_row:
                if not np.isfinite(t_flip):
                    return "unbounded"
                self.xB += delta * t_flip
                self.at_upper[q] = not self.at_upper[q]
                self.x[q] = self.hi[q] if self.at_upper[q] else self.lo[q]
                bland = t_flip <= _DEGENERATE_STEP
                continue
            if not np.isfinite(t_row):
                return "unbounded"

            ties = np.flatnonzero(limits <= t_row + _DEGENERATE_STEP)
            r = int(ties[np.argmin(basis[ties])])
            pivot = T[r, q]
            if abs(pivot) < PIVOT_TOL:
                return "numerically_singular"

            self.xB += delta * t_row
            leaving = self.basis[r]
            if delta[r] < 0:
                self.x[leaving] = self.lo[leaving]
                self.at_upper[leaving] = False
            else:
                self.x[leaving] = self.hi[leaving]
                self.at_upper[leaving] = True
            entering_value = self.x[q] + direction * t_row

            T[r] /= pivot
            col = T[:, q].copy()
            col[r] = 0.0
            T -= np.outer(col, T[r])
            self.basis[r] = q
            self.is_basic[leaving] = False
            self.is_basic[q] = True
            self.at_upper[q] = False
            self.xB[r] = entering_value
            bland = t_row <= _DEGENERATE_STEP

    def values(self) -> np.ndarray:
        x = self.x.copy()
        x[self.basis] = self.xB
        return x


def simplex_solve(lp: LinearProgram, max_pivots: int = MAX_PIVOTS) -> LpSolution:
    """Solve ``lp`` to optimality, or report why not.

    The returned status is one of ``optimal``, ``infeasible``, ``unbounded``,
    ``numerically_singular`` or ``iteration_limit``. An optimal solution is
    re-verified against the original constraints before it is returned; if
    roundoff pushed it outside the feasibility tolerance the status is
    ``numerically_singular`` instead of a silently wrong answer.
    """
    m, nv = lp.shape
    tab = _Tableau(lp)
    n_all = tab.n_real + m
    empty = np.zeros(nv)

    phase1 = np.zeros(n_all)
    phase1[tab.n_real:] = -1.0
    status = tab.run(phase1, max_pivots)
    if status != "optimal":
        return LpSolution(status, empty, float("nan"), tab.pivots)
    scale = max(1.0, float(np.abs(lp.b).max(initial=0.0)))
    if tab.values()[tab.n_real:].sum() > FEAS_TOL * scale:
        return LpSolution("infeasible", empty, float("nan"), tab.pivots)

    tab.hi[tab.n_real:] = 0.0
    art_basic = [r for r, j in enumerate(tab.basis) if j >= tab.n_real]
    tab.xB[art_basic] = 0.0

    phase2 = np.zeros(n_all)
    phase2[:nv] = lp.c
    status = tab.run(phase2, max_pivots)
    x_all = tab.values()
    x = x_all[:nv]
    if status != "optimal":
        return LpSolution(status, x, float("nan"), tab.pivots)

    row_act = tab.A_full @ x_all[:tab.n_real]
    resid = np.abs(row_act - lp.b)
    bound_viol = np.maximum(lp.lo - x, x - lp.hi)
    if resid.max(initial=0.0) > FEAS_TOL * scale or bound_viol.max(initial=0.0) > 1e-9:
        return LpSolution("numerically_singular", x, float("nan"), tab.pivots)
    x = np.clip(x, lp.lo, lp.hi)

    B_inv = tab.T[:, tab.n_real:] * tab.sign[None, :]
    duals = phase2[tab.basis] @ B_inv
    reduced = lp.c - duals @ lp.A
    return LpSolution("optimal", x, float(lp.c @ x), tab.pivots, duals, reduced)


def dual_bound(lp: LinearProgram, sol: LpSolution) -> float:
    """Lagrangian upper bound ``y.b + sum_j max(d_j lo_j, d_j hi_j)``.

    Valid for any row multipliers with the right signs (nonnegative on
    ``<=`` rows, nonpositive on ``>=`` rows), so it bounds the primal
    optimum from above; at an optimal basis the two coincide.
    """
    y = sol.duals
    d = lp.c - y @ lp.A
    for yi, sense in zip(y, lp.senses):
        if (sense == "<=" and yi < -FEAS_TOL) or (sense == ">=" and yi > FEAS_TOL):
            raise ValueError("duals have the wrong sign for a valid bound")
    return float(y @ lp.b + np.maximum(d * lp.lo, d * lp.hi).sum())


def fix_variable(lp: LinearProgram, index: int, value: int) -> LinearProgram:
    """A copy of ``lp`` with variable ``index`` pinned to ``value``."""
    if not 0 <= index < lp.shape[1]:
        raise IndexError(f"variable index {index} out of range 0..{lp.shape[1] - 1}")
    if value not in (0, 1):
        raise ValueError("variables are fixed to 0 or 1")
    lo = lp.lo.copy()
    hi = lp.hi.copy()
    lo[index] = hi[index] = float(value)
    return replace(lp, lo=lo, hi=hi)


def set_partition_lp(pool: Sequence[int], values: Sequence[float], n: int) -> LinearProgram:
    """Relaxation of the set-partitioning program over candidate coalitions."""
    M = len(pool)
    A = np.zeros((n, M))
    for i, mask in enumerate(pool):
        for a in range(n):
            if mask >> a & 1:
                A[a, i] = 1.0
    return LinearProgram(
        c=np.asarray(values, dtype=float), A=A, senses=("=",) * n,
        b=np.ones(n), lo=np.zeros(M), hi=np.ones(M))
