"""LP-bound branch-and-bound on the set-partitioning formulation.

One binary column per candidate coalition, one coverage equality per agent.
Nodes are explored best-first by LP bound (FIFO among equal bounds) and the
search branches on the most fractional column, enqueueing the fix-to-1 child
before the fix-to-0 child. There are no rounding heuristics: a feasible
structure only appears when some node's relaxation is integral.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import CoalitionStructure, GuardViolation, popcount
from .lp import INT_TOL, LinearProgram, LpSolution, set_partition_lp, simplex_solve
from .trace import AnytimeTrace

MAX_FULL_POOL_AGENTS = 14
PRUNE_TOL = 1e-9


@dataclass(frozen=True)
class SetPartitionModel:
    n: int
    pool: tuple[int, ...]
    values: tuple[float, ...]
    size_cap: int | None = None

    def __post_init__(self):
        if len(self.pool) != len(self.values):
            raise ValueError("one value per candidate required")
        if len(set(self.pool)) != len(self.pool):
            raise ValueError("candidate pool has duplicates")
        if any(c <= 0 or c >> self.n for c in self.pool):
            raise ValueError("candidates must be nonempty subsets of the agents")

    @property
    def M(self) -> int:
        return len(self.pool)

    def lp(self) -> LinearProgram:
        return set_partition_lp(self.pool, self.values, self.n)


def build_model(oracle, size_cap: int | None = None) -> SetPartitionModel:
    """All nonempty coalitions up to ``size_cap`` agents, valued by ``oracle``."""
    n = oracle.n
    if size_cap is None and n > MAX_FULL_POOL_AGENTS:
        raise GuardViolation(
            "bnb-pool", f"full candidate pool supports n <= {MAX_FULL_POOL_AGENTS}, got {n}")
    cap = n if size_cap is None else size_cap
    if cap < 1:
        raise ValueError("size_cap must be at least 1")
    pool = tuple(S for S in range(1, 1 << n) if popcount(S) <= cap)
    values = tuple(float(oracle(S)) for S in pool)
    return SetPartitionModel(n, pool, values, size_cap)


@dataclass
class BnbNode:
    fixed_zero: frozenset[int]
    fixed_one: frozenset[int]
    lp_bound: float
    depth: int
    solution: LpSolution | None = field(default=None, repr=False)


@dataclass
class BnbStats:
    nodes_explored: int = 0
    nodes_pruned: int = 0
    root_bound: float = float("nan")
    root_gap: float = float("nan")
    budget_exhausted: bool = False
    lp_pivots: int = 0
    incumbent_history: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class BnbResult:
    best_value: float
    best: CoalitionStructure | None
    stats: BnbStats


def is_integral(x: np.ndarray) -> bool:
    return bool(np.all(np.abs(x - np.round(x)) <= INT_TOL))


def branch_select(x: Sequence[float], values: Sequence[float]) -> int:
    """Most fractional column: distance to 0.5, then larger value, then index."""
    x = np.asarray(x, dtype=float)
    frac = np.abs(x - np.round(x)) > INT_TOL
    if not frac.any():
        raise ValueError("branch_select called on an integral solution")
    best = None
    for i in np.flatnonzero(frac).tolist():
        key = (round(abs(x[i] - 0.5), 12), -values[i], i)
        if best is None or key < best:
            best = key
    return best[2]


def _structure_from(model: SetPartitionModel, x: np.ndarray) -> CoalitionStructure:
    blocks = [model.pool[i] for i in np.flatnonzero(x > 0.5)]
    return CoalitionStructure(model.n, tuple(blocks))


def _node_lp(base: LinearProgram, fixed_zero, fixed_one) -> LinearProgram:
    lo = base.lo.copy()
    hi = base.hi.copy()
    for i in fixed_zero:
        hi[i] = 0.0
    for i in fixed_one:
        lo[i] = 1.0
    return LinearProgram(base.c, base.A, base.senses, base.b, lo, hi)


def bnb_solve(model: SetPartitionModel, trace: AnytimeTrace | None = None,
              node_budget: int | None = None) -> BnbResult:
    """Best-first LP branch-and-bound.

    Each LP solve counts as one explored node. A node is fathomed when its
    relaxation is infeasible, its bound is within ``1e-9`` of the incumbent,
    or its LP optimum is integral (in which case it may improve the
    incumbent). If ``node_budget`` stops the search early the stats carry
    ``budget_exhausted=True`` and the best incumbent so far is returned.
    """
    if node_budget is not None and node_budget < 1:
        raise ValueError("node_budget must be positive")
    base = model.lp()
    stats = BnbStats()
    incumbent = -np.inf
    best_x = None
    seq = itertools.count()
    heap: list[tuple[float, int, BnbNode]] = []

    def evaluate(zero, one, depth) -> BnbNode | None:
        nonlocal incumbent, best_x
        sol = simplex_solve(_node_lp(base, zero, one))
        stats.nodes_explored += 1
        stats.lp_pivots += sol.pivot_count
        if sol.status == "infeasible":
            stats.nodes_pruned += 1
            return None
        if sol.status != "optimal":
            raise RuntimeError(f"node LP failed with status {sol.status} at depth {depth}")
        node = BnbNode(frozenset(zero), frozenset(one), sol.objective_value, depth, sol)
        if depth == 0:
            stats.root_bound = sol.objective_value
        if sol.objective_value <= incumbent + PRUNE_TOL:
            stats.nodes_pruned += 1
            return None
        if is_integral(sol.x):
            incumbent = sol.objective_value
            best_x = np.round(sol.x)
            stats.incumbent_history.append((stats.nodes_explored, incumbent))
            if trace is not None:
                trace.record(stats.nodes_explored, incumbent, "integral")
            stats.nodes_pruned += 1
            return None
        return node

    root = evaluate(frozenset(), frozenset(), 0)
    if root is not None:
        heapq.heappush(heap, (-root.lp_bound, next(seq), root))

    while heap:
        _, _, node = heapq.heappop(heap)
        if node.lp_bound <= incumbent + PRUNE_TOL:
            stats.nodes_pruned += 1
            continue
        j = branch_select(node.solution.x, model.values)
        node.solution = None
        children = ((node.fixed_zero, node.fixed_one | {j}),
                    (node.fixed_zero | {j}, node.fixed_one))
        for zero, one in children:
            if node_budget is not None and stats.nodes_explored >= node_budget:
                stats.budget_exhausted = True
                break
            child = evaluate(zero, one, node.depth + 1)
            if child is not None:
                heapq.heappush(heap, (-child.lp_bound, next(seq), child))
        if stats.budget_exhausted:
            break

    best = None
    if best_x is not None:
        best = _structure_from(model, best_x)
        # Report the exact sum of candidate values, not the LP's float objective.
        incumbent = float(sum(model.values[i] for i in np.flatnonzero(best_x > 0.5)))
        stats.root_gap = stats.root_bound - incumbent
    return BnbResult(incumbent, best, stats)


def root_gap(model: SetPartitionModel, integral_opt: float) -> float:
    sol = simplex_solve(model.lp())
    if sol.status != "optimal":
        raise ValueError(f"root relaxation is {sol.status}")
    return sol.objective_value - integral_opt
