"""Sparse relaxations: greedy max-value selection and an l1-penalized LP.

Both solvers work over an explicit pool of candidate coalitions and keep an
incidence vector over that pool. Feasibility is kept by only accepting
candidates disjoint from those already chosen; agents left uncovered at the
end become singletons.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from operator import or_
from typing import Sequence

import numpy as np

from .core import CoalitionStructure, GuardViolation, full_mask, members, popcount
from .genmodel import SynergyModel, noise_ceiling
from .lp import LinearProgram, simplex_solve
from .trace import AnytimeTrace

MAX_FULL_POOL_AGENTS = 16


@dataclass(frozen=True)
class CandidatePool:
    candidates: tuple[int, ...]
    values: tuple[float, ...]
    size_cap: int | None = None
    kind: str = "full"

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("candidate pool is empty")
        if len(self.candidates) != len(self.values):
            raise ValueError("one value per candidate required")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("candidate pool has duplicates")
        if any(c <= 0 for c in self.candidates):
            raise ValueError("candidates must be nonempty")

    @property
    def M(self) -> int:
        return len(self.candidates)

    def lookup(self) -> dict[int, float]:
        return dict(zip(self.candidates, self.values))


def full_pool(oracle, size_cap: int | None = None) -> CandidatePool:
    """Every nonempty coalition with at most ``size_cap`` agents."""
    n = oracle.n
    if n > MAX_FULL_POOL_AGENTS:
        raise GuardViolation("sparse-pool", f"full pools support n <= {MAX_FULL_POOL_AGENTS}, got {n}")
    cap = n if size_cap is None else size_cap
    cands = tuple(S for S in range(1, 1 << n) if popcount(S) <= cap)
    return CandidatePool(cands, tuple(float(oracle(S)) for S in cands), size_cap, "full")


def planted_pool(model: SynergyModel, oracle=None, distractors: int | None = None,
                 seed: int = 0) -> CandidatePool:
    """Polynomial-size pool: the templates, their pairwise unions and their
    full union, all singletons and pairs, plus ``distractors`` uniformly
    random coalitions (``n^2`` by default).

    This is the regime the sparse methods are meant for, where a candidate
    family containing the synergy patterns is handed to the solver and the
    pool size grows polynomially in ``n``.
    """
    oracle = model if oracle is None else oracle
    n = model.n
    if distractors is None:
        distractors = n * n
    rng = np.random.default_rng(seed)
    cands: dict[int, None] = {}
    ts = model.templates
    for i, t in enumerate(ts):
        cands[t] = None
        for u in ts[i + 1:]:
            cands[t | u] = None
    if ts:
        cands[reduce(or_, ts)] = None
    for a in range(n):
        cands[1 << a] = None
    for a in range(n):
        for b in range(a + 1, n):
            cands[(1 << a) | (1 << b)] = None
    for S in rng.integers(1, 1 << n, size=distractors).tolist():
        cands[int(S)] = None
    order = tuple(sorted(cands))
    return CandidatePool(order, tuple(float(oracle(S)) for S in order), None, "planted")


@dataclass
class SparseSelection:
    chosen: list[int]
    incidence: np.ndarray
    iterations: int
    candidate_evals: int = 0


@dataclass
class SparseResult:
    structure: CoalitionStructure
    selection: SparseSelection
    value: float


def residual_agents(selection: SparseSelection, pool: CandidatePool, n: int) -> int:
    covered = 0
    for i in selection.chosen:
        covered |= pool.candidates[i]
    return full_mask(n) & ~covered


def _singleton_values(n: int, pool: CandidatePool, oracle) -> list[float]:
    cached = pool.lookup()
    return [cached[1 << a] if (1 << a) in cached else float(oracle(1 << a)) for a in range(n)]


def _structure(n: int, pool: CandidatePool, chosen: Sequence[int]) -> CoalitionStructure:
    covered = 0
    blocks = []
    for i in chosen:
        blocks.append(pool.candidates[i])
        covered |= pool.candidates[i]
    blocks.extend(1 << a for a in members(full_mask(n) & ~covered))
    return CoalitionStructure(n, tuple(blocks))


def greedy_solve(oracle, pool: CandidatePool, trace: AnytimeTrace | None = None) -> SparseResult:
    """Repeatedly take the most valuable candidate disjoint from earlier picks.

    Ties go to the smaller coalition, then the smaller bitmask. The loop
    stops once every agent is covered or no remaining candidate has positive
    value. Each scan of the remaining candidates adds to ``candidate_evals``;
    there are at most ``n`` scans, so the total never exceeds ``n * M``.

    One trace record is written per accepted candidate, carrying the value
    of (chosen coalitions + singletons). The trace keeps the running
    maximum of those values; the returned structure is the final one.
    """
    n = oracle.n
    masks = np.asarray(pool.candidates, dtype=np.int64)
    vals = np.asarray(pool.values, dtype=float)
    sizes = np.array([popcount(c) for c in pool.candidates])
    order = np.lexsort((masks, sizes, -vals))
    single = _singleton_values(n, pool, oracle)

    chosen: list[int] = []
    covered = 0
    evals = 0
    chosen_value = 0.0
    best_seen = -np.inf
    full = full_mask(n)

    def current_value() -> float:
        return chosen_value + sum(single[a] for a in members(full & ~covered))

    while covered != full:
        avail = (masks[order] & covered) == 0
        evals += int(avail.sum())
        if not avail.any():
            break
        i = int(order[np.argmax(avail)])
        if vals[i] <= 0:
            break
        chosen.append(i)
        covered |= int(masks[i])
        chosen_value += vals[i]
        best_seen = max(best_seen, current_value())
        if trace is not None:
            trace.record(evals, best_seen, f"pick_{len(chosen)}")

    if not chosen and trace is not None:
        trace.record(evals, current_value(), "singletons")
    if evals > n * pool.M:
        raise AssertionError(f"greedy used {evals} candidate evaluations > n*M = {n * pool.M}")

    incidence = np.zeros(pool.M, dtype=np.int8)
    incidence[chosen] = 1
    sel = SparseSelection(chosen, incidence, len(chosen), evals)
    return SparseResult(_structure(n, pool, chosen), sel, float(current_value()))


def default_lambda(model: SynergyModel) -> float:
    return noise_ceiling(model.sigma, model.n)


def l1_solve(oracle, pool: CandidatePool, lam: float,
             trace: AnytimeTrace | None = None) -> SparseResult:
    """Penalized packing LP followed by threshold rounding.

    Solves ``max sum_i x_i (v_i - lam)`` over ``x in [0,1]^M`` with each agent
    covered at most once, then scans candidates by decreasing ``x_i`` (ties:
    larger value, then lower index) and keeps each one with ``x_i >= 0.5``
    that is disjoint from those already kept.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    n = oracle.n
    M = pool.M
    A = np.zeros((n, M))
    for i, c in enumerate(pool.candidates):
        for a in members(c):
            A[a, i] = 1.0
    vals = np.asarray(pool.values, dtype=float)
    lp = LinearProgram(vals - lam, A, ("<=",) * n, np.ones(n), np.zeros(M), np.ones(M))
    sol = simplex_solve(lp)
    if sol.status != "optimal":
        raise RuntimeError(f"l1 relaxation failed with status {sol.status} (M={M}, lambda={lam})")

    x = sol.x
    order = sorted(range(M), key=lambda i: (-x[i], -vals[i], i))
    chosen = []
    covered = 0
    for i in order:
        if x[i] < 0.5:
            break
        c = pool.candidates[i]
        if c & covered == 0:
            chosen.append(i)
            covered |= c
    single = _singleton_values(n, pool, oracle)
    value = float(sum(vals[i] for i in chosen)
                  + sum(single[a] for a in members(full_mask(n) & ~covered)))
    if trace is not None:
        trace.record(M, value, "rounded")
    incidence = np.zeros(M, dtype=np.int8)
    incidence[chosen] = 1
    sel = SparseSelection(chosen, incidence, len(chosen), M)
    return SparseResult(_structure(n, pool, chosen), sel, value)
