"""Size-monotone subset dynamic programming for coalition structure generation.

Subsets are finalized in order of increasing size (ascending bitmask within a
size). Finalizing ``S`` queries ``v(S)`` once and sets

    f(S) = max(v(S), max_{S' proper, nonempty} f(S') + f(S \\ S'))

so every proper subset of a finalized set is already final. After each size
level the solver turns the partial table into a feasible structure for the
whole agent set and logs it, which is what makes it an anytime algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .core import CoalitionStructure, CountingOracle, GuardViolation, full_mask, popcount
from .trace import AnytimeTrace

MAX_DP_AGENTS = 16


@dataclass
class DpTable:
    """Partial or complete DP state.

    ``f[S]`` is the best partition value of ``S`` and ``split[S]`` one block of
    such a partition (``S`` itself when keeping ``S`` whole is optimal).
    Entries are meaningful only for sizes ``<= levels_done``.
    ``processed_count`` includes the empty set, which is final from the start.
    """

    n: int
    f: list[float]
    split: list[int]
    levels_done: int = 0
    processed_count: int = 1
    processed: np.ndarray = field(default=None, repr=False)

    @classmethod
    def empty(cls, n: int) -> "DpTable":
        size = 1 << n
        processed = np.zeros(size, dtype=bool)
        processed[0] = True
        return cls(n, [0.0] * size, [0] * size, 0, 1, processed)

    def is_processed(self, mask: int) -> bool:
        return popcount(mask) <= self.levels_done


@dataclass
class DpResult:
    opt: float
    best: CoalitionStructure
    table: DpTable


def subsets_by_size(n: int) -> list[list[int]]:
    levels: list[list[int]] = [[] for _ in range(n + 1)]
    for mask in range(1 << n):
        levels[popcount(mask)].append(mask)
    return levels


def reconstruct(table: DpTable, S: int) -> list[int]:
    """Blocks of an optimal partition of ``S`` according to ``table``."""
    if S == 0:
        return []
    if not table.is_processed(S):
        raise ValueError(f"subset {S:#x} has not been processed")
    out = []
    stack = [S]
    while stack:
        T = stack.pop()
        b = table.split[T]
        if b == T:
            out.append(T)
        else:
            stack.append(b)
            stack.append(T ^ b)
    return sorted(out)


def _greedy_cover(table: DpTable, max_size: int, order: np.ndarray) -> tuple[float, list[int]]:
    """One greedy cover of the agent set from subsets of size <= max_size.

    ``order`` lists those subsets by decreasing f, then increasing size, then
    increasing bitmask. Scanning it once and keeping every subset still
    contained in the uncovered set reproduces the repeated-argmax rule. As
    soon as the uncovered set is itself processed, its recorded optimum
    finishes the cover.
    """
    f = table.f
    uncovered = full_mask(table.n)
    value = 0.0
    blocks: list[int] = []
    for S in order.tolist():
        if popcount(uncovered) <= max_size:
            break
        if S & uncovered == S:
            blocks.extend(reconstruct(table, S))
            value += f[S]
            uncovered ^= S
    if uncovered:
        blocks.extend(reconstruct(table, uncovered))
        value += f[uncovered]
    return value, blocks


def _cover_order(table: DpTable, max_size: int, levels: list[list[int]]) -> np.ndarray:
    masks = np.array([S for ell in range(1, max_size + 1) for S in levels[ell]], dtype=np.int64)
    fvals = np.array([table.f[S] for S in masks.tolist()])
    sizes = np.array([popcount(S) for S in masks.tolist()])
    return masks[np.lexsort((masks, sizes, -fvals))]


def dp_incumbent(table: DpTable, max_size: int) -> CoalitionStructure:
    """Best greedy cover available once all subsets up to ``max_size`` are final.

    Mirrors what :func:`dp_solve` logs at the end of size level ``max_size``:
    the best of the greedy covers built at levels ``1..max_size``.
    """
    if not 1 <= max_size <= table.levels_done:
        raise ValueError(
            f"max_size must be in 1..{table.levels_done} (levels processed), got {max_size}")
    levels = subsets_by_size(table.n)
    best_val, best_blocks = -np.inf, None
    for ell in range(1, max_size + 1):
        val, blocks = _greedy_cover(table, ell, _cover_order(table, ell, levels))
        if val > best_val:
            best_val, best_blocks = val, blocks
    return CoalitionStructure(table.n, tuple(best_blocks))


def dp_incumbent_exact(table: DpTable, max_size: int) -> tuple[float, CoalitionStructure]:
    """Best structure whose blocks all lie inside processed subsets.

    An analysis aid rather than part of the solver: it runs a second subset
    DP restricted to blocks of size ``<= max_size`` and so costs ``O(3^n)``.
    """
    if not 1 <= max_size <= table.levels_done:
        raise ValueError(f"max_size must be in 1..{table.levels_done}, got {max_size}")
    n = table.n
    f = table.f
    g = [0.0] * (1 << n)
    choice = [0] * (1 << n)
    for S in range(1, 1 << n):
        low = S & -S
        rest = S ^ low
        best, pick = -np.inf, 0
        r = rest
        while True:
            B = low | r
            if popcount(B) <= max_size:
                val = f[B] + g[S ^ B]
                if val > best:
                    best, pick = val, B
            if r == 0:
                break
            r = (r - 1) & rest
        g[S] = best
        choice[S] = pick
    blocks = []
    S = full_mask(n)
    while S:
        blocks.extend(reconstruct(table, choice[S]))
        S ^= choice[S]
    return g[full_mask(n)], CoalitionStructure(n, tuple(blocks))


def _check_closed(processed: np.ndarray, n: int) -> None:
    idx = np.arange(processed.size)
    for b in range(n):
        sub = idx & ~(1 << b)
        if np.any(processed & ~processed[sub]):
            raise AssertionError("processed set is not closed under taking subsets")


def dp_solve(oracle, trace: AnytimeTrace | None = None, check_closure: bool = True) -> DpResult:
    """Exact optimum by subset DP, logging an incumbent after every size level.

    ``oracle`` is any value function with an ``n`` attribute. Work is
    measured in processed subsets (the empty set counts as processed from
    the start, so a full run ends at ``2^n``); each nonempty subset costs one
    oracle query.
    """
    n = oracle.n
    if n > MAX_DP_AGENTS:
        raise GuardViolation("dp-size", f"dp_solve supports n <= {MAX_DP_AGENTS}, got {n}")
    table = DpTable.empty(n)
    f, split = table.f, table.split
    levels = subsets_by_size(n)
    incumbent = -np.inf

    for ell in range(1, n + 1):
        for S in levels[ell]:
            vS = float(oracle(S))
            low = S & -S
            rest = S ^ low
            best, best_block = -np.inf, 0
            if rest:
                # Splits {low|r, rest^r}; r ranges over proper subsets of rest.
                r = (rest - 1) & rest
                while True:
                    B = low | r
                    C = rest ^ r
                    val = f[B] + f[C]
                    if val > best:
                        best = val
                        best_block = B if B < C else C
                    elif val == best:
                        best_block = min(best_block, B, C)
                    if r == 0:
                        break
                    r = (r - 1) & rest
            if vS >= best:
                f[S], split[S] = vS, S
            else:
                f[S], split[S] = best, best_block
        table.levels_done = ell
        table.processed_count += len(levels[ell])
        table.processed[levels[ell]] = True
        if check_closure:
            _check_closed(table.processed, n)

        value, _ = _greedy_cover(table, ell, _cover_order(table, ell, levels))
        incumbent = max(incumbent, value)
        if trace is not None:
            trace.record(table.processed_count, incumbent, f"level_{ell}")

    N = full_mask(n)
    best = CoalitionStructure(n, tuple(reconstruct(table, N)))
    return DpResult(f[N], best, table)


def crossing_count(n: int, level: int) -> int:
    """Processed-subset count once every subset of size <= level is final."""
    return sum(comb(n, ell) for ell in range(level + 1))


def solve_counted(oracle, trace_id: str = "dp") -> tuple[DpResult, AnytimeTrace]:
    counting = CountingOracle(oracle)
    trace = AnytimeTrace(trace_id, "subsets_processed", counting)
    return dp_solve(counting, trace), trace
