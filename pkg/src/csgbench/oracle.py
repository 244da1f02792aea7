"""Exhaustive ground truth: every set partition, in restricted-growth order."""

from __future__ import annotations

from typing import Iterator

from .core import CoalitionStructure, GuardViolation

MAX_ORACLE_AGENTS = 12
_TIE_TOL = 1e-12


def _check_guard(n: int) -> None:
    if not 1 <= n <= MAX_ORACLE_AGENTS:
        raise GuardViolation(
            "oracle-size", f"exhaustive enumeration supports 1 <= n <= {MAX_ORACLE_AGENTS}, got {n}")


def _partition_blocks(n: int) -> Iterator[list[int]]:
    # Agent i joins an existing block or opens the next one, which is exactly
    # the restricted growth string a_i <= 1 + max(a_0..a_{i-1}). The yielded
    # list is reused; copy it if you keep it.
    blocks: list[int] = []

    def place(i: int):
        if i == n:
            yield blocks
            return
        bit = 1 << i
        for b in range(len(blocks)):
            blocks[b] |= bit
            yield from place(i + 1)
            blocks[b] ^= bit
        blocks.append(bit)
        yield from place(i + 1)
        blocks.pop()

    return place(0)


def enumerate_partitions(n: int) -> Iterator[CoalitionStructure]:
    """Yield each partition of ``{0..n-1}`` exactly once (Bell(n) in total)."""
    _check_guard(n)
    for blocks in _partition_blocks(n):
        yield CoalitionStructure(n, tuple(blocks))


def bell(n: int) -> int:
    """Bell number via the recurrence B(m+1) = sum_i C(m, i) B(i)."""
    from math import comb
    B = [1]
    for m in range(n):
        B.append(sum(comb(m, i) * B[i] for i in range(m + 1)))
    return B[n]


def brute_opt(oracle) -> tuple[float, CoalitionStructure]:
    """Maximum welfare over all partitions, found by exhaustive search.

    Every coalition is queried once up front. Ties (within ``1e-12``) go to
    the structure whose sorted block list is lexicographically smallest.
    """
    n = oracle.n
    _check_guard(n)
    table = [0.0] + [float(oracle(S)) for S in range(1, 1 << n)]
    best = float("-inf")
    best_key: tuple[int, ...] = ()
    for blocks in _partition_blocks(n):
        v = 0.0
        for b in blocks:
            v += table[b]
        if v > best + _TIE_TOL:
            best, best_key = v, tuple(sorted(blocks))
        elif v >= best - _TIE_TOL:
            key = tuple(sorted(blocks))
            if key < best_key:
                best_key = key
            best = max(best, v)
    return best, CoalitionStructure(n, best_key)


def brute_opt_capped(oracle, max_block: int) -> float:
    """Best welfare over partitions whose blocks have at most ``max_block`` agents."""
    n = oracle.n
    _check_guard(n)
    table = [0.0] + [float(oracle(S)) for S in range(1, 1 << n)]
    best = float("-inf")
    for blocks in _partition_blocks(n):
        if all(bin(b).count("1") <= max_block for b in blocks):
            best = max(best, sum(table[b] for b in blocks))
    return best
