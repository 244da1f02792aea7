"""Agents, coalitions and coalition structures.

A coalition is a plain ``int`` bitmask over agents ``0..n-1``; bit ``i`` set
means agent ``i`` belongs to the coalition. A :class:`CoalitionStructure`
is a partition of the full agent set into nonempty, pairwise disjoint blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

MAX_AGENTS = 20

Coalition = int
ValueFn = Callable[[int], float]


class InvalidStructure(ValueError):
    """Raised when a list of blocks is not a partition of the agent set."""


class GuardViolation(ValueError):
    """An instance is too large for the requested solver."""

    def __init__(self, guard: str, message: str):
        super().__init__(f"{guard}: {message}")
        self.guard = guard


def full_mask(n: int) -> int:
    return (1 << n) - 1


def coalition(agents: Iterable[int]) -> int:
    """Build a bitmask from agent indices."""
    mask = 0
    for a in agents:
        if a < 0:
            raise ValueError(f"negative agent index {a}")
        mask |= 1 << a
    return mask


def members(mask: int) -> list[int]:
    """Agent indices contained in ``mask``, ascending."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def validate_structure(blocks: Sequence[int], n: int) -> str | None:
    """Check that ``blocks`` partition ``{0, ..., n-1}``.

    Returns ``None`` when the blocks form a valid partition, otherwise a
    human-readable description of the first violated invariant.
    """
    seen = 0
    for b in blocks:
        if b == 0:
            return "empty block"
        if b >> n:
            return f"block {members(b)} has agents outside 0..{n - 1}"
        overlap = seen & b
        if overlap:
            return f"overlap on agent {members(overlap)[0]}"
        seen |= b
    missing = full_mask(n) & ~seen
    if missing:
        return f"agent {members(missing)[0]} uncovered"
    return None


@dataclass(frozen=True)
class CoalitionStructure:
    """A partition of ``n`` agents; blocks are kept sorted by bitmask."""

    n: int
    blocks: tuple[int, ...]

    def __post_init__(self):
        problem = validate_structure(self.blocks, self.n)
        if problem is not None:
            raise InvalidStructure(problem)
        object.__setattr__(self, "blocks", tuple(sorted(self.blocks)))

    @classmethod
    def from_lists(cls, n: int, blocks: Iterable[Iterable[int]]) -> "CoalitionStructure":
        return cls(n, tuple(coalition(b) for b in blocks))

    @classmethod
    def singletons(cls, n: int) -> "CoalitionStructure":
        return cls(n, tuple(1 << i for i in range(n)))

    def as_lists(self) -> list[list[int]]:
        return [members(b) for b in self.blocks]

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


def canonicalize(structure: CoalitionStructure) -> CoalitionStructure:
    # CoalitionStructure sorts on construction, so this is a fixed point.
    return CoalitionStructure(structure.n, tuple(sorted(structure.blocks)))


def structure_value(structure: CoalitionStructure, oracle: ValueFn) -> float:
    """Welfare of a structure: the sum of the oracle's value over its blocks.

    If ``oracle`` carries an ``n`` attribute it must match the structure's
    agent count.
    """
    n = getattr(oracle, "n", structure.n)
    if n != structure.n:
        raise InvalidStructure(
            f"structure has {structure.n} agents but oracle has {n}")
    return float(sum(oracle(b) for b in structure.blocks))


class TableOracle:
    """Value oracle backed by an explicit table of coalition values.

    ``values`` maps bitmasks to values; any coalition absent from the table
    is worth ``default``. The empty coalition is always worth 0.
    """

    def __init__(self, n: int, values: dict[int, float], default: float = 0.0):
        if not 1 <= n <= MAX_AGENTS:
            raise ValueError(f"n must be in 1..{MAX_AGENTS}, got {n}")
        self.n = n
        self.values = dict(values)
        self.default = default

    def __call__(self, mask: int) -> float:
        if mask >> self.n or mask < 0:
            raise ValueError(f"coalition {mask:#x} out of range for n={self.n}")
        if mask == 0:
            return 0.0
        return float(self.values.get(mask, self.default))


class CountingOracle:
    """Wraps any value oracle and counts the queries made through it."""

    def __init__(self, inner: ValueFn):
        self.inner = inner
        self.n = inner.n
        self.queries = 0

    def __call__(self, mask: int) -> float:
        self.queries += 1
        return self.inner(mask)
