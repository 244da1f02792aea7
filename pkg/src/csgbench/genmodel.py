"""Sparse-synergy random instances.

Each instance plants ``k`` disjoint template coalitions ``T_j`` with positive
weights ``w_j``. A coalition ``S`` is worth the sum of the weights of the
templates it fully contains, plus an independent Gaussian noise term
``xi(S) ~ N(0, sigma^2)``.

Noise is never stored. It is a pure function of ``(noise_seed, S)`` computed
by hashing the pair with splitmix64 and pushing the resulting uniform
through the inverse normal CDF, so every query for the same coalition
returns the same value and instances serialize as parameters only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import ndtri

from .core import MAX_AGENTS, full_mask, members

_M64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / (1 << 53)

PLACEMENTS = ("contiguous", "random", "disjoint-halves")


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN) & _M64
    x = ((x ^ (x >> 30)) * _MIX1) & _M64
    x = ((x ^ (x >> 27)) * _MIX2) & _M64
    return x ^ (x >> 31)


def _splitmix64_array(x: np.ndarray) -> np.ndarray:
    x = x + np.uint64(_GOLDEN)
    x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
    x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def noise(seed: int, mask: int, sigma: float) -> float:
    """Noise term for one coalition; deterministic in ``(seed, mask)``."""
    if sigma == 0:
        return 0.0
    h = _splitmix64(_splitmix64(seed & _M64) ^ mask)
    u = ((h >> 11) + 0.5) * _INV_2_53
    return sigma * float(ndtri(u))


def noise_array(seed: int, masks: np.ndarray, sigma: float) -> np.ndarray:
    """Vectorized :func:`noise`; bit-identical to the scalar version."""
    masks = np.asarray(masks, dtype=np.uint64)
    if sigma == 0:
        return np.zeros(masks.shape)
    key = np.uint64(_splitmix64(seed & _M64))
    h = _splitmix64_array(masks ^ key)
    u = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    return sigma * ndtri(u)


def noise_pairs(seeds: np.ndarray, masks: np.ndarray, sigma: float) -> np.ndarray:
    """Noise for paired ``(seed_i, mask_i)`` arrays, one value per pair."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    masks = np.asarray(masks, dtype=np.uint64)
    if sigma == 0:
        return np.zeros(np.broadcast(seeds, masks).shape)
    h = _splitmix64_array(masks ^ _splitmix64_array(seeds))
    u = ((h >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    return sigma * ndtri(u)


@dataclass(frozen=True)
class MarginReport:
    gamma_gap: float
    gamma_min: float
    W: float
    rhs: float
    satisfied_gap: bool
    satisfied_min: bool


def noise_ceiling(sigma: float, n: int) -> float:
    """``2 sigma sqrt(log 2n)``, the uniform noise bound of the analysis."""
    return 2.0 * sigma * math.sqrt(math.log(2 * n))


@dataclass(frozen=True)
class SynergyModel:
    """An instance of the sparse-synergy model; doubles as its value oracle."""

    n: int
    templates: tuple[int, ...]
    weights: tuple[float, ...]
    sigma: float
    noise_seed: int
    params: "GeneratorParams | None" = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "templates", tuple(int(t) for t in self.templates))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not 1 <= self.n <= MAX_AGENTS:
            raise ValueError(f"n must be in 1..{MAX_AGENTS}, got {self.n}")
        if len(self.templates) != len(self.weights):
            raise ValueError("one weight per template required")
        if len(self.templates) > self.n:
            raise ValueError("more templates than agents")
        seen = 0
        for t in self.templates:
            if t == 0:
                raise ValueError("templates must be nonempty")
            if t >> self.n:
                raise ValueError(f"template {members(t)} exceeds n={self.n}")
            if seen & t:
                raise ValueError("templates must be pairwise disjoint")
            seen |= t
        if any(not (w > 0 and math.isfinite(w)) for w in self.weights):
            raise ValueError("weights must be finite and strictly positive")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise ValueError("sigma must be finite and nonnegative")
        if not 0 <= self.noise_seed < 2**64:
            raise ValueError("noise_seed must fit in 64 bits")

    @property
    def k(self) -> int:
        return len(self.templates)

    def template_value(self, mask: int) -> float:
        """Noiseless part of the value: sum of weights of contained templates."""
        return float(sum(w for t, w in zip(self.templates, self.weights) if t & mask == t))

    def value(self, mask: int) -> float:
        if mask < 0 or mask >> self.n:
            raise ValueError(f"coalition {mask:#x} out of range for n={self.n}")
        if mask == 0:
            return 0.0
        return self.template_value(mask) + noise(self.noise_seed, mask, self.sigma)

    __call__ = value

    def value_table(self) -> np.ndarray:
        """Values of all ``2^n`` coalitions indexed by bitmask (entry 0 is 0)."""
        masks = np.arange(1 << self.n, dtype=np.uint64)
        vals = noise_array(self.noise_seed, masks, self.sigma)
        for t, w in zip(self.templates, self.weights):
            vals += w * ((masks & np.uint64(t)) == np.uint64(t))
        vals[0] = 0.0
        return vals


def eval_value(model: SynergyModel, mask: int) -> float:
    return model.value(mask)


@dataclass(frozen=True)
class GeneratorParams:
    n: int
    k: int = 2
    template_size: int | str = 2
    weight_range: tuple[float, float] = (2.0, 3.0)
    sigma: float = 0.0
    placement: str = "contiguous"
    seed: int = 0
    require_margin: bool = False
    weights: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "template_size": self.template_size,
            "weight_range": list(self.weight_range),
            "sigma": self.sigma,
            "placement": self.placement,
            "seed": self.seed,
            "require_margin": self.require_margin,
            "weights": None if self.weights is None else list(self.weights),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorParams":
        d = dict(d)
        d["weight_range"] = tuple(d["weight_range"])
        if d.get("weights") is not None:
            d["weights"] = tuple(d["weights"])
        return cls(**d)


class InfeasibleParams(ValueError):
    pass


_MAX_WEIGHT_ATTEMPTS = 100


def _place_templates(p: GeneratorParams, rng: np.random.Generator) -> list[int]:
    n = p.n
    if p.placement == "disjoint-halves":
        if p.k != 2:
            raise InfeasibleParams("disjoint-halves placement requires k=2")
        half = (n + 1) // 2
        if half == n:
            raise InfeasibleParams("disjoint-halves needs n >= 2")
        return [full_mask(half), full_mask(n) & ~full_mask(half)]

    size = p.template_size
    if not isinstance(size, int) or size < 1:
        raise InfeasibleParams(f"template_size must be a positive int, got {size!r}")
    if p.k * size > n:
        raise InfeasibleParams(
            f"k*template_size = {p.k}*{size} = {p.k * size} exceeds n = {n}")
    if p.placement == "contiguous":
        order = list(range(n))
    elif p.placement == "random":
        order = [int(a) for a in rng.permutation(n)]
    else:
        raise InfeasibleParams(f"unknown placement {p.placement!r}")
    return [sum(1 << a for a in order[j * size:(j + 1) * size]) for j in range(p.k)]


def generate(params: GeneratorParams) -> SynergyModel:
    """Draw a model from ``params``; the result is a pure function of them."""
    p = params
    if not 1 <= p.n <= MAX_AGENTS:
        raise InfeasibleParams(f"n must be in 1..{MAX_AGENTS}, got {p.n}")
    if p.k < 0 or p.k > p.n:
        raise InfeasibleParams(f"k must be in 0..n, got {p.k}")
    lo, hi = p.weight_range
    if not 0 < lo <= hi:
        raise InfeasibleParams(f"weight range must satisfy 0 < lo <= hi, got {p.weight_range}")
    if p.sigma < 0:
        raise InfeasibleParams("sigma must be nonnegative")

    rng = np.random.default_rng(p.seed)
    templates = _place_templates(p, rng)
    noise_seed = int(rng.integers(0, 2**63, dtype=np.int64))

    if p.weights is not None:
        if len(p.weights) != p.k:
            raise InfeasibleParams("explicit weights must have length k")
        model = SynergyModel(p.n, tuple(templates), tuple(p.weights), p.sigma, noise_seed, p)
        if p.require_margin and p.k and not margin_report(model).satisfied_min:
            raise InfeasibleParams("explicit weights violate the margin condition")
        return model

    for _ in range(_MAX_WEIGHT_ATTEMPTS):
        weights = tuple(float(w) for w in rng.uniform(lo, hi, size=p.k))
        model = SynergyModel(p.n, tuple(templates), weights, p.sigma, noise_seed, p)
        if not p.require_margin or p.k == 0 or margin_report(model).satisfied_min:
            return model
    raise InfeasibleParams(
        f"no weights in {p.weight_range} satisfied the margin condition "
        f"after {_MAX_WEIGHT_ATTEMPTS} attempts")


def margin_report(model: SynergyModel) -> MarginReport:
    if model.k == 0:
        raise ValueError("margin report needs at least one template")
    w = sorted(model.weights)
    gaps = [b - a for a, b in zip(w, w[1:]) if b > a]
    gamma_gap = min(gaps) if gaps else math.inf
    rhs = 2.0 * noise_ceiling(model.sigma, model.n)
    return MarginReport(
        gamma_gap=gamma_gap,
        gamma_min=w[0],
        W=w[-1],
        rhs=rhs,
        satisfied_gap=gamma_gap > rhs,
        satisfied_min=w[0] > rhs,
    )


@dataclass(frozen=True)
class Thresholds:
    Q1: float
    Q2: float
    epsilon: float


def quality_thresholds(model: SynergyModel, opt: float) -> Thresholds:
    """Quality levels used to score anytime traces.

    ``Q1 = opt - sigma sqrt(log 2n)`` is the level exact methods must reach;
    ``Q2 = (1 - eps) opt`` with ``eps = 2 sigma sqrt(log 2n) / min_j w_j``
    is the level the sparse methods are expected to reach.
    """
    if not math.isfinite(opt):
        raise ValueError("opt must be finite")
    gamma_min = min(model.weights) if model.k else 0.0
    if gamma_min <= 0:
        raise ValueError("quality thresholds need a positive minimal weight")
    slack = model.sigma * math.sqrt(math.log(2 * model.n))
    eps = 2.0 * slack / gamma_min
    return Thresholds(Q1=opt - slack, Q2=(1.0 - eps) * opt, epsilon=eps)


def template_structure_blocks(model: SynergyModel) -> list[int]:
    """Templates plus singletons for every agent outside all templates."""
    covered = 0
    for t in model.templates:
        covered |= t
    rest = full_mask(model.n) & ~covered
    return list(model.templates) + [1 << a for a in members(rest)]


def uniform_noise_holds(model: SynergyModel, masks: Sequence[int] | None = None) -> bool:
    """Whether every inspected coalition has ``|xi(S)| <= 2 sigma sqrt(log 2n)``.

    Inspects all nonempty coalitions when ``masks`` is omitted.
    """
    if masks is None:
        masks = np.arange(1, 1 << model.n, dtype=np.uint64)
    xi = noise_array(model.noise_seed, np.asarray(masks, dtype=np.uint64), model.sigma)
    return bool(np.all(np.abs(xi) <= noise_ceiling(model.sigma, model.n)))


__all__ = [
    "GeneratorParams", "InfeasibleParams", "MarginReport", "PLACEMENTS", "SynergyModel",
    "Thresholds", "eval_value", "generate", "margin_report", "noise", "noise_array",
    "noise_ceiling", "noise_pairs", "quality_thresholds", "template_structure_blocks",
    "uniform_noise_holds",
]
