"""Anytime races, threshold crossings, concentration checks and growth fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import bnb, dp, sparse
from .core import CountingOracle, GuardViolation, members
from .genmodel import SynergyModel, margin_report, noise_ceiling, noise_pairs, quality_thresholds
from .trace import AnytimeTrace, TraceRecord

FORMAT_VERSION = 1
REACH_TOL = 1e-9
SOLVERS = ("dp", "bnb", "greedy", "l1")


def first_reaching(trace: AnytimeTrace, q: float) -> TraceRecord | None:
    for rec in trace.records:
        if rec.incumbent >= q - REACH_TOL:
            return rec
    return None


def time_to_threshold(trace: AnytimeTrace, q: float) -> int | None:
    """Smallest work-unit count at which the incumbent reaches ``q``.

    ``None`` means the trace never got there.
    """
    rec = first_reaching(trace, q)
    return None if rec is None else rec.work_units


@dataclass
class SolverRun:
    name: str
    trace: AnytimeTrace | None = None
    final_value: float | None = None
    native_work: int | None = None
    oracle_queries: int | None = None
    structure: list[list[int]] | None = None
    error: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class RaceReport:
    model: SynergyModel
    opt: float | None
    thresholds: dict | None
    runs: dict[str, SolverRun]
    crossings: dict[str, dict]
    verdict: str
    config: dict

    def to_dict(self) -> dict:
        m = self.model
        mr = margin_report(m) if m.k else None
        solvers = {}
        for name, run in self.runs.items():
            solvers[name] = {
                "work_unit_kind": run.trace.work_unit_kind if run.trace else None,
                "final_value": run.final_value,
                "native_work": run.native_work,
                "oracle_queries": run.oracle_queries,
                "structure": run.structure,
                "error": run.error,
                "extra": run.extra,
                "time_to_threshold": self.crossings.get(name),
                "trace": [
                    {"work_units": r.work_units, "wall_ns": r.wall_ns,
                     "incumbent": r.incumbent, "event": r.event,
                     "oracle_queries": r.oracle_queries}
                    for r in (run.trace.records if run.trace else [])
                ],
            }
        return {
            "format_version": FORMAT_VERSION,
            "instance": {
                "n": m.n,
                "templates": [members(t) for t in m.templates],
                "weights": list(m.weights),
                "sigma": m.sigma,
                "noise_seed": m.noise_seed,
                "margin_satisfied": None if mr is None else mr.satisfied_min,
            },
            "config": self.config,
            "opt": self.opt,
            "thresholds": self.thresholds,
            "solvers": solvers,
            "verdict": self.verdict,
        }


def _crossing(trace: AnytimeTrace, q: float) -> dict:
    rec = first_reaching(trace, q)
    if rec is None:
        return {"reached": False, "work_units": None, "oracle_queries": None}
    return {"reached": True, "work_units": rec.work_units, "oracle_queries": rec.oracle_queries}


def separation_verdict(crossings: dict[str, dict]) -> str:
    """``separated`` iff greedy hits Q2 using fewer value queries than either
    exact solver needs to hit Q1 (or that solver never hits Q1)."""
    g = crossings.get("greedy", {}).get("Q2")
    if g is None or "dp" not in crossings or "bnb" not in crossings:
        return "undetermined"
    if not g["reached"]:
        return "not separated"
    budget = g["oracle_queries"]
    for name in ("dp", "bnb"):
        c = crossings[name]["Q1"]
        if c["reached"] and c["oracle_queries"] <= budget:
            return "not separated"
    return "separated"


def run_race(model: SynergyModel, solvers: Sequence[str] = ("dp", "bnb", "greedy"),
             node_budget: int | None = 10_000, greedy_pool: str = "planted",
             size_cap: int | None = None, lam: float | None = None,
             pool_seed: int = 0) -> RaceReport:
    """Run every requested solver on ``model`` and score them on shared thresholds.

    Each solver queries the instance through its own counting wrapper, so
    ``oracle_queries`` is comparable across solvers. OPT, and therefore both
    thresholds, always come from the exact DP. A solver whose size guard
    fails is reported with its error and the race carries on.
    """
    unknown = set(solvers) - set(SOLVERS)
    if unknown:
        raise ValueError(f"unknown solvers {sorted(unknown)}")
    if greedy_pool not in ("planted", "full"):
        raise ValueError("greedy_pool must be 'planted' or 'full'")
    solvers = ["dp"] + [s for s in solvers if s != "dp"]
    runs: dict[str, SolverRun] = {}

    for name in solvers:
        oracle = CountingOracle(model)
        run = SolverRun(name)
        try:
            if name == "dp":
                trace = AnytimeTrace("dp", "subsets_processed", oracle)
                res = dp.dp_solve(oracle, trace)
                run.final_value, run.native_work = res.opt, res.table.processed_count
                run.structure = res.best.as_lists()
            elif name == "bnb":
                trace = AnytimeTrace("bnb", "nodes_explored", oracle)
                spm = bnb.build_model(oracle, size_cap)
                res = bnb.bnb_solve(spm, trace, node_budget)
                run.final_value = res.best_value if res.best is not None else None
                run.native_work = res.stats.nodes_explored
                run.structure = res.best.as_lists() if res.best is not None else None
                run.extra = {"budget_exhausted": res.stats.budget_exhausted,
                             "root_bound": res.stats.root_bound,
                             "root_gap": res.stats.root_gap,
                             "size_cap": size_cap, "M": spm.M}
            else:
                trace = AnytimeTrace(name, "candidate_evals", oracle)
                if greedy_pool == "planted":
                    pool = sparse.planted_pool(model, oracle, seed=pool_seed)
                else:
                    pool = sparse.full_pool(oracle, size_cap)
                if name == "greedy":
                    res = sparse.greedy_solve(oracle, pool, trace)
                else:
                    lam_used = sparse.default_lambda(model) if lam is None else lam
                    res = sparse.l1_solve(oracle, pool, lam_used, trace)
                    run.extra["lambda"] = lam_used
                run.final_value = res.value
                run.native_work = res.selection.candidate_evals
                run.structure = res.structure.as_lists()
                run.extra.update({"pool": pool.kind, "M": pool.M})
            run.trace = trace
        except GuardViolation as exc:
            run.error = str(exc)
        run.oracle_queries = oracle.queries
        runs[name] = run

    opt = runs["dp"].final_value
    thresholds = None
    crossings: dict[str, dict] = {}
    if opt is not None and model.k:
        th = quality_thresholds(model, opt)
        thresholds = {"Q1": th.Q1, "Q2": th.Q2, "epsilon": th.epsilon}
        for name, run in runs.items():
            if run.trace is not None:
                crossings[name] = {"Q1": _crossing(run.trace, th.Q1),
                                   "Q2": _crossing(run.trace, th.Q2)}
    verdict = separation_verdict(crossings) if thresholds else "undetermined"
    config = {"solvers": list(solvers), "node_budget": node_budget, "greedy_pool": greedy_pool,
              "size_cap": size_cap, "lambda": lam, "pool_seed": pool_seed}
    return RaceReport(model, opt, thresholds, runs, crossings, verdict, config)


def tail_bound(t: float, sigma: float) -> float:
    if t <= 0:
        return 2.0
    if sigma == 0:
        return 0.0
    return 2.0 * math.exp(-t * t / (2.0 * sigma * sigma))


def default_t_grid(sigma: float, n: int) -> list[float]:
    unit = sigma if sigma > 0 else 1.0
    grid = {round(unit * k / 2, 12) for k in range(0, 9)}
    grid.add(noise_ceiling(sigma, n))
    return sorted(grid)


def concentration_check(sigma: float, n: int, t_grid: Iterable[float] | None = None,
                        replicates: int = 100_000, seed: int = 0,
                        uniform_replicates: int | None = None) -> dict:
    """Empirical tail frequencies of the noise next to ``2 exp(-t^2 / 2 sigma^2)``.

    Each replicate draws a fresh noise seed and one uniformly random nonempty
    coalition. Separately, for ``uniform_replicates`` seeds (all replicates
    by default) every nonempty coalition is inspected and the fraction of
    seeds with ``max |xi(S)| <= 2 sigma sqrt(log 2n)`` is reported.
    """
    if replicates < 100:
        raise ValueError("need at least 100 replicates")
    rng = np.random.default_rng(seed)
    seeds = rng.integers(0, 2**63, size=replicates, dtype=np.int64).astype(np.uint64)
    masks = rng.integers(1, 1 << n, size=replicates, dtype=np.int64).astype(np.uint64)
    xi = np.abs(noise_pairs(seeds, masks, sigma))
    grid = default_t_grid(sigma, n) if t_grid is None else sorted(set(t_grid))
    ceiling = noise_ceiling(sigma, n)
    if ceiling not in grid:
        grid = sorted(grid + [ceiling])

    rows = []
    for t in grid:
        freq = float(np.mean(xi > t))
        bound = tail_bound(t, sigma)
        p = min(bound, 1.0)
        se = math.sqrt(p * (1.0 - p) / replicates)
        rows.append({"t": t, "frequency": freq, "bound": bound, "std_error": se,
                     "within_bound": freq <= bound + 3.0 * se})

    U = replicates if uniform_replicates is None else min(uniform_replicates, replicates)
    all_masks = np.arange(1, 1 << n, dtype=np.uint64)
    chunk = max(1, 2_000_000 // all_masks.size)
    held = 0
    for lo in range(0, U, chunk):
        s = seeds[lo:min(lo + chunk, U)]
        vals = np.abs(noise_pairs(s[:, None], all_masks[None, :], sigma))
        held += int(np.sum(vals.max(axis=1) <= ceiling))
    return {
        "format_version": FORMAT_VERSION,
        "sigma": sigma,
        "n": n,
        "replicates": replicates,
        "seed": seed,
        "noise_ceiling": ceiling,
        "rows": rows,
        "uniform_event": {"replicates": U, "fraction_held": held / U},
        "all_within_bound": all(r["within_bound"] for r in rows),
    }


@dataclass(frozen=True)
class GrowthFit:
    slope: float
    intercept: float
    residual: float


def growth_estimate(points: Sequence[tuple[int, float]]) -> GrowthFit:
    """Least-squares slope of ``log2(work)`` against ``n`` (bits per agent)."""
    if len(points) < 3:
        raise ValueError("need at least 3 points")
    ns = np.array([p[0] for p in points], dtype=float)
    work = np.array([p[1] for p in points], dtype=float)
    if np.any(work <= 0):
        raise ValueError("work units must be positive")
    if np.ptp(ns) == 0:
        raise ValueError("all points share the same n; slope is undefined")
    y = np.log2(work)
    slope, intercept = np.polyfit(ns, y, 1)
    resid = y - (slope * ns + intercept)
    return GrowthFit(float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2))))
