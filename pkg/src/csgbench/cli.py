"""Command-line front end: ``gen``, ``solve``, ``race``, ``verify``, ``tail``.

Exit codes: 0 success, 1 usage or validation error, 2 solver guard
violation, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bnb, dp, harness, oracle, sparse
from .core import CountingOracle, GuardViolation, TableOracle, coalition, members
from .genmodel import GeneratorParams, InfeasibleParams, SynergyModel, generate
from .trace import AnytimeTrace

FORMAT_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_GUARD, EXIT_VERIFY = 0, 1, 2, 3


class UsageError(Exception):
    pass


def instance_to_dict(model: SynergyModel) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "n": model.n,
        "templates": [members(t) for t in model.templates],
        "weights": list(model.weights),
        "sigma": model.sigma,
        "noise_seed": model.noise_seed,
        "generator_params": None if model.params is None else model.params.to_dict(),
    }


def instance_from_dict(d: dict) -> SynergyModel:
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise UsageError(f"unsupported instance format_version {version!r}")
    params = d.get("generator_params")
    return SynergyModel(
        n=int(d["n"]),
        templates=tuple(coalition(t) for t in d["templates"]),
        weights=tuple(float(w) for w in d["weights"]),
        sigma=float(d["sigma"]),
        noise_seed=int(d["noise_seed"]),
        params=None if params is None else GeneratorParams.from_dict(params),
    )


def save_instance(model: SynergyModel, path: Path) -> None:
    path.write_text(json.dumps(instance_to_dict(model), indent=2) + "\n")


def load_instance(path: Path) -> SynergyModel:
    try:
        d = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read instance {path}: {exc}") from exc
    try:
        return instance_from_dict(d)
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"invalid instance {path}: {exc}") from exc


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _out_dir(path: str) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_gen(args) -> int:
    weights = None
    if args.weights:
        weights = tuple(float(w) for w in args.weights.split(","))
    size = args.template_size
    params = GeneratorParams(
        n=args.n, k=args.k, template_size=size,
        weight_range=(args.weight_lo, args.weight_hi), sigma=args.sigma,
        placement=args.placement, seed=args.seed,
        require_margin=args.require_margin, weights=weights)
    try:
        model = generate(params)
    except (InfeasibleParams, ValueError) as exc:
        raise UsageError(f"infeasible parameters: {exc}") from exc
    text = json.dumps(instance_to_dict(model), indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def run_solver(model: SynergyModel, solver: str, size_cap=None, node_budget=None,
               lam=None, pool_kind="full", seed=0) -> tuple[dict, AnytimeTrace | None]:
    counted = CountingOracle(model)
    summary = {"format_version": FORMAT_VERSION, "solver": solver, "size_cap": size_cap}
    trace = None
    if solver == "dp":
        trace = AnytimeTrace("dp", "subsets_processed", counted)
        res = dp.dp_solve(counted, trace)
        value, structure, work = res.opt, res.best, res.table.processed_count
    elif solver == "bnb":
        trace = AnytimeTrace("bnb", "nodes_explored", counted)
        spm = bnb.build_model(counted, size_cap)
        res = bnb.bnb_solve(spm, trace, node_budget)
        value = res.best_value if res.best is not None else None
        structure, work = res.best, res.stats.nodes_explored
        summary.update(budget_exhausted=res.stats.budget_exhausted,
                       root_bound=res.stats.root_bound, node_budget=node_budget, M=spm.M)
    elif solver in ("greedy", "l1"):
        trace = AnytimeTrace(solver, "candidate_evals", counted)
        if pool_kind == "planted":
            pool = sparse.planted_pool(model, counted, seed=seed)
        else:
            pool = sparse.full_pool(counted, size_cap)
        if solver == "greedy":
            res = sparse.greedy_solve(counted, pool, trace)
        else:
            lam = sparse.default_lambda(model) if lam is None else lam
            res = sparse.l1_solve(counted, pool, lam, trace)
            summary["lambda"] = lam
        value, structure, work = res.value, res.structure, res.selection.candidate_evals
        summary.update(pool=pool.kind, M=pool.M, iterations=res.selection.iterations)
    elif solver == "brute":
        value, structure = oracle.brute_opt(counted)
        work = oracle.bell(model.n)
    else:
        raise UsageError(f"unknown solver {solver!r}")
    summary.update(
        value=value,
        structure=None if structure is None else structure.as_lists(),
        work_unit_kind=None if trace is None else trace.work_unit_kind,
        native_work=work,
        oracle_queries=counted.queries,
    )
    return summary, trace


def cmd_solve(args) -> int:
    model = load_instance(Path(args.instance))
    summary, trace = run_solver(model, args.solver, args.size_cap, args.node_budget,
                                args.lam, args.pool, args.seed)
    out = _out_dir(args.out)
    if trace is not None:
        (out / f"{args.solver}_trace.csv").write_text(trace.to_csv())
    _write_json(out / f"{args.solver}_summary.json", summary)
    return EXIT_OK


def cmd_race(args) -> int:
    model = load_instance(Path(args.instance))
    solvers = tuple(s.strip() for s in args.solvers.split(",") if s.strip())
    try:
        report = harness.run_race(model, solvers, node_budget=args.node_budget,
                                  greedy_pool=args.pool, size_cap=args.size_cap,
                                  lam=args.lam, pool_seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    out = _out_dir(args.out)
    _write_json(out / "race_report.json", report.to_dict())
    rows = []
    for name, run in report.runs.items():
        if run.trace is None:
            continue
        (out / f"trace_{name}.csv").write_text(run.trace.to_csv())
        rows.extend((name, r.oracle_queries, repr(r.incumbent)) for r in run.trace.records)
    with open(out / "plot_data.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("solver", "oracle_queries", "incumbent"))
        w.writerows(rows)
    errors = [run.error for run in report.runs.values() if run.error]
    for e in errors:
        print(f"guard violation: {e}", file=sys.stderr)
    print(report.verdict)
    return EXIT_GUARD if errors and report.verdict == "undetermined" else EXIT_OK


def random_instance(n: int, seed: int) -> SynergyModel:
    """Mixed instance for agreement checks: random k, size, placement and sigma."""
    rng = np.random.default_rng([n, seed])
    k = int(rng.integers(0, min(3, n) + 1))
    size = int(rng.integers(1, n // k + 1)) if k else 1
    sigma = float(rng.choice([0.0, 0.05, 0.2]))
    params = GeneratorParams(n=n, k=k, template_size=size, weight_range=(1.0, 3.0),
                             sigma=sigma, placement="random", seed=int(rng.integers(2**31)))
    return generate(params)


def verify_instance(model: SynergyModel, run_bnb: bool = True, corrupt: bool = False,
                    tol: float = 1e-9) -> dict:
    values = {S: model.value(S) for S in range(1, 1 << model.n)}
    if corrupt:
        full = (1 << model.n) - 1
        values[full] += 100.0
    brute_val, _ = oracle.brute_opt(TableOracle(model.n, values))
    dp_val = dp.dp_solve(model).opt
    out = {"brute": brute_val, "dp": dp_val}
    if run_bnb:
        res = bnb.bnb_solve(bnb.build_model(model))
        out["bnb"] = res.best_value
    vals = list(out.values())
    out["agree"] = max(vals) - min(vals) <= tol
    return out


def cmd_verify(args) -> int:
    if args.n_min > args.n_max:
        raise UsageError("--n-min exceeds --n-max")
    if args.n_min < 1 or args.n_max > oracle.MAX_ORACLE_AGENTS:
        raise GuardViolation("oracle-size",
                             f"verify needs 1 <= n <= {oracle.MAX_ORACLE_AGENTS}")
    failures = []
    checked = 0
    for n in range(args.n_min, args.n_max + 1):
        for rep in range(args.replicates):
            seed = args.seed + rep
            model = random_instance(n, seed)
            corrupt = args.inject_fault and checked == 0
            res = verify_instance(model, run_bnb=n <= args.bnb_max_n, corrupt=corrupt)
            checked += 1
            if not res["agree"]:
                failures.append({"n": n, "seed": seed, "values": res,
                                 "instance": instance_to_dict(model)})
    report = {"format_version": FORMAT_VERSION, "checked": checked,
              "failures": failures, "ok": not failures}
    if args.out:
        _write_json(Path(args.out), report)
    if failures:
        for f in failures:
            print(f"disagreement at n={f['n']} seed={f['seed']}: {f['values']}", file=sys.stderr)
            print(json.dumps(f["instance"]), file=sys.stderr)
        return EXIT_VERIFY
    print(f"ok: {checked} instances agree")
    return EXIT_OK


def cmd_tail(args) -> int:
    try:
        report = harness.concentration_check(args.sigma, args.n, replicates=args.replicates,
                                             seed=args.seed,
                                             uniform_replicates=args.uniform_replicates)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="csgbench", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate a sparse-synergy instance")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, default=2)
    g.add_argument("--template-size", type=int, default=2)
    g.add_argument("--placement", choices=("contiguous", "random", "disjoint-halves"),
                   default="contiguous")
    g.add_argument("--weight-lo", type=float, default=2.0)
    g.add_argument("--weight-hi", type=float, default=3.0)
    g.add_argument("--weights", help="comma-separated explicit weights")
    g.add_argument("--sigma", type=float, default=0.0)
    g.add_argument("--require-margin", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", help="output file (stdout if omitted)")
    g.set_defaults(func=cmd_gen)

    def solver_opts(sp):
        sp.add_argument("--instance", required=True)
        sp.add_argument("--size-cap", type=int)
        sp.add_argument("--node-budget", type=int)
        sp.add_argument("--lambda", dest="lam", type=float)
        sp.add_argument("--pool", choices=("full", "planted"))
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=".")

    s = sub.add_parser("solve", help="run one solver and write its trace")
    s.add_argument("--solver", choices=("dp", "bnb", "greedy", "l1", "brute"), required=True)
    solver_opts(s)
    s.set_defaults(func=cmd_solve, pool="full")

    r = sub.add_parser("race", help="race solvers on one instance")
    r.add_argument("--solvers", default="dp,bnb,greedy")
    solver_opts(r)
    r.set_defaults(func=cmd_race, pool="planted", node_budget=10_000)

    v = sub.add_parser("verify", help="brute force vs DP vs B&B agreement")
    v.add_argument("--n-min", type=int, default=4)
    v.add_argument("--n-max", type=int, default=8)
    v.add_argument("--replicates", type=int, default=50)
    v.add_argument("--bnb-max-n", type=int, default=8)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out")
    v.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tail", help="Monte-Carlo check of the noise tail bound")
    t.add_argument("--sigma", type=float, default=1.0)
    t.add_argument("--n", type=int, default=10)
    t.add_argument("--replicates", type=int, default=100_000)
    t.add_argument("--uniform-replicates", type=int)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out")
    t.set_defaults(func=cmd_tail)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "node_budget", None) is not None and args.node_budget < 1:
        print("error: --node-budget must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except GuardViolation as exc:
        print(f"guard violation: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
