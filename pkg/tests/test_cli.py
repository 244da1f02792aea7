import csv
import json

import pytest

from csgbench.cli import (
    EXIT_GUARD, EXIT_OK, EXIT_USAGE, EXIT_VERIFY, instance_from_dict, instance_to_dict,
    load_instance, main, random_instance, verify_instance,
)
from csgbench.genmodel import GeneratorParams, generate, margin_report
from csgbench.trace import TRACE_CSV_HEADER, read_trace_csv


def _gen(tmp_path, *args, name="inst.json"):
    path = tmp_path / name
    assert main(["gen", *args, "--out", str(path)]) == EXIT_OK
    return path


def test_gen_writes_instance(tmp_path):
    path = _gen(tmp_path, "--n", "4", "--k", "2", "--template-size", "2",
                "--weights", "3,2", "--sigma", "0")
    d = json.loads(path.read_text())
    assert d["format_version"] == 1
    assert d["templates"] == [[0, 1], [2, 3]]
    assert d["weights"] == [3.0, 2.0]
    assert d["generator_params"]["placement"] == "contiguous"


def test_gen_to_stdout(capsys):
    assert main(["gen", "--n", "6", "--placement", "disjoint-halves"]) == EXIT_OK
    d = json.loads(capsys.readouterr().out)
    assert d["templates"] == [[0, 1, 2], [3, 4, 5]]


def test_gen_infeasible_is_usage_error(tmp_path, capsys):
    assert main(["gen", "--n", "4", "--k", "3", "--template-size", "2"]) == EXIT_USAGE
    assert "infeasible" in capsys.readouterr().err


def test_instance_roundtrip(tmp_path):
    m = generate(GeneratorParams(n=9, k=2, template_size=3, sigma=0.3, placement="random", seed=4))
    again = instance_from_dict(json.loads(json.dumps(instance_to_dict(m))))
    assert again == m
    assert again.params == m.params
    assert again(0b101101) == m(0b101101)


def test_unknown_format_version_rejected(tmp_path, capsys):
    path = _gen(tmp_path, "--n", "4")
    d = json.loads(path.read_text())
    d["format_version"] = 99
    path.write_text(json.dumps(d))
    assert main(["solve", "--solver", "dp", "--instance", str(path),
                 "--out", str(tmp_path)]) == EXIT_USAGE
    assert "format_version" in capsys.readouterr().err


def test_missing_instance_is_usage_error(tmp_path):
    assert main(["solve", "--solver", "dp", "--instance", str(tmp_path / "nope.json")]) \
        == EXIT_USAGE


def test_bad_arguments_exit_one():
    with pytest.raises(SystemExit) as exc:
        main(["gen"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == EXIT_USAGE


def test_solve_dp_and_bnb_agree(tmp_path):
    path = _gen(tmp_path, "--n", "8", "--k", "2", "--template-size", "3",
                "--placement", "random", "--sigma", "0.2", "--seed", "3")
    out = tmp_path / "out"
    for solver in ("dp", "bnb", "brute"):
        assert main(["solve", "--solver", solver, "--instance", str(path),
                     "--out", str(out)]) == EXIT_OK
    dp = json.loads((out / "dp_summary.json").read_text())
    bb = json.loads((out / "bnb_summary.json").read_text())
    br = json.loads((out / "brute_summary.json").read_text())
    assert dp["value"] == pytest.approx(bb["value"], abs=1e-9)
    assert dp["value"] == pytest.approx(br["value"], abs=1e-9)
    assert dp["oracle_queries"] == 255
    assert dp["native_work"] == 256
    rows = read_trace_csv((out / "dp_trace.csv").read_text())
    assert len(rows) == 8
    assert (out / "dp_trace.csv").read_text().splitlines()[0] == ",".join(TRACE_CSV_HEADER)


def test_solve_greedy_noiseless(tmp_path):
    path = _gen(tmp_path, "--n", "10", "--k", "3", "--template-size", "3", "--seed", "5")
    w = sum(json.loads(path.read_text())["weights"])
    assert main(["solve", "--solver", "greedy", "--instance", str(path),
                 "--out", str(tmp_path)]) == EXIT_OK
    s = json.loads((tmp_path / "greedy_summary.json").read_text())
    assert s["value"] == pytest.approx(w)
    assert s["pool"] == "full"


def test_solve_bnb_budget_flag(tmp_path):
    # heavy noise at this seed leaves the root relaxation fractional
    m = generate(GeneratorParams(n=7, k=3, template_size=2, sigma=1.5, placement="random",
                                 seed=4))
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(instance_to_dict(m)))
    assert main(["solve", "--solver", "bnb", "--instance", str(path), "--node-budget", "1",
                 "--out", str(tmp_path)]) == EXIT_OK
    s = json.loads((tmp_path / "bnb_summary.json").read_text())
    assert s["budget_exhausted"] is True
    assert s["native_work"] == 1
    assert s["value"] is None
    assert main(["solve", "--solver", "bnb", "--instance", str(path), "--node-budget", "0",
                 "--out", str(tmp_path)]) == EXIT_USAGE


def test_solve_guard_exit_code(tmp_path, capsys):
    path = _gen(tmp_path, "--n", "17")
    assert main(["solve", "--solver", "dp", "--instance", str(path),
                 "--out", str(tmp_path)]) == EXIT_GUARD
    assert "guard" in capsys.readouterr().err


def _hard_instance(tmp_path, n=10, seed=0):
    gmin = margin_report(generate(GeneratorParams(n=n, placement="disjoint-halves",
                                                  seed=seed))).gamma_min
    return _gen(tmp_path, "--n", str(n), "--placement", "disjoint-halves",
                "--sigma", repr(0.05 * gmin), "--seed", str(seed), name=f"hard{n}_{seed}.json")


def _strip_wall(d):
    if isinstance(d, dict):
        return {k: _strip_wall(v) for k, v in d.items() if k != "wall_ns"}
    if isinstance(d, list):
        return [_strip_wall(v) for v in d]
    return d


def test_race_outputs_and_determinism(tmp_path, capsys):
    path = _hard_instance(tmp_path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["race", "--instance", str(path), "--out", str(a)]) == EXIT_OK
    assert main(["race", "--instance", str(path), "--out", str(b)]) == EXIT_OK
    assert capsys.readouterr().out.split() == ["separated", "separated"]
    ra = json.loads((a / "race_report.json").read_text())
    rb = json.loads((b / "race_report.json").read_text())
    assert _strip_wall(ra) == _strip_wall(rb)
    assert (a / "plot_data.csv").read_text() == (b / "plot_data.csv").read_text()
    with open(a / "plot_data.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["solver", "oracle_queries", "incumbent"]
    assert {r[0] for r in rows[1:]} == {"dp", "bnb", "greedy"}
    for name in ("dp", "bnb", "greedy"):
        assert (a / f"trace_{name}.csv").exists()


def test_race_unknown_solver(tmp_path):
    path = _hard_instance(tmp_path, n=6)
    assert main(["race", "--instance", str(path), "--solvers", "dp,foo",
                 "--out", str(tmp_path)]) == EXIT_USAGE


def test_verify_ok_and_fault(tmp_path, capsys):
    out = tmp_path / "v.json"
    assert main(["verify", "--n-min", "3", "--n-max", "6", "--replicates", "5",
                 "--out", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["checked"] == 20
    assert main(["verify", "--n-min", "4", "--n-max", "4", "--replicates", "2",
                 "--inject-fault"]) == EXIT_VERIFY
    err = capsys.readouterr().err
    assert "disagreement" in err and '"templates"' in err


def test_verify_single_agent():
    assert main(["verify", "--n-min", "1", "--n-max", "1", "--replicates", "3"]) == EXIT_OK


def test_verify_guard_and_usage():
    assert main(["verify", "--n-min", "5", "--n-max", "13"]) == EXIT_GUARD
    assert main(["verify", "--n-min", "6", "--n-max", "5"]) == EXIT_USAGE


def test_verify_instance_directly():
    res = verify_instance(random_instance(6, 2))
    assert res["agree"] and set(res) == {"brute", "dp", "bnb", "agree"}
    assert not verify_instance(random_instance(6, 2), corrupt=True)["agree"]


def test_tail_command(tmp_path):
    out = tmp_path / "tail.json"
    assert main(["tail", "--sigma", "1", "--n", "8", "--replicates", "5000",
                 "--uniform-replicates", "100", "--out", str(out)]) == EXIT_OK
    r = json.loads(out.read_text())
    assert r["replicates"] == 5000 and r["all_within_bound"]
    assert main(["tail", "--replicates", "5"]) == EXIT_USAGE


def test_load_instance_rejects_garbage(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(Exception, match="cannot read"):
        load_instance(p)
