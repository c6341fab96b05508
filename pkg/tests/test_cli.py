import json
import math
from importlib import resources

import pytest
from click.testing import CliRunner

from cstarcorr.cli import main
from cstarcorr.report import RESIDUAL_CAP, dumps, emit_report
from cstarcorr.suites import SUITES, Check, SuiteConfig, run_suite

DATA = resources.files("cstarcorr") / "data"


def _run(*args, env=None):
    return CliRunner().invoke(main, list(args), env=env)


def _report(result):
    return json.loads(result.output)


@pytest.mark.parametrize("suite", ["ksgns", "quesadilla", "fock", "subproduct", "bihilb", "covering"])
def test_verify_suites_pass(suite):
    res = _run("verify", "--suite", suite, "--seed", "42", "--tol", "1e-9", "--trials", "2", "--depth", "2")
    assert res.exit_code == 0, res.output
    rep = _report(res)
    assert rep["pass"] and rep["suite"] == suite and rep["seed"] == 42
    assert rep["checks"] and all(c["pass"] for c in rep["checks"])


def test_unknown_suite_is_usage_error():
    res = _run("verify", "--suite", "nope")
    assert res.exit_code == 2
    with pytest.raises(KeyError):
        run_suite(SuiteConfig("nope"))


def test_bad_tolerance_is_usage_error():
    assert _run("verify", "--suite", "ksgns", "--tol", "-1").exit_code == 2
    with pytest.raises(ValueError):
        SuiteConfig("ksgns", tol=0)


def test_missing_file_names_the_path(tmp_path):
    missing = str(tmp_path / "absent.graph")
    res = _run("graph", "info", missing)
    assert res.exit_code != 0 and missing in res.output
    res = _run("graph", "kappa", "--graph", missing, "--subgraph", missing)
    assert res.exit_code != 0 and missing in res.output


def test_json_written(tmp_path):
    out = tmp_path / "report.json"
    res = _run("verify", "--suite", "subproduct", "--depth", "3", "--json", str(out))
    assert res.exit_code == 0
    assert json.loads(out.read_text()) == _report(res)


def test_tolerance_from_environment():
    args = ("verify", "--suite", "ksgns", "--trials", "2")
    assert _run(*args, env={"CSTARCORR_TOL": "1e-9"}).exit_code == 0
    # no residual survives a tolerance this small
    assert _run(*args, env={"CSTARCORR_TOL": "1e-300"}).exit_code == 1
    # an explicit flag wins over the variable
    assert _run(*args, "--tol", "1e-9", env={"CSTARCORR_TOL": "1e-300"}).exit_code == 0


def test_graph_info():
    res = _run("graph", "info", str(DATA / "o2.graph"))
    assert res.exit_code == 0
    assert json.loads(res.output) == {"vertices": 1, "edges": 2, "sources": [], "sinks": []}


def test_graph_kappa_reports_polarized_failure():
    res = _run("graph", "kappa", "--graph", str(DATA / "o2.graph"), "--subgraph", str(DATA / "o1.graph"),
               "--depth", "1")
    assert res.exit_code == 1
    status = {c["name"]: c["pass"] for c in _report(res)["checks"]}
    assert not status["kappa_inner_products_polarized"]
    assert status["kappa_surjectivity"] and status["kappa_left_action"]
    assert all(v for k, v in status.items() if k.startswith("suffix_kappa"))


def test_bihilb_covering_index():
    res = _run("bihilb", "covering", "--cover", str(DATA / "double_cover.json"))
    assert res.exit_code == 0
    rep = _report(res)
    assert rep["details"]["index"] == [2.0, 2.0, 2.0]
    assert rep["details"]["conjugate_dimension"] == 12


def test_bihilb_covering_bad_json(tmp_path):
    bad = tmp_path / "cover.json"
    bad.write_text("{not json")
    assert _run("bihilb", "covering", "--cover", str(bad)).exit_code == 2


def test_bihilb_verify_and_other_verbs():
    assert _run("bihilb", "verify", "--trials", "1", "--depth", "2").exit_code == 0
    assert _run("fock", "--trials", "1", "--depth", "3").exit_code == 0
    assert _run("fock", "--subproduct", "--depth", "3").exit_code == 0
    assert _run("ksgns", "--trials", "2").exit_code == 0
    assert _run("ksgns", "--compose", "--trials", "2").exit_code == 0


def test_emit_report_edge_cases():
    assert emit_report("s", 0, []) == {"suite": "s", "seed": 0, "checks": [], "pass": True}
    rep = emit_report("s", 1, [Check("a", "ref a", 0.0, True), Check("b", "ref b", 1.0, False)])
    assert not rep["pass"]
    assert list(rep) == ["suite", "seed", "checks", "pass"]
    assert list(rep["checks"][0]) == ["name", "paper_ref", "residual", "pass"]


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_residuals_are_capped(bad):
    rep = emit_report("s", 0, [Check("a", "ref", bad, True)])
    assert rep["checks"][0]["residual"] == RESIDUAL_CAP
    assert not rep["checks"][0]["pass"] and not rep["pass"]
    json.loads(dumps(rep))


def _stable(rep):
    return dumps({k: v for k, v in rep.items() if k != "elapsed_seconds"})


@pytest.mark.parametrize("suite", ["ksgns", "fock", "bihilb", "covering"])
def test_reports_are_deterministic(suite):
    cfg = SuiteConfig(suite, seed=7, trials=2, depth=2)
    assert _stable(run_suite(cfg)) == _stable(run_suite(cfg))


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_every_check_carries_a_reference(suite):
    rep = run_suite(SuiteConfig(suite, seed=3, trials=1, depth=1 if suite == "graph-kappa" else 2))
    for c in rep["checks"]:
        assert isinstance(c["paper_ref"], str) and c["paper_ref"].strip()
        assert math.isfinite(c["residual"])
