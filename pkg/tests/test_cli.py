import csv
import io
import json

import pytest

from expander_lab.cli import (
    BASELINE_SCHEMA,
    SuiteReport,
    baseline_document,
    compare_baseline,
    fmt,
    run,
)


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_verify_actions():
    code, out, _ = call("verify", "actions", "--p", "5")
    assert code == 0
    assert rows(out) == [{"p": "5", "checked": "12", "failures": "0", "pass": "true"}]


def test_appendix_disjoint_chain():
    code, out, _ = call("appendix", "disjoint", "--chain", "3,7,43")
    assert code == 0
    r = rows(out)
    assert len(r) == 6 and all(x["pass"] == "true" for x in r)


def test_gap_sl2_csv():
    code, out, _ = call("gap", "sl2", "--max-prime", "23", "--format", "csv")
    assert code == 0
    r = rows(out)
    assert [int(x["p"]) for x in r] == [2, 3, 5, 7, 11, 13, 17, 19, 23]
    assert list(r[0]) == ["p", "n", "second_eigenvalue", "gap", "top_multiplicity", "pass"]


def test_chain_and_xsets_schemas():
    code, out, _ = call("appendix", "chain", "--length", "3")
    assert code == 0 and out == "index,prime\n0,3\n1,7\n2,43\n"
    code, out, _ = call("appendix", "xsets")
    assert code == 0
    assert out.splitlines()[0] == "p,size,lower,upper,pass"
    assert out.splitlines()[1] == "3,6,13/3,13/2,true"


def test_appendix_gap_schema():
    code, out, _ = call("appendix", "gap", "--q", "3")
    assert code == 0
    r = rows(out)[0]
    assert list(r) == ["q", "standin", "dim", "two_mult", "k1_dim", "gap", "epsilon_emp", "pass"]
    assert (r["dim"], r["two_mult"], r["k1_dim"]) == ("169", "1", "1")


def test_json_report_and_determinism():
    a = call("appendix", "tnorm", "--format", "json")
    b = call("appendix", "tnorm", "--format", "json")
    assert a == b
    doc = json.loads(a[1])
    assert doc["pass"] is True
    assert doc["version"] and doc["config"] == {"q": [3, 7]}
    assert [r["closed_form"] for r in doc["records"]] == ["6/13", "28/57"]
    assert all(r["paper_ref"] for r in doc["records"])
    assert "timings" not in doc


def test_timings_flag():
    code, out, _ = call("appendix", "trace", "--format", "json", "--timings")
    assert code == 0 and "wall_seconds" in json.loads(out)["timings"]


def test_other_commands_pass():
    for argv in (
        ("projective", "enumerate", "--p", "3", "--dim", "2"),
        ("verify", "irreducibility", "--p", "5,7"),
        ("verify", "irreducibility", "--group", "sl3", "--p", "3"),
        ("verify", "fixed-space", "--p", "3,5,7"),
        ("gap", "sl3", "--q", "3"),
        ("witness-norm", "--q", "3,5"),
        ("beta-test", "--samples", "50"),
        ("appendix", "fbound"),
        ("appendix", "tqbound", "--chain", "3,7"),
        ("appendix", "projection"),
    ):
        code, out, err = call(*argv)
        assert code == 0, (argv, err)
        assert out


def test_usage_errors_exit_two():
    assert call("gap", "sl2", "--p", "4")[0] == 2
    assert call("appendix", "disjoint", "--chain", "3,5")[0] == 2
    assert call("appendix", "gap", "--standin", "universal")[0] == 2
    assert call("gap", "sl2", "--tol-eig", "-1")[0] == 2
    assert call("nonsense")[0] == 2
    assert call("baseline", "compare", "--baseline", "/nonexistent.json")[0] == 2


def test_thread_env(monkeypatch):
    monkeypatch.setenv("EXPANDER_LAB_THREADS", "zero")
    assert call("gap", "sl2", "--p", "5")[0] == 2
    monkeypatch.setenv("EXPANDER_LAB_THREADS", "2")
    assert call("gap", "sl2", "--p", "5,7")[0] == 0


def test_resource_error_exit_three():

    code, _, err = call("appendix", "gap", "--q", "43", "--standin", "perm:43")
    assert code == 3 and "exceeds" in err


def test_failed_check_exit_one():
    # an unreachable gap threshold makes every record fail
    code, _, err = call("gap", "sl2", "--p", "5", "--min-gap", "0.9")
    assert code == 1 and "failed" in err


def _baseline(tmp_path, gaps):
    doc = {"schema_version": BASELINE_SCHEMA, "generators": "symmetric", "gaps": gaps, "min_gap": min(gaps.values())}
    path = tmp_path / "base.json"
    path.write_text(json.dumps(doc))
    return str(path)


def test_baseline_identical(tmp_path):
    code, out, _ = call("baseline", "write", "--p", "3,5,7", "--out", str(tmp_path / "b.json"))
    assert code == 0
    code, out, _ = call("baseline", "compare", "--baseline", str(tmp_path / "b.json"))
    assert code == 0
    assert {r["status"] for r in rows(out)} == {"ok"}


def test_baseline_regression_and_addition(tmp_path):
    path = _baseline(tmp_path, {"3": 0.9, "5": 0.2})
    code, out, _ = call("baseline", "compare", "--baseline", path, "--p", "3,5,7")
    assert code == 1
    status = {r["p"]: r["status"] for r in rows(out)}
    assert status == {"3": "regression", "5": "ok", "7": "addition"}


def test_baseline_schema_mismatch(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"schema_version": 99, "gaps": {}}))
    assert call("baseline", "compare", "--baseline", str(path))[0] == 2


def test_compare_baseline_function():
    recs = [{"p": 3, "gap": 0.3}, {"p": 11, "gap": 0.1}]
    base = baseline_document([{"p": 3, "gap": 0.3}, {"p": 5, "gap": 0.2}], "symmetric")
    diff = compare_baseline(recs, base, 1e-9)
    assert diff.passed and diff.additions == [11] and diff.missing == [5]
    diff = compare_baseline([{"p": 3, "gap": 0.29}], base, 1e-3)
    assert not diff.passed


def test_packaged_baseline_passes_small_run():
    code, _, _ = call("baseline", "compare", "--max-prime", "13")
    assert code == 0


def test_fmt():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(True) == "true"
    rep = SuiteReport("x", ["a", "pass"], [{"a": 1, "pass": False}], {}, "ref")
    assert not rep.passed and rep.to_csv() == "a,pass\n1,false\n"
