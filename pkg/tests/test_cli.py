import csv
import json

import pytest

from expfam_lab.cli import ConfigError, main, parse_n_grid


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path)])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_n_grid():
    assert parse_n_grid("1,2,5") == [1, 2, 5]
    assert parse_n_grid("3:6") == [3, 4, 5, 6]
    assert parse_n_grid("1:1000:4") == [1, 10, 100, 1000]
    for bad in ("", "a:b", "1:2:3:4", "x"):
        with pytest.raises(ConfigError):
            parse_n_grid(bad)


def test_risk_curve_schema_and_exit_code(tmp_path):
    code = run(tmp_path, "risk-curve", "--seed", "1", "--n-grid", "1:12", "--trials", "4000")
    assert code == 0
    rows = read_csv(tmp_path / "risk-curve-gaussian-variance-1.csv")
    assert list(rows[0]) == ["n", "estimator", "mean", "std_err", "lo90", "hi90", "infinite_fraction", "bound",
                             "asymptote"]
    mle = {int(r["n"]): r for r in rows if r["estimator"] == "mle"}
    assert mle[1]["mean"] == "inf" and mle[2]["mean"] == "inf" and mle[2]["bound"] == "inf"
    assert float(mle[10]["mean"]) < float(mle[10]["bound"])
    assert (tmp_path / "risk-curve-gaussian-variance-1.svg").read_text().startswith("<?xml")
    assert not (tmp_path / "risk-curve-gaussian-variance-1-failures.json").exists()


def test_emit_csv_only(tmp_path):
    assert run(tmp_path, "risk-curve", "--seed", "2", "--n-grid", "3,4", "--trials", "100", "--emit", "csv") == 0
    assert not list(tmp_path.glob("*.svg"))


def test_bias_variance_command(tmp_path):
    assert run(tmp_path, "bias-variance", "--seed", "3", "--n-grid", "1,10,100", "--trials", "20000") == 0
    rows = read_csv(tmp_path / "bias-variance-full-gaussian-1d-3.csv")
    assert [int(r["n"]) for r in rows] == [1, 10, 100]
    assert float(rows[-1]["asymptote"]) == pytest.approx(0.01)


def test_smd_check_table1_bounds_table(tmp_path):
    assert run(tmp_path, "smd-check", "--seed", "4", "--trials", "20") == 0
    rows = read_csv(tmp_path / "smd-check-all-4.csv")
    assert len(rows) == 5 and all(float(r["max_rel_gap"]) <= 1e-12 for r in rows)
    assert run(tmp_path, "table1", "--seed", "4", "--trials", "5000") == 0
    rows = read_csv(tmp_path / "table1-gaussian-variance-4.csv")
    assert [r["verdict"] for r in rows] == ["unbounded", "unbounded", "bounded"]
    assert run(tmp_path, "bounds-table", "--seed", "4", "--n-grid", "3:100") == 0
    rows = read_csv(tmp_path / "bounds-table-gaussian-variance-4.csv")
    assert all(float(r["mle_exact_gamma"]) <= float(r["mle_bound_gamma"]) for r in rows)


def test_assertion_failure_writes_a_report(tmp_path):
    # on the 40-cell grid the valley sits at mu*(1 + 2/n0), more than a cell away from mu*(1 + 1/n0)
    code = run(tmp_path, "prior-landscape", "--seed", "5", "--n-grid", "10", "--trials", "4000")
    assert code == 3
    report = json.loads((tmp_path / "prior-landscape-gaussian-variance-5-failures.json").read_text())
    assert report["failures"] and report["seed"] == 5
    assert (tmp_path / "prior-landscape-gaussian-variance-5-valley.csv").exists()


def test_stale_failure_report_is_removed(tmp_path):
    stale = tmp_path / "smd-check-all-6-failures.json"
    stale.write_text("{}")
    assert run(tmp_path, "smd-check", "--seed", "6", "--trials", "3") == 0
    assert not stale.exists()


@pytest.mark.parametrize("args", [
    ["risk-curve", "--trials", "10"],  # seed is mandatory
    ["risk-curve", "--seed", "1", "--family", "nope"],
    ["risk-curve", "--seed", "1", "--trials", "0"],
    ["risk-curve", "--seed", "1", "--n-grid", "5,3"],
    ["risk-curve", "--seed", "1", "--mu-star", "-1"],
    ["risk-curve", "--seed", "1", "--emit", "png"],
    ["prior-landscape", "--seed", "1", "--family", "quadratic"],
    ["frobnicate", "--seed", "1"],
])
def test_config_errors(tmp_path, args):
    assert run(tmp_path, *args) == 2


def test_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["bounds-table", "--seed", "1", "--n-grid", "3,4", "--out", str(blocker / "sub")]) == 4
