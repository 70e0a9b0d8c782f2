"""
Tests for the Monte-Carlo harness, result files and the command line.
"""

import json
import math

import pandas as pd
import pytest
from scipy import stats

from harness.report import emit_results
from harness.runner import (
    OUTSIDE_COLUMNS,
    OUTSIDE_METRIC_COLUMNS,
    RAW_COLUMNS,
    SUMMARY_COLUMNS,
    aggregate,
    contribution_ratios,
    run_replication,
    run_scenario,
)
from harness.scenarios import SCENARIOS, ScenarioSpec, build_spec, load_config_file
from main import main
from utils.errors import InvalidArgumentError


def _small_spec(**overrides):
    values = dict(scenario=1, sweep_values=(2,), tdd=(0, 5), replications=2, n_cells=3, bandwidth_mhz=5,
                  content_bytes=50_000)
    values.update(overrides)
    return ScenarioSpec(**values)


@pytest.fixture
def small_outcome():
    return run_scenario(_small_spec())


@pytest.fixture
def cli_env(monkeypatch):
    monkeypatch.setenv("MAF_CONTENT_BYTES", "50000")
    monkeypatch.setenv("MAF_WORKERS", "1")
    monkeypatch.setenv("MAF_LOG_LEVEL", "WARNING")


def test_scenario_defaults():
    assert ScenarioSpec(scenario=1).sweep_values == (200, 250, 300, 350, 400)
    assert ScenarioSpec(scenario=2).sweep_values == tuple(range(10, 37, 2))
    assert ScenarioSpec(scenario=3).sweep_values == (5, 10, 15, 20, 25, 30, 40, 50)
    spec = ScenarioSpec(scenario=2)
    assert spec.sweep_label == "cells"
    assert spec.n_points == 14 * 7 * 2
    assert spec.point(12) == (300, 12, 50)


@pytest.mark.parametrize("kwargs", [
    {"scenario": 4},
    {"scenario": 1, "tdd": (7,)},
    {"scenario": 1, "algorithms": ("greedy",)},
    {"scenario": 1, "replications": 0},
    {"scenario": 1, "sweep_values": (0,)},
    {"scenario": 3, "sweep_values": (7,)},
    {"scenario": 2, "sweep_values": (300,)},
])
def test_invalid_scenarios(kwargs):
    with pytest.raises(InvalidArgumentError):
        ScenarioSpec(**kwargs)


def test_replication_records():
    spec = _small_spec()
    records = run_replication(spec, 2, rep=3)
    assert len(records) == 4
    assert {(r["tdd"], r["algo"]) for r in records} == {(0, "d2d-maf"), (0, "scf"), (5, "d2d-maf"), (5, "scf")}
    for record in records:
        assert list(record) == RAW_COLUMNS + OUTSIDE_METRIC_COLUMNS
        assert record["avg_thr_outside_bps"] >= 0.0
        assert record["seed"] == spec.base_seed + 3
        assert record["adr_bps"] == pytest.approx(record["adr_b_bps"] + record["adr_u_bps"] + record["adr_d2d_bps"])
        assert record["n_mbsfn_users"] + record["n_unicast_users"] + record["n_d2d_users"] == 6
        assert record["delivery_time_s"] > 0
        assert 0.0 <= record["used_d2d_rb_pct"] <= 100.0
        if record["algo"] == "scf":
            assert record["n_d2d_users"] == 0


def test_run_scenario_tables(small_outcome):
    raw = small_outcome.raw
    assert list(raw.columns) == RAW_COLUMNS
    assert len(raw) == 2 * 2 * 2
    summary = small_outcome.aggregate.summary()
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert len(summary) == 4
    assert small_outcome.aggregate.count.tolist() == [2, 2, 2, 2]


def test_runs_are_deterministic(small_outcome):
    pd.testing.assert_frame_equal(small_outcome.raw, run_scenario(_small_spec()).raw)


def test_process_pool_matches_inline_run(small_outcome):
    pd.testing.assert_frame_equal(small_outcome.raw, run_scenario(_small_spec(), workers=2).raw)


def test_student_t_interval():
    raw = pd.DataFrame([
        {"scenario": 1, "sweep_value": 200, "tdd": 0, "algo": "scf", "rep": rep, "seed": rep + 1,
         **{m: 0.0 for m in RAW_COLUMNS[6:]}, "adr_bps": adr}
        for rep, adr in enumerate([1.0, 3.0, 5.0])
    ], columns=RAW_COLUMNS)
    agg = aggregate(raw)
    key = (1, 200, 0, "scf")
    assert agg.mean.loc[key, "adr_bps"] == pytest.approx(3.0)
    assert agg.std.loc[key, "adr_bps"] == pytest.approx(2.0)
    assert agg.ci95.loc[key, "adr_bps"] == pytest.approx(stats.t.ppf(0.975, 2) * 2.0 / math.sqrt(3))
    assert agg.ci95.loc[key, "delivery_time_s"] == 0.0


def test_single_replication_has_zero_interval():
    agg = run_scenario(_small_spec(replications=1, tdd=(5,))).aggregate
    assert (agg.ci95.to_numpy() == 0.0).all()


def test_contribution_ratio():
    rows = []
    for algo, unicast, d2d in (("d2d-maf", 20.0, 80.0), ("scf", 10.0, 0.0)):
        record = {c: 0.0 for c in RAW_COLUMNS}
        record.update(scenario=1, sweep_value=200, tdd=0, algo=algo, rep=0, seed=1, adr_u_bps=unicast,
                      adr_d2d_bps=d2d)
        rows.append(record)
    ratios = contribution_ratios(aggregate(pd.DataFrame(rows, columns=RAW_COLUMNS)))
    assert ratios == {(1, 200, 0): pytest.approx(10.0)}


def test_result_files(small_outcome, tmp_path):
    written = emit_results(small_outcome.aggregate, small_outcome.raw, tmp_path / "out",
                           outside=small_outcome.outside)
    names = [p.name for p in written]
    assert names[:3] == ["raw.csv", "summary.csv", "outside_thr.csv"]
    assert set(names[3:]) == {"adr_vs_users.svg", "avg_thr_vs_users.svg", "delivery_time_vs_users.svg",
                              "used_d2d_rb_vs_users.svg", "adr_contribution_vs_users.svg",
                              "avg_thr_outside_vs_users.svg"}
    raw = pd.read_csv(tmp_path / "out" / "raw.csv")
    assert list(raw.columns) == RAW_COLUMNS
    assert len(raw) == 8
    summary = pd.read_csv(tmp_path / "out" / "summary.csv")
    assert list(summary.columns) == SUMMARY_COLUMNS
    assert (tmp_path / "out" / "adr_vs_users.svg").read_text().lstrip().startswith("<?xml")


def test_result_files_are_reproducible(small_outcome, tmp_path):
    for name in ("a", "b"):
        emit_results(small_outcome.aggregate, small_outcome.raw, tmp_path / name)
    for name in ("raw.csv", "summary.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_configuration_dump(tmp_path):
    outcome = run_scenario(_small_spec(replications=1, tdd=(5,), dump_configurations=True))
    assert len(outcome.configurations) == 2
    assert [c["algo"] for c in outcome.configurations] == ["d2d-maf", "scf"]

    written = emit_results(outcome.aggregate, outcome.raw, tmp_path, outcome.configurations)
    assert written[2].name == "configurations.jsonl"
    lines = written[2].read_text().splitlines()
    assert len(lines) == 2
    for line, row in zip(lines, outcome.raw.itertuples(index=False)):
        record = json.loads(line)
        served = len(record["mbsfn_users"]) + len(record["unicast_users"]) + len(record["d2d_users"])
        assert served == 6
        assert record["adr"]["total_bps"] == pytest.approx(row.adr_bps)


def test_empty_run_writes_headers_only(tmp_path):
    raw = pd.DataFrame(columns=RAW_COLUMNS)
    written = emit_results(aggregate(raw), raw, tmp_path)
    assert [p.name for p in written] == ["raw.csv", "summary.csv"]
    assert (tmp_path / "raw.csv").read_text().strip() == ",".join(RAW_COLUMNS)
    assert (tmp_path / "summary.csv").read_text().strip() == ",".join(SUMMARY_COLUMNS)


def test_config_file_and_overrides(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps({
        "scenario": 2, "sweep": "3..5:2", "tdd": [5], "algorithms": "scf", "users_per_cell": 2,
        "bandwidth_mhz": 5, "replications": 1, "allocation": {"rule": "fixed", "fraction": 0.5},
    }))
    values = load_config_file(path)
    assert values["sweep_values"] == (3, 5)
    assert values["algorithms"] == ("scf",)
    assert values["policy"].mbsfn_share_rule == "fixed"

    spec = build_spec(values, replications=4, tdd=None)
    assert spec.replications == 4
    assert spec.tdd == (5,)
    assert spec.sweep_label == SCENARIOS[2][1]


@pytest.mark.parametrize("content", ['{"scenario": 1, "speed": 3}', '[1, 2]', '{"scenario": ', '{"tdd": "x"}'])
def test_bad_config_files(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    with pytest.raises(InvalidArgumentError):
        load_config_file(path)


def test_missing_config_file(tmp_path):
    with pytest.raises(InvalidArgumentError):
        load_config_file(tmp_path / "absent.json")


def test_cli_run(cli_env, tmp_path, capsys):
    out = tmp_path / "results"
    code = main(["run", "--scenario", "1", "--users-per-cell", "2", "--cells", "3", "--bw-mhz", "5",
                 "--tdd", "0", "--algo", "scf,d2d-maf", "--reps", "1", "--out", str(out)])
    assert code == 0
    assert (out / "raw.csv").exists()
    assert (out / "adr_vs_users.svg").exists()
    assert (out / "outside_thr.csv").exists()
    assert (out / "avg_thr_outside_vs_users.svg").exists()
    assert "ADR Mbit/s" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [
    ["run"],
    ["run", "--scenario", "1", "--algo", "greedy"],
    ["run", "--scenario", "1", "--cells", "10..12:2"],
    ["run", "--scenario", "1", "--tdd", "9"],
    ["run", "--scenario", "3", "--bw-mhz", "7"],
])
def test_cli_usage_errors(cli_env, tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 2


def test_cli_rejects_unknown_flags(cli_env):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scenario", "1", "--colour", "red"])
    assert exc.value.code == 2


def test_cli_output_failure(cli_env, tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")
    code = main(["run", "--scenario", "1", "--users-per-cell", "2", "--cells", "1", "--bw-mhz", "5",
                 "--tdd", "5", "--reps", "1", "--out", str(blocker)])
    assert code == 1


def test_cli_bad_environment(monkeypatch):
    monkeypatch.setenv("MAF_WORKERS", "none")
    assert main(["run", "--scenario", "1"]) == 2


def test_outside_throughput_table(small_outcome, tmp_path):
    outside = small_outcome.outside
    assert list(outside.columns) == OUTSIDE_COLUMNS
    assert outside[["scenario", "sweep_value", "tdd", "algo", "rep"]].equals(
        small_outcome.raw[["scenario", "sweep_value", "tdd", "algo", "rep"]])
    assert (outside["avg_thr_outside_bps"] >= 0.0).all()

    emit_results(small_outcome.aggregate, small_outcome.raw, tmp_path, outside=outside)
    written = pd.read_csv(tmp_path / "outside_thr.csv")
    assert list(written.columns) == OUTSIDE_COLUMNS
    assert written["avg_thr_outside_bps"].tolist() == pytest.approx(outside["avg_thr_outside_bps"].tolist())
    assert list(pd.read_csv(tmp_path / "raw.csv").columns) == RAW_COLUMNS


def test_outside_throughput_interval():
    outside = pd.DataFrame([
        {"scenario": 2, "sweep_value": 10, "tdd": 5, "algo": "d2d-maf", "rep": rep, "seed": rep + 1,
         "avg_thr_outside_bps": thr}
        for rep, thr in enumerate([2.0, 4.0])
    ], columns=OUTSIDE_COLUMNS)
    summary = aggregate(outside, OUTSIDE_METRIC_COLUMNS).summary()
    assert list(summary.columns) == ["scenario", "sweep_value", "tdd", "algo", "avg_thr_outside_bps_mean",
                                     "avg_thr_outside_bps_ci95"]
    assert summary.loc[0, "avg_thr_outside_bps_mean"] == pytest.approx(3.0)
    # s = sqrt(2) over n = 2 samples
    assert summary.loc[0, "avg_thr_outside_bps_ci95"] == pytest.approx(stats.t.ppf(0.975, 1))
