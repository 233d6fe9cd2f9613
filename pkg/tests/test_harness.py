import json
import math

import numpy as np
import pytest

from costarb import (
    BudgetSpec,
    ExperimentConfig,
    edmonds,
    generate,
    run_experiment,
    run_expectation_check,
    run_oracle_suite,
)
from costarb.harness import derive_trial_seed, write_report


def small_config(**overrides):
    base = dict(
        n=6, s=1.0, trials=4, base_seed=42, budget=BudgetSpec("absolute", 5.0)
    )
    base.update(overrides)
    return ExperimentConfig(**base)


class TestBudgetSpec:
    def test_resolution(self):
        assert BudgetSpec("absolute", 7.5).resolve(100) == 7.5
        assert BudgetSpec("alpha_const", 2.0).resolve(100) == 2.0
        assert BudgetSpec("alpha_n", 0.3).resolve(100) == pytest.approx(30.0)
        assert BudgetSpec("power", 0.5).resolve(100) == pytest.approx(10.0)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            BudgetSpec("mystery", 1.0).resolve(10)


class TestTrialSeeds:
    def test_distinct_and_replayable(self):
        seeds = [derive_trial_seed(42, t) for t in range(100)]
        assert len(set(seeds)) == 100
        assert seeds == [derive_trial_seed(42, t) for t in range(100)]


class TestRunExperiment:
    def test_deterministic_reports(self):
        a = run_experiment(small_config())
        b = run_experiment(small_config())
        assert a.to_json() == b.to_json()
        assert a.rows_csv() == b.rows_csv()

    def test_parallelism_does_not_change_output(self):
        serial = run_experiment(small_config(trials=6, parallelism=1))
        parallel = run_experiment(small_config(trials=6, parallelism=3))
        assert serial.to_json() == parallel.to_json()
        assert serial.rows_csv() == parallel.rows_csv()

    def test_slack_budget_single_trial_equals_edmonds(self):
        config = small_config(n=5, trials=1, base_seed=0, budget=BudgetSpec("absolute", 100.0))
        report = run_experiment(config)
        inst = generate(5, 1.0, derive_trial_seed(0, 0))
        assert report.rows[0]["w_arb"] == pytest.approx(edmonds(inst).weight)

    def test_rows_feasible_or_tagged(self):
        report = run_experiment(small_config(trials=8))
        assert len(report.rows) == 8
        for row in report.rows:
            assert (row["failure"] is None and row["c_arb"] <= report.c0) or row[
                "failure"
            ]

    def test_aggregates_match_rows(self):
        report = run_experiment(small_config(trials=8))
        ws = [r["w_arb"] for r in report.rows if r["failure"] is None]
        assert report.aggregates["w_arb"]["mean"] == pytest.approx(np.mean(ws))
        assert report.aggregates["w_arb"]["max"] == pytest.approx(np.max(ws))

    def test_infeasible_trials_recorded_not_raised(self):
        config = small_config(n=20, trials=3, budget=BudgetSpec("absolute", 0.2))
        report = run_experiment(config)
        assert report.aggregates["failures"].get("infeasible") == 3
        assert report.aggregates["w_arb"] is None
        assert report.aggregates["feasibility_rate"] == 0.0

    def test_schema_and_files(self, tmp_path):
        report = run_experiment(small_config())
        payload = report.to_dict()
        assert payload["schema"] == 1
        assert "parallelism" not in payload["config"]
        jp, cp = tmp_path / "r.json", tmp_path / "r.csv"
        write_report(report, jp, cp)
        loaded = json.loads(jp.read_text())
        assert loaded["c0"] == report.c0
        header = cp.read_text().splitlines()[0]
        assert header.startswith("trial,seed,lambda_star,phi_star,w_map")

    def test_config_validation(self):
        with pytest.raises(ValueError):
            run_experiment(small_config(trials=0))
        with pytest.raises(ValueError):
            run_experiment(small_config(budget=BudgetSpec("absolute", -1.0)))

    def test_prediction_attached_when_regime_known(self):
        config = ExperimentConfig(
            n=400, s=1.0, trials=2, base_seed=1, budget=BudgetSpec("power", 0.5)
        )
        report = run_experiment(config)
        assert report.prediction["regime"] == "CASE1"
        assert report.aggregates["ratio"] == pytest.approx(
            report.aggregates["w_arb"]["mean"] / report.prediction["w_star"]
        )


class TestExpectationCheck:
    def test_lambda_zero_matches_exact_mean(self):
        # E[min of n uniforms] = 1/(n+1) exactly
        n = 1000
        rep = run_expectation_check(n, 0.0, 1.0, repetitions=50_000, seed=3)
        assert abs(rep.empirical_mean - 1.0 / (n + 1)) / (1.0 / (n + 1)) < 0.02

    def test_mid_regime(self):
        rep = run_expectation_check(2000, 0.05, 1.0, repetitions=20_000, seed=4)
        assert rep.regime == "E3"
        assert rep.rel_deviation < 0.03

    def test_power_law(self):
        rep = run_expectation_check(2000, 1.0, 0.5, repetitions=20_000, seed=5)
        assert rep.regime == "ES"
        assert rep.rel_deviation < 0.05


class TestOracleSuite:
    def test_clean_run_passes(self):
        report = run_oracle_suite(60, range(4, 7), seed=123)
        assert report.passed, report.violations
        assert report.instances == 60
        assert report.checks == 240

    def test_includes_n2_edge_case(self):
        report = run_oracle_suite(10, [2], seed=9)
        assert report.passed, report.violations

    def test_mutation_is_caught_with_seed(self):
        report = run_oracle_suite(5, [4], seed=7, _corrupt_check="edmonds")
        assert not report.passed
        assert all(v["check"] == "edmonds" for v in report.violations)
        assert all("seed" in v for v in report.violations)

    def test_gap_mutation_is_caught(self):
        report = run_oracle_suite(5, [4], seed=7, _corrupt_check="gap")
        assert not report.passed

    def test_rejects_big_n(self):
        with pytest.raises(ValueError):
            run_oracle_suite(2, [8], seed=0)
