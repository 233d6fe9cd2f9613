import json

import pytest

from costarb import load
from costarb.cli import main


def run_cli(capsys, *args):
    code = main(list(args))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPredict:
    def test_case1_json(self, capsys):
        code, out, _ = run_cli(capsys, "predict", "--n", "3000", "--c0", "54.77", "--s", "1")
        assert code == 0
        payload = json.loads(out)
        assert payload["regime"] == "CASE1"
        assert abs(payload["w_star"] - 21.51) < 0.02

    def test_infeasible_exit_code(self, capsys):
        code, out, _ = run_cli(capsys, "predict", "--n", "1000", "--c0", "0.8", "--s", "1")
        assert code == 1
        assert json.loads(out)["regime"] == "CASE3_INFEASIBLE"

    def test_alpha_flag(self, capsys):
        code, out, _ = run_cli(capsys, "predict", "--n", "1000", "--alpha", "0.6")
        assert code == 0
        assert json.loads(out)["regime"] == "CASE2_SLACK"

    def test_ambiguous_is_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "predict", "--n", "2000", "--c0", "5", "--s", "0.5")
        assert code == 2
        assert "band" in err


class TestUsageErrors:
    def test_missing_subcommand_flags(self, capsys):
        assert run_cli(capsys, "predict", "--n", "100")[0] == 2

    def test_conflicting_budget_flags(self, capsys):
        code, _, _ = run_cli(
            capsys, "predict", "--n", "100", "--c0", "1", "--alpha", "0.2"
        )
        assert code == 2

    def test_unknown_command(self, capsys):
        assert run_cli(capsys, "frobnicate")[0] == 2


class TestSolve:
    def test_slack_budget_solves(self, capsys):
        code, out, _ = run_cli(
            capsys, "solve", "--n", "5", "--seed", "1", "--c0", "100"
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["parent"].count(None) == 1
        assert payload["parent"][payload["root"]] is None
        assert payload["trace"]["cycles_broken"] >= 1

    def test_infeasible_budget_exit_1(self, capsys):
        code, _, err = run_cli(
            capsys, "solve", "--n", "20", "--seed", "1", "--c0", "0.1"
        )
        assert code == 1
        assert "infeasible" in err


class TestGenAndFiles:
    def test_gen_binary_and_reload(self, tmp_path, capsys):
        path = tmp_path / "x.carb"
        code, _, _ = run_cli(
            capsys, "gen", "--n", "4", "--seed", "9", "--out", str(path)
        )
        assert code == 0
        inst = load(path)
        assert inst.n == 4 and inst.seed == 9

    def test_gen_csv(self, tmp_path, capsys):
        path = tmp_path / "x.csv"
        code, _, _ = run_cli(
            capsys, "gen", "--n", "3", "--seed", "2", "--out", str(path),
            "--format", "csv",
        )
        assert code == 0
        assert path.read_text().startswith("i,j,weight,cost")

    def test_solve_from_file(self, tmp_path, capsys):
        path = tmp_path / "x.carb"
        run_cli(capsys, "gen", "--n", "5", "--seed", "3", "--out", str(path))
        code, out, _ = run_cli(capsys, "solve", "--in", str(path), "--c0", "50")
        assert code == 0
        assert json.loads(out)["root"] is not None


class TestDualCommand:
    def test_reports_bracket(self, capsys):
        code, out, _ = run_cli(
            capsys, "dual", "--n", "10", "--seed", "4", "--c0", "2.0"
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["mapping_high"]["cost"] <= payload["mapping_low"]["cost"]


class TestExpectCommand:
    def test_runs_and_reports(self, capsys):
        code, out, _ = run_cli(
            capsys, "expect", "--n", "500", "--lam", "0.05", "--reps", "2000",
            "--seed", "6",
        )
        assert code == 0
        payload = json.loads(out)
        assert payload["regime"] == "E3"
        assert payload["rel_deviation"] < 0.2


class TestExperimentCommand:
    def test_writes_json_and_csv(self, tmp_path, capsys):
        prefix = tmp_path / "exp"
        code, _, _ = run_cli(
            capsys, "experiment", "--n", "6", "--trials", "3", "--seed", "5",
            "--c0", "5.0", "--out", str(prefix),
        )
        assert code == 0
        payload = json.loads((tmp_path / "exp.json").read_text())
        assert payload["schema"] == 1 and len(payload["rows"]) == 3
        assert (tmp_path / "exp.csv").read_text().count("\n") == 4

    def test_csv_to_stdout(self, capsys):
        code, out, _ = run_cli(
            capsys, "experiment", "--n", "5", "--trials", "2", "--seed", "5",
            "--c0", "5.0", "--format", "csv",
        )
        assert code == 0
        assert out.startswith("trial,seed")


class TestOracleCommand:
    def test_passes_clean(self, capsys):
        code, out, _ = run_cli(
            capsys, "oracle", "--count", "9", "--n-min", "4", "--n-max", "5",
            "--seed", "11",
        )
        assert code == 0
        assert json.loads(out)["passed"] is True
