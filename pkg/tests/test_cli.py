"""
Tests for the command line interface.
"""

import csv
import io
import json

import pytest
from click.testing import CliRunner

from tsvar.cli import cli
from tsvar.cli_examples import DATA_DIR

EXAMPLE1 = str(DATA_DIR / "example1.json")
EXAMPLE2 = str(DATA_DIR / "example2.json")


def write_config(tmp_path, **overrides):
    data = json.loads((DATA_DIR / "example1.json").read_text())
    data.update(overrides)
    path = tmp_path / "problem.json"
    path.write_text(json.dumps(data))
    return str(path)


@pytest.fixture
def runner():
    return CliRunner()


class TestVerify:
    """Test the verify command."""

    def test_example1_passes(self, runner):
        result = runner.invoke(cli, ["verify", "--config", EXAMPLE1])
        assert result.exit_code == 0, result.output
        assert "\"passed\": true" in result.output

    def test_example2_passes(self, runner):
        result = runner.invoke(cli, ["verify", "--config", EXAMPLE2])
        assert result.exit_code == 0, result.output

    @pytest.mark.parametrize("overrides", [
        {"candidate": "t^3"},
        {"candidate": "t^2"},
        {"candidate": "t^2 + 0.5*t", "timescale": {"kind": "h", "h": 0.5, "anchor": 0}},
    ], ids=["cubic", "quadratic", "quadratic-h0.5"])
    def test_euler_lagrange_null_candidates_fail(self, runner, tmp_path, overrides):
        out = tmp_path / "out"
        result = runner.invoke(cli, ["verify", "--config", write_config(tmp_path, **overrides), "--out", str(out)])
        assert result.exit_code == 1
        assert "✗ Candidate fails" in result.output
        assert json.loads((out / "report.json").read_text())["result"]["passed"] is False

    def test_report_file(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(cli, ["verify", "--config", EXAMPLE1, "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "✓ Candidate passes" in result.output
        assert json.loads((out / "report.json").read_text())["result"]["passed"] is True

    def test_missing_candidate(self, runner, tmp_path):
        data = json.loads((DATA_DIR / "example1.json").read_text())
        del data["candidate"]
        path = tmp_path / "problem.json"
        path.write_text(json.dumps(data))
        result = runner.invoke(cli, ["verify", "--config", str(path)])
        assert result.exit_code == 2
        assert "no candidate" in result.output

    def test_schema_violation(self, runner, tmp_path):
        result = runner.invoke(cli, ["verify", "--config", write_config(tmp_path, order="two")])
        assert result.exit_code == 2
        assert "Schema validation failed" in result.output

    def test_missing_file(self, runner):
        result = runner.invoke(cli, ["verify", "--config", "/nonexistent/problem.json"])
        assert result.exit_code == 2


class TestSolve:
    """Test the solve command."""

    @pytest.mark.parametrize("path,expected", [
        (EXAMPLE1, [0, 0, 1, 0]),
        (EXAMPLE2, [0, 2, 0, -1]),
    ], ids=["example1", "example2"])
    def test_examples(self, runner, tmp_path, path, expected):
        result = runner.invoke(cli, ["solve", "--config", path, "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "family_dim = 2" in result.output
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["command"] == "solve"
        assert report["result"]["coefficients"] == pytest.approx(expected, abs=1e-6)
        assert report["result"]["family_dim"] == 2

    def test_dependent_basis(self, runner, tmp_path):
        config = write_config(tmp_path, solver={"basis": ["t", "2*t"]})
        out = tmp_path / "out"
        result = runner.invoke(cli, ["solve", "--config", config, "--out", str(out)])
        assert result.exit_code == 1
        report = json.loads((out / "report.json").read_text())
        assert report["error"] == "BasisError"

    def test_no_basis(self, runner, tmp_path):
        result = runner.invoke(cli, ["solve", "--config", write_config(tmp_path, solver={})])
        assert result.exit_code == 2


class TestScan:
    """Test the scan command."""

    def test_k2_all_zero(self, runner, tmp_path):
        result = runner.invoke(cli, ["scan", "--config", EXAMPLE1, "--k", "2", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        rows = list(csv.DictReader(io.StringIO((tmp_path / "scan_k2.csv").read_text())))
        assert rows
        assert all(float(row["inf_value"]) == 0 for row in rows)

    def test_json(self, runner, tmp_path):
        out = tmp_path / "out"
        result = runner.invoke(cli, ["scan", "--config", EXAMPLE1, "--format", "json", "--out", str(out)])
        assert result.exit_code == 0, result.output
        assert "k=1: ConvergesToZero" in result.output
        assert json.loads((out / "scan_k1.json").read_text())["verdict"] == "ConvergesToZero"

    def test_k_out_of_range(self, runner):
        result = runner.invoke(cli, ["scan", "--config", EXAMPLE1, "--k", "3"])
        assert result.exit_code == 2


class TestIbpCheck:
    """Test the integration by parts battery command."""

    def test_order3_q_scale(self, runner, tmp_path):
        config = write_config(
            tmp_path,
            timescale={"kind": "q", "q": 2, "anchor": 1},
            order=3,
            initial_conditions=[0, 1, 0],
            lagrangian="-(u3)^2",
            partials={},
        )
        out = tmp_path / "out"
        result = runner.invoke(cli, ["ibp-check", "--config", config, "--pairs", "20", "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = json.loads((out / "report.json").read_text())
        assert report["orders"] == [1, 2, 3]
        assert report["cases"] == 20 * 6
        assert report["passed"] is True


class TestExamples:
    """Test reproduction of the bundled examples."""

    def test_examples_match(self, runner, tmp_path):
        result = runner.invoke(cli, ["examples", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert "✓ example1 matches its golden summary" in result.output
        assert "✓ example2 matches its golden summary" in result.output
        assert (tmp_path / "example2.json").exists()
