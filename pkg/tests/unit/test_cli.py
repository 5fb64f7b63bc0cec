"""
Unit tests for the command line interface.
"""
import json
import sys

import pandas as pd
import pytest
from typer.testing import CliRunner

import cli
from cli import app, parse_complex
from ellspin.exceptions import EXIT_CHECK_FAILED, EXIT_INFRASTRUCTURE, EXIT_USAGE, GateError, ParameterError
from ellspin.harness import CheckResult

runner = CliRunner()


def read_json(path):
    return json.loads(path.read_text())


class TestParseComplex:
    """Test the a+bi literal parser."""

    @pytest.mark.parametrize(
        "text, expected",
        [("1.3", 1.3), ("0.4i", 0.4j), ("0.3+0.1i", 0.3 + 0.1j), ("-1e-3-2i", -1e-3 - 2j), ("-i", -1j)],
    )
    def test_valid(self, text, expected):
        """Test accepted forms."""
        assert parse_complex(text, "eta") == expected

    @pytest.mark.parametrize("text", ["", "0.3 + 0.1i", "0.3+0.1j", "abc", "inf", "nan+1i"])
    def test_invalid(self, text):
        """Test rejected forms raise ParameterError."""
        with pytest.raises(ParameterError):
            parse_complex(text, "eta")


class TestVerifyCommand:
    """Test the verify command."""

    def test_elliptic_suite(self, tmp_path):
        """Test a passing suite writes its report and exits 0."""
        report = tmp_path / "report.json"
        result = runner.invoke(app, ["verify", "--suite", "elliptic", "--seed", "2", "-o", str(report)])

        assert result.exit_code == 0
        records = read_json(report)
        assert len(records) == 10
        assert all(r["pass"] for r in records)
        assert {r["seed"] for r in records} == {2}

    def test_csv_report(self, tmp_path):
        """Test the CSV report format."""
        report = tmp_path / "report.csv"
        result = runner.invoke(app, ["verify", "--suite", "elliptic", "--format", "csv", "-o", str(report)])

        assert result.exit_code == 0
        assert len(pd.read_csv(report)) == 10

    def test_eta_zero_is_usage_error(self):
        """Test eta = 0 is rejected before any check runs."""
        result = runner.invoke(app, ["verify", "--eta", "0+0i"])
        assert result.exit_code == EXIT_USAGE

    def test_unknown_suite(self):
        """Test an unknown suite is a usage error."""
        result = runner.invoke(app, ["verify", "--suite", "everything"])
        assert result.exit_code == EXIT_USAGE

    def test_bad_format(self):
        """Test an unknown report format is a usage error."""
        result = runner.invoke(app, ["verify", "--suite", "elliptic", "--format", "xml"])
        assert result.exit_code == EXIT_USAGE

    def test_failed_check_exit_code(self, mocker, tmp_path):
        """Test a failing check exits with 1."""
        mocker.patch.object(
            cli,
            "run_suite",
            return_value=[CheckResult("dybe", "rmatrix", 1.0, 1e-11, 1)],
        )
        result = runner.invoke(app, ["verify", "--suite", "rmatrix", "-o", str(tmp_path / "r.json")])
        assert result.exit_code == EXIT_CHECK_FAILED

    def test_jobs_from_environment(self, mocker, tmp_path, monkeypatch):
        """Test ELLSPIN_JOBS reaches the runner."""
        monkeypatch.setenv("ELLSPIN_JOBS", "3")
        run = mocker.patch.object(cli, "run_suite", return_value=[])
        result = runner.invoke(app, ["verify", "--suite", "elliptic", "-o", str(tmp_path / "r.json")])

        assert result.exit_code == 0
        assert run.call_args.kwargs["jobs"] == 3

    @pytest.mark.slow
    def test_full_suite_end_to_end(self, tmp_path):
        """Test verify --suite all --seed 1 passes every check and exits 0."""
        report = tmp_path / "report.json"
        result = runner.invoke(app, ["verify", "--suite", "all", "--seed", "1", "-o", str(report)])

        records = read_json(report)
        failures = [(r["name"], r["residual"], r["error"]) for r in records if not r["pass"]]
        assert failures == []
        assert len(records) == 62
        assert {r["seed"] for r in records} == {1}
        assert result.exit_code == 0


class TestSpectrumCommand:
    """Test the spectrum command."""

    def test_json_schema(self, tmp_path):
        """Test the JSON document layout."""
        out = tmp_path / "spectrum.json"
        result = runner.invoke(app, ["spectrum", "--n", "3", "--eta", "0.3+0.05i", "-o", str(out)])

        assert result.exit_code == 0
        data = read_json(out)
        assert set(data) == {"model", "params", "sector", "eigenvalues"}
        assert data["model"] == "deformed-L"
        assert data["params"]["eta"] == [0.3, 0.05]
        assert len(data["eigenvalues"]) == 8

    def test_haldane_shastry(self, tmp_path):
        """Test the three-site Haldane-Shastry spectrum."""
        out = tmp_path / "hs.json"
        result = runner.invoke(app, ["spectrum", "--model", "hs", "--n", "3", "-o", str(out)])

        assert result.exit_code == 0
        real_parts = sorted(v[0] for v in read_json(out)["eigenvalues"])
        assert real_parts[:4] == pytest.approx([0.0] * 4, abs=1e-12)
        assert real_parts[4:] == pytest.approx([4 * 3.141592653589793 ** 2 / 9] * 4)

    def test_sector(self, tmp_path):
        """Test a single S^z sector."""
        out = tmp_path / "sector.json"
        result = runner.invoke(app, ["spectrum", "--n", "4", "--sector", "1", "-o", str(out)])

        assert result.exit_code == 0
        data = read_json(out)
        assert data["sector"] == 1
        assert len(data["eigenvalues"]) == 4

    def test_csv(self, tmp_path):
        """Test CSV output has re and im columns."""
        out = tmp_path / "spectrum.csv"
        result = runner.invoke(app, ["spectrum", "--model", "xxz", "--n", "3", "--format", "csv", "-o", str(out)])

        assert result.exit_code == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["re", "im"]
        assert len(frame) == 8

    def test_stdout(self):
        """Test data goes to stdout without a file."""
        result = runner.invoke(app, ["spectrum", "--model", "inozemtsev", "--n", "3", "--format", "csv"])
        assert result.exit_code == 0
        assert "re,im" in result.stdout

    @pytest.mark.parametrize(
        "args",
        [
            ["--model", "nope"],
            ["--eta", "0.3 + 0.1i"],
            ["--eta", "0.3+0.1j"],
            ["--n", "1"],
            ["--kappa", "-1"],
            ["--sector", "9"],
        ],
    )
    def test_usage_errors(self, args):
        """Test bad arguments exit with 64."""
        result = runner.invoke(app, ["spectrum", "--n", "3", *args] if "--n" not in args else ["spectrum", *args])
        assert result.exit_code == EXIT_USAGE


class TestSweepCommand:
    """Test the sweep command."""

    def test_default_grid(self, tmp_path):
        """Test nine linear kappa points."""
        out = tmp_path / "sweep.json"
        result = runner.invoke(app, ["sweep", "--n", "3", "-o", str(out)])

        assert result.exit_code == 0
        data = read_json(out)
        assert data["param"] == "kappa"
        assert [p["value"] for p in data["points"]] == pytest.approx([0.5 * k for k in range(9)])
        assert all(len(p["eigenvalues"]) == 8 for p in data["points"])

    def test_log_grid_csv(self, tmp_path):
        """Test a geometric grid written as CSV."""
        out = tmp_path / "sweep.csv"
        args = ["sweep", "--param", "eta", "--from", "0.1", "--to", "0.4", "--steps", "3", "--log"]
        result = runner.invoke(app, [*args, "--n", "3", "--format", "csv", "-o", str(out)])

        assert result.exit_code == 0
        frame = pd.read_csv(out)
        assert list(frame.columns) == ["point", "eta", "re", "im"]
        assert sorted(frame["point"].unique()) == [0, 1, 2]
        assert frame["eta"].iloc[-1] == pytest.approx(0.4)

    def test_xxz_kappa_sweep(self, tmp_path):
        """Test the linked xxz sweep runs through the short-range chain."""
        out = tmp_path / "xxz.json"
        args = ["sweep", "--model", "xxz", "--from", "1", "--to", "3", "--steps", "3", "--n", "3", "--jobs", "2"]
        result = runner.invoke(app, [*args, "-o", str(out)])

        assert result.exit_code == 0
        assert len(read_json(out)["points"]) == 3

    @pytest.mark.parametrize(
        "args",
        [["--param", "n"], ["--steps", "1"], ["--log", "--from", "0"], ["--model", "nope"]],
    )
    def test_usage_errors(self, args):
        """Test invalid sweeps exit with 64."""
        result = runner.invoke(app, ["sweep", "--n", "3", *args])
        assert result.exit_code == EXIT_USAGE


class TestMagnonsCommand:
    """Test the magnons command."""

    def test_json(self, tmp_path):
        """Test one entry per momentum."""
        out = tmp_path / "magnons.json"
        result = runner.invoke(app, ["magnons", "--n", "3", "-o", str(out)])

        assert result.exit_code == 0
        data = read_json(out)
        assert [m["n"] for m in data["magnons"]] == [0, 1, 2]
        assert data["params"]["n"] == 3

    def test_csv(self, tmp_path):
        """Test the CSV columns."""
        out = tmp_path / "magnons.csv"
        result = runner.invoke(app, ["magnons", "--n", "3", "--format", "csv", "-o", str(out)])

        assert result.exit_code == 0
        frame = pd.read_csv(out)
        assert "energy_left_re" in frame.columns
        assert "translation_eigenvalue_im" in frame.columns


class TestFreezeCommand:
    """Test the freeze command."""

    def test_both_chiralities(self, tmp_path):
        """Test both reports are written and the command passes."""
        out = tmp_path / "freeze.json"
        result = runner.invoke(app, ["freeze", "--n", "2", "-o", str(out)])

        assert result.exit_code == 0
        reports = read_json(out)["reports"]
        assert [r["chirality"] for r in reports] == ["left", "right"]
        assert all(r["deviation"] < 1e-7 for r in reports)

    def test_bad_chirality(self):
        """Test an unknown chirality is a usage error."""
        result = runner.invoke(app, ["freeze", "--chirality", "up"])
        assert result.exit_code == EXIT_USAGE

    def test_gate_failure(self, mocker):
        """Test a failed site-independence gate exits with 1."""
        mocker.patch.object(cli, "freeze_report", side_effect=GateError("spread", details={"spread": 1.0}))
        result = runner.invoke(app, ["freeze", "--n", "2", "--chirality", "left"])
        assert result.exit_code == EXIT_CHECK_FAILED


class TestChecksCommand:
    """Test the checks command."""

    def test_json(self):
        """Test the JSON listing of all checks."""
        result = runner.invoke(app, ["checks", "--format", "json"])

        assert result.exit_code == 0
        rows = json.loads(result.stdout)
        assert len(rows) == 62
        assert {"name", "suite", "tolerance"} <= set(rows[0])

    def test_table(self):
        """Test the table listing of one suite."""
        result = runner.invoke(app, ["checks", "--suite", "limits"])
        assert result.exit_code == 0
        assert "limit_short_range" in result.stdout

    def test_unknown_suite(self):
        """Test an unknown suite is a usage error."""
        result = runner.invoke(app, ["checks", "--suite", "nope"])
        assert result.exit_code == EXIT_USAGE


class TestMain:
    """Test the console-script entry point."""

    def test_usage_error(self, monkeypatch):
        """Test an unknown option exits with 64."""
        monkeypatch.setattr(sys, "argv", ["ellspin", "spectrum", "--bogus"])
        with pytest.raises(SystemExit) as exc:
            cli.main()
        assert exc.value.code == EXIT_USAGE

    def test_success(self, monkeypatch):
        """Test a successful command exits with 0."""
        monkeypatch.setattr(sys, "argv", ["ellspin", "checks", "--format", "json"])
        with pytest.raises(SystemExit) as exc:
            cli.main()
        assert exc.value.code == 0

    def test_command_exit_code(self, monkeypatch):
        """Test exit codes raised by commands reach the process."""
        monkeypatch.setattr(sys, "argv", ["ellspin", "freeze", "--chirality", "up"])
        with pytest.raises(SystemExit) as exc:
            cli.main()
        assert exc.value.code == EXIT_USAGE

    def test_invalid_environment(self, monkeypatch):
        """Test invalid ELLSPIN_* settings abort with the infrastructure exit code."""
        monkeypatch.setenv("ELLSPIN_LOG_LEVEL", "LOUD")
        result = runner.invoke(app, ["checks", "--format", "json"])
        assert result.exit_code == EXIT_INFRASTRUCTURE

    def test_environment_read_per_invocation(self, monkeypatch):
        """Test each invocation picks up the current environment."""
        runner.invoke(app, ["checks", "--format", "json"])
        monkeypatch.setenv("ELLSPIN_DRAWS_PER_CHECK", "7")
        result = runner.invoke(app, ["checks", "--format", "json"])
        records = json.loads(result.stdout)
        assert result.exit_code == 0
        assert any(r["draws"] == 7 for r in records)
