"""End-to-end tests for the qcorr CLI."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from qcorr.classical import CorrelationResult, crosscorr_brute
from qcorr.cli import cli

pytestmark = pytest.mark.e2e


@pytest.fixture
def arrays_dir(fixtures_dir: Path) -> Path:
    return fixtures_dir / "arrays"


@pytest.fixture
def delta_files(arrays_dir: Path) -> list[str]:
    return [str(arrays_dir / "valid" / "delta_a.csv"), str(arrays_dir / "valid" / "delta_b.csv")]


def _read_json(path: Path) -> dict:
    return json.loads(path.read_text())


class TestCLIBasicInvocation:
    """Tests for basic CLI invocation."""

    def test_help_flag(self, cli_runner: CliRunner):
        """Help flag should list the subcommands."""
        result = cli_runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        for command in ("crosscorr", "emml", "sweep", "selftest"):
            assert command in result.output

    def test_version(self, cli_runner: CliRunner):
        """Version flag should print the program name."""
        result = cli_runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "qcorr" in result.output

    def test_unknown_command_is_usage_error(self, cli_runner: CliRunner):
        """Unknown commands should exit with 1."""
        result = cli_runner.invoke(cli, ["transmogrify"])
        assert result.exit_code == 1

    def test_selftest(self, cli_runner: CliRunner):
        """selftest should pass every check."""
        result = cli_runner.invoke(cli, ["selftest"])
        assert result.exit_code == 0
        assert "checks passed" in result.output


class TestCrosscorrCommand:
    """Tests for `qcorr crosscorr`."""

    def test_delta_arrays(self, cli_runner: CliRunner, delta_files, tmp_path: Path):
        """Delta arrays give an exact one-hot correlation with its peak positions."""
        out = tmp_path / "report.json"
        result = cli_runner.invoke(cli, ["crosscorr", *delta_files, "--m", "16", "--out", str(out)])
        assert result.exit_code == 0, result.output

        report = _read_json(out)
        assert [row["quantum_estimate"] for row in report["rows"]] == pytest.approx([0, 0, 0, 1])
        assert all(row["within_bound"] for row in report["rows"])
        assert report["metadata"]["n"] == 4
        assert report["metadata"]["m"] == 16
        assert report["metadata"]["estimated_shift"] == 3
        assert report["summary"]["total_oracle_calls"] == 15
        assert report["summary"]["fraction_within_bound"] == 1.0
        assert "timestamp" not in report["metadata"]
        assert "wall_time_ms" not in report["summary"]
        assert [row["peak_theory"] for row in report["rows"]] == [[0.0, 16.0]] * 3 + [[8.0, 8.0]]
        assert not any("samples" in row for row in report["rows"])
        assert "low_coverage_rows" not in report["summary"]

    def test_report_on_stdout(self, cli_runner: CliRunner, delta_files):
        """Without --out the report goes to stdout."""
        result = cli_runner.invoke(cli, ["crosscorr", *delta_files, "--m", "16"])
        assert result.exit_code == 0
        assert '"quantum_estimate"' in result.output

    def test_m_must_be_power_of_two(self, cli_runner: CliRunner, delta_files):
        """Non-power-of-two M should be a usage error."""
        result = cli_runner.invoke(cli, ["crosscorr", *delta_files, "--m", "12"])
        assert result.exit_code == 1
        assert "power of 2" in result.output

    def test_missing_file(self, cli_runner: CliRunner, delta_files):
        """A missing input file should exit with 1."""
        result = cli_runner.invoke(cli, ["crosscorr", delta_files[0], "/nonexistent/b.csv"])
        assert result.exit_code == 1

    def test_length_mismatch_names_files(self, cli_runner: CliRunner, delta_files, temp_array_file):
        """Arrays of different lengths should name both files."""
        other = temp_array_file(np.arange(8.0), "eight.csv")
        result = cli_runner.invoke(cli, ["crosscorr", delta_files[0], str(other)])
        assert result.exit_code == 1
        assert "eight.csv" in result.output

    def test_invalid_file_names_rule(self, cli_runner: CliRunner, arrays_dir: Path, delta_files):
        """Invalid files should name the file and the rule."""
        bad = arrays_dir / "invalid" / "length3.csv"
        result = cli_runner.invoke(cli, ["crosscorr", str(bad), delta_files[1]])
        assert result.exit_code == 1
        assert "length3.csv" in result.output
        assert "power of 2" in result.output

    def test_n_is_checked(self, cli_runner: CliRunner, delta_files):
        """--n should match the array length."""
        result = cli_runner.invoke(cli, ["crosscorr", *delta_files, "--n", "8"])
        assert result.exit_code == 1
        assert "--n 8" in result.output

    def test_out_of_bound_exits_2(self, cli_runner: CliRunner, delta_files, tmp_path: Path, monkeypatch):
        """A reference that disagrees with the estimates marks rows out of bound."""
        original = crosscorr_brute
        monkeypatch.setattr(
            "qcorr.cli.crosscorr_brute",
            lambda a, b: CorrelationResult(original(a, b).values + 0.5, "brute"),
        )
        out = tmp_path / "r.json"
        result = cli_runner.invoke(cli, ["crosscorr", *delta_files, "--m", "64", "--out", str(out)])
        assert result.exit_code == 2
        report = _read_json(out)
        assert not any(row["within_bound"] for row in report["rows"])
        assert report["summary"]["fraction_within_bound"] == 0.0

    def test_sampling_reports_coverage(self, cli_runner: CliRunner, delta_files, tmp_path: Path):
        """Few shots leave every shift below the coverage threshold."""
        out = tmp_path / "sampled.json"
        result = cli_runner.invoke(
            cli,
            ["crosscorr", *delta_files, "--m", "16", "--mode", "sampling", "--shots", "8", "--out", str(out)],
        )
        assert result.exit_code in (0, 2), result.output
        report = _read_json(out)
        assert sum(row["samples"] for row in report["rows"]) == 8
        assert all(row["low_coverage"] is True for row in report["rows"])
        assert report["summary"]["low_coverage_rows"] == 4
        assert all("peak_theory" in row for row in report["rows"])

    def test_qubit_cap_from_environment(self, cli_runner: CliRunner, delta_files):
        """QCORR_MAX_QUBITS should cap the circuit size."""
        result = cli_runner.invoke(
            cli, ["crosscorr", *delta_files, "--m", "16"], env={"QCORR_MAX_QUBITS": "8"}
        )
        assert result.exit_code == 1
        assert "cap is 8" in result.output

    def test_raw_units(self, cli_runner: CliRunner, arrays_dir: Path, temp_array_file, tmp_path):
        """Unnormalized inputs get raw-unit columns."""
        other = temp_array_file([2.0, -1.0, 0.5, 3.0, 1.0, 1.0, 0.0, 4.0], "other.csv")
        out = tmp_path / "raw.json"
        row = str(arrays_dir / "valid" / "row.csv")
        result = cli_runner.invoke(cli, ["crosscorr", row, str(other), "--m", "256", "--out", str(out)])
        assert result.exit_code in (0, 2)
        for entry in _read_json(out)["rows"]:
            assert "raw_estimate" in entry
            assert "raw_classical" in entry

    def test_convolution(self, cli_runner: CliRunner, delta_files, tmp_path: Path):
        """--convolution estimates the circular convolution."""
        out = tmp_path / "conv.json"
        result = cli_runner.invoke(
            cli, ["crosscorr", *delta_files, "--m", "16", "--convolution", "--out", str(out)]
        )
        assert result.exit_code == 0
        report = _read_json(out)
        assert report["metadata"]["algorithm"] == "convolution"
        # conv_j = sum_i A_i B_{j-i} = A_j for B a delta at 0
        assert [row["classical_value"] for row in report["rows"]] == [0.0, 0.0, 0.0, 1.0]

    @pytest.mark.parametrize("fmt", ["json", "csv"])
    def test_reports_are_byte_identical(self, cli_runner: CliRunner, temp_array_file, tmp_path, fmt):
        """Seeded runs should write identical bytes."""
        gen = np.random.default_rng(42)
        a = temp_array_file(gen.random(8), "a.csv")
        b = temp_array_file(gen.random(8), "b.csv")
        outputs = []
        for run in range(2):
            out = tmp_path / f"run{run}.{fmt}"
            args = ["crosscorr", str(a), str(b), "--m", "256", "--seed", "7", "--format", fmt]
            result = cli_runner.invoke(cli, [*args, "--out", str(out)])
            assert result.exit_code == 0, result.output
            outputs.append(out.read_bytes())
        assert outputs[0] == outputs[1]

    def test_csv_columns_and_precision(self, cli_runner: CliRunner, delta_files, tmp_path: Path):
        """CSV reports keep the column order and full precision."""
        out = tmp_path / "report.csv"
        result = cli_runner.invoke(
            cli, ["crosscorr", *delta_files, "--m", "64", "--format", "csv", "--out", str(out)]
        )
        assert result.exit_code == 0
        with open(out, newline="") as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 4
        assert list(rows[0])[:8] == [
            "index",
            "quantum_estimate",
            "classical_value",
            "abs_error",
            "error_bound",
            "within_bound",
            "m_hat",
            "oracle_calls",
        ]
        assert rows[3]["m_hat"] == "32"
        assert rows[0]["error_bound"] == format(np.pi**2 / 64**2, ".17g")

    def test_stamp_adds_timing(self, cli_runner: CliRunner, delta_files, tmp_path: Path):
        """--stamp adds a timestamp and wall time."""
        out = tmp_path / "stamped.json"
        result = cli_runner.invoke(
            cli, ["crosscorr", *delta_files, "--m", "16", "--stamp", "--out", str(out)]
        )
        assert result.exit_code == 0
        report = _read_json(out)
        assert "timestamp" in report["metadata"]
        assert report["summary"]["wall_time_ms"] >= 0

    def test_config_file_supplies_defaults(self, cli_runner: CliRunner, fixtures_dir, delta_files, tmp_path):
        """--config supplies option defaults."""
        out = tmp_path / "cfg.json"
        config = fixtures_dir / "configs" / "valid.yml"
        result = cli_runner.invoke(
            cli, ["--config", str(config), "crosscorr", *delta_files, "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        metadata = _read_json(out)["metadata"]
        assert metadata["m"] == 16
        assert metadata["seed"] == 3

    def test_invalid_config_file(self, cli_runner: CliRunner, fixtures_dir, delta_files):
        """Invalid config files should exit with 1 naming the key."""
        config = fixtures_dir / "configs" / "unknown_key.yml"
        result = cli_runner.invoke(cli, ["--config", str(config), "crosscorr", *delta_files])
        assert result.exit_code == 1
        assert "qubits" in result.output


class TestEmmlCommand:
    """Tests for `qcorr emml`."""

    def test_uniform_array(self, cli_runner: CliRunner, arrays_dir: Path, tmp_path: Path):
        """A uniform array converges after one iteration."""
        out = tmp_path / "emml.json"
        result = cli_runner.invoke(cli, ["emml", str(arrays_dir / "emml_uniform"), "--out", str(out)])
        assert result.exit_code == 0, result.output
        report = _read_json(out)
        assert report["metadata"]["iterations_run"] == 1
        assert report["metadata"]["converged"] is True
        assert report["metadata"]["m"] == 32
        assert report["convergence"][0]["l_inf_change"] < 1e-12
        assert len(report["rows"]) == 4

    def test_identical_arrays_within_bound(self, cli_runner: CliRunner, arrays_dir: Path, tmp_path):
        """Identical arrays stay within their error bounds."""
        out = tmp_path / "pair.json"
        result = cli_runner.invoke(
            cli, ["emml", str(arrays_dir / "emml_pair"), "--iterations", "1", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        report = _read_json(out)
        assert len(report["rows"]) == 2 * 4
        assert {row["array_id"] for row in report["rows"]} == {0, 1}
        assert all(row["within_bound"] for row in report["rows"])
        assert report["summary"]["total_oracle_calls"] == 8 * 31

    def test_zero_iterations_is_usage_error(self, cli_runner: CliRunner, arrays_dir: Path):
        """--iterations 0 should be a usage error."""
        result = cli_runner.invoke(cli, ["emml", str(arrays_dir / "emml_uniform"), "--iterations", "0"])
        assert result.exit_code == 1

    def test_empty_directory(self, cli_runner: CliRunner, tmp_path: Path):
        """A directory with no arrays should exit with 1."""
        result = cli_runner.invoke(cli, ["emml", str(tmp_path)])
        assert result.exit_code == 1
        assert "No .csv or .json arrays" in result.output

    def test_csv_writes_convergence_companion(self, cli_runner: CliRunner, arrays_dir: Path, tmp_path):
        """CSV output to a file writes a convergence companion."""
        out = tmp_path / "emml.csv"
        result = cli_runner.invoke(
            cli, ["emml", str(arrays_dir / "emml_uniform"), "--format", "csv", "--out", str(out)]
        )
        assert result.exit_code == 0
        header = out.read_text().splitlines()[0].split(",")
        assert "t" in header
        assert "array_id" in header
        companion = tmp_path / "emml_convergence.csv"
        assert companion.read_text().startswith("t,array_id,l_inf_change")

    def test_csv_on_stdout_includes_convergence(self, cli_runner: CliRunner, arrays_dir: Path):
        """Without --out the convergence table follows the rows after a blank line."""
        result = cli_runner.invoke(cli, ["emml", str(arrays_dir / "emml_uniform"), "--format", "csv"])
        assert result.exit_code == 0, result.output
        assert "\n\nt,array_id,l_inf_change" in result.output
        rows_part = result.output.split("\n\nt,array_id,l_inf_change")[0]
        assert "quantum_estimate" in rows_part


class TestSweepCommand:
    """Tests for `qcorr sweep`."""

    def test_m_list(self, cli_runner: CliRunner, tmp_path: Path):
        """An M sweep reports calls and shrinking bounds per M."""
        out = tmp_path / "sweep.json"
        result = cli_runner.invoke(
            cli, ["sweep", "--n", "4", "--m-list", "16,64,256", "--seed", "1", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        rows = _read_json(out)["rows"]
        assert [row["m"] for row in rows] == [16, 64, 256]
        assert [row["total_oracle_calls"] for row in rows] == [15, 63, 255]
        bounds = [row["mean_error_bound"] for row in rows]
        assert bounds[0] > bounds[1] > bounds[2]

    def test_empty_list_is_usage_error(self, cli_runner: CliRunner):
        """An empty list should be a usage error."""
        result = cli_runner.invoke(cli, ["sweep", "--m-list", ""])
        assert result.exit_code == 1
        assert "must not be empty" in result.output

    def test_needs_exactly_one_list(self, cli_runner: CliRunner):
        """Exactly one list option must be given."""
        assert cli_runner.invoke(cli, ["sweep"]).exit_code == 1
        both = cli_runner.invoke(cli, ["sweep", "--m-list", "16", "--alpha-list", "4"])
        assert both.exit_code == 1

    def test_invalid_list_entry(self, cli_runner: CliRunner):
        """Invalid list entries should be named."""
        result = cli_runner.invoke(cli, ["sweep", "--m-list", "16,12"])
        assert result.exit_code == 1
        assert "12" in result.output

    def test_n_list_scaling(self, cli_runner: CliRunner, tmp_path: Path):
        """An N sweep at fixed alpha scales M with N."""
        out = tmp_path / "scaling.json"
        result = cli_runner.invoke(
            cli, ["sweep", "--n-list", "4,16", "--alpha", "4", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        rows = _read_json(out)["rows"]
        assert [row["n"] for row in rows] == [4, 16]
        assert [row["oracle_calls_per_run"] for row in rows] == [7, 15]

    def test_alpha_list_with_files(self, cli_runner: CliRunner, delta_files, tmp_path: Path):
        """An alpha sweep over files derives M from alpha and N."""
        out = tmp_path / "alpha.json"
        result = cli_runner.invoke(
            cli, ["sweep", *delta_files, "--alpha-list", "4,16", "--out", str(out)]
        )
        assert result.exit_code == 0, result.output
        rows = _read_json(out)["rows"]
        assert [row["m"] for row in rows] == [8, 32]
        assert all(row["max_abs_error"] == pytest.approx(0.0, abs=1e-12) for row in rows)

    def test_emml_algorithm(self, cli_runner: CliRunner, tmp_path: Path):
        """The EMML sweep counts calls per pixel."""
        out = tmp_path / "emml_sweep.json"
        result = cli_runner.invoke(
            cli,
            ["sweep", "--algorithm", "emml", "--n", "2", "--m-list", "16,32", "--out", str(out)],
        )
        assert result.exit_code == 0, result.output
        rows = _read_json(out)["rows"]
        assert [row["oracle_calls_per_run"] for row in rows] == [15, 31]
        assert [row["total_oracle_calls"] for row in rows] == [2 * 4 * 15, 2 * 4 * 31]
        assert all(row["classical_cost"] == 4.0 for row in rows)
