"""Command-line reports: determinism, exit codes, formats."""

import json

import pytest
from click.testing import CliRunner

from chiralpotts import cli


@pytest.fixture
def runner():
    return CliRunner()


def _strip_timestamp(text):
    return "\n".join(
        line for line in text.splitlines() if "generated_at" not in line
    )


def _json_of(result):
    return json.loads(result.output)


# ---------------------------------------------------------------------------
# report shape and determinism


def test_identity_report_shape(runner):
    result = runner.invoke(cli.main, ["identity", "--N", "3", "--L", "3"])
    assert result.exit_code == 0
    report = _json_of(result)
    assert report["schema"] == 1
    assert report["command"] == "identity"
    assert report["config"] == {
        "N": 3, "L": 3, "command": "identity", "format": "json",
    }
    assert report["pass"] is True
    assert report["symmetric"] is True


def test_reports_are_byte_identical_modulo_timestamp(runner):
    args = ["formfactor", "--N", "3", "--L", "4", "--Q", "0", "--P", "2",
            "--kp", "0.5", "--prec", "128"]
    first = runner.invoke(cli.main, args)
    second = runner.invoke(cli.main, args)
    assert first.exit_code == 0 and second.exit_code == 0
    assert _strip_timestamp(first.output) == _strip_timestamp(second.output)


def test_kp_decimal_string_survives_verbatim(runner):
    result = runner.invoke(cli.main, [
        "order", "--N", "3", "--L", "3", "--r", "1", "--kp", "0.3",
        "--prec", "128",
    ])
    assert result.exit_code == 0
    assert _json_of(result)["config"]["kp"] == "0.3"


def test_appendix_small_case_is_exhaustive(runner):
    result = runner.invoke(cli.main, ["appendix", "--N", "2", "--L", "3"])
    assert result.exit_code == 0
    report = _json_of(result)
    assert report["pass"] is True
    assert report["alternating_sum_exhaustive"] is True


def test_drinfeld_roots_carry_residuals(runner):
    result = runner.invoke(cli.main, [
        "drinfeld", "--N", "3", "--L", "4", "--Q", "0", "--prec", "128",
    ])
    assert result.exit_code == 0
    report = _json_of(result)
    assert report["projection_matches_counts"] is True
    for root in report["roots"]:
        assert root["precision_bits"] == 128
        assert float(root["residuals"]["polynomial_value"]) < 1e-30


def test_order_payload_records_per_sector_rows(runner):
    result = runner.invoke(cli.main, [
        "order", "--N", "3", "--L", "4", "--r", "1", "--kp", "0.5",
        "--prec", "128", "--method", "det",
    ])
    assert result.exit_code == 0
    report = _json_of(result)
    assert [row["Q"] for row in report["per_sector"]] == [0, 1, 2]
    # sectors disagree at finite width; the spread must be reported, small,
    # and nonnegative
    spread = float(report["finite_L"]["residuals"]["sector_spread"])
    assert 0 <= spread < 0.05
    assert float(report["abs_error"]) < 1e-3


def test_out_option_writes_file(runner, tmp_path):
    target = tmp_path / "report.json"
    result = runner.invoke(cli.main, [
        "identity", "--N", "2", "--L", "3", "--out", str(target),
    ])
    assert result.exit_code == 0
    assert f"wrote {target}" in result.output
    assert json.loads(target.read_text())["pass"] is True


# ---------------------------------------------------------------------------
# exit codes


def test_invalid_kp_exits_two(runner):
    result = runner.invoke(cli.main, [
        "order", "--N", "3", "--L", "3", "--r", "1", "--kp", "1.5",
    ])
    assert result.exit_code == 2


def test_unordered_sweep_widths_exit_two(runner):
    result = runner.invoke(cli.main, [
        "sweep", "--N", "3", "--r", "1", "--kp", "0.5",
        "--L", "6", "--L", "4",
    ])
    assert result.exit_code == 2


def test_equal_sectors_exit_two(runner):
    result = runner.invoke(cli.main, [
        "formfactor", "--N", "3", "--L", "4", "--Q", "1", "--P", "1",
        "--kp", "0.5",
    ])
    assert result.exit_code == 2


def test_csv_without_table_exits_two(runner):
    result = runner.invoke(cli.main, [
        "identity", "--N", "2", "--L", "3", "--format", "csv",
    ])
    assert result.exit_code == 2


def test_size_guard_exits_three_with_route_hint(runner):
    result = runner.invoke(cli.main, [
        "order", "--N", "3", "--L", "24", "--r", "1", "--kp", "0.5",
        "--method", "sum",
    ])
    assert result.exit_code == 3
    assert "use --method det for large widths" in result.output


def test_verification_failure_exits_four(runner, monkeypatch):
    monkeypatch.setattr(cli, "ORACLE_TOL", 0.0)
    result = runner.invoke(cli.main, [
        "oracle", "--N", "2", "--L", "3", "--kp", "0.5",
        "--Q", "0", "--P", "1",
    ])
    assert result.exit_code == 4
    assert "FAIL" in result.output


# ---------------------------------------------------------------------------
# tabular artifacts


def test_sweep_csv_columns_and_monotone_errors(runner):
    result = runner.invoke(cli.main, [
        "sweep", "--N", "2", "--r", "1", "--kp", "0.6",
        "--L", "3", "--L", "5", "--prec", "128",
    ])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "L,m,mp,finite_L,limit,abs_error,runtime_ms"
    assert len(lines) == 3
    errors = [float(line.split(",")[5]) for line in lines[1:]]
    assert errors[0] > errors[1]


def test_sweep_json_drops_runtimes(runner):
    result = runner.invoke(cli.main, [
        "sweep", "--N", "2", "--r", "1", "--kp", "0.6",
        "--L", "3", "--L", "5", "--prec", "128", "--format", "json",
    ])
    assert result.exit_code == 0
    report = _json_of(result)
    assert report["abs_error_monotone"] is True
    assert all("runtime_ms" not in row for row in report["rows"])


def test_single_width_sweep_matches_order_command(runner):
    sweep = runner.invoke(cli.main, [
        "sweep", "--N", "3", "--r", "1", "--kp", "0.5", "--L", "4",
        "--prec", "128", "--format", "json",
    ])
    order = runner.invoke(cli.main, [
        "order", "--N", "3", "--L", "4", "--r", "1", "--kp", "0.5",
        "--prec", "128", "--method", "det",
    ])
    assert sweep.exit_code == 0 and order.exit_code == 0
    row = _json_of(sweep)["rows"][0]
    report = _json_of(order)
    assert row["finite_L"] == report["finite_L"]["value"]
    assert row["limit"] == report["limit"]["value"]


def test_oracle_csv_is_the_comparison_table(runner):
    result = runner.invoke(cli.main, [
        "oracle", "--N", "2", "--L", "3", "--kp", "0.5", "--format", "csv",
    ])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "Q,P,lattice,closed,abs_diff"
    assert len(lines) == 3
    assert all(float(line.split(",")[4]) < 1e-8 for line in lines[1:])


def test_correlate_json_table_and_limit(runner):
    result = runner.invoke(cli.main, [
        "correlate", "--N", "3", "--L", "3", "--kp", "0.5", "--r", "1",
        "--ell", "48",
    ])
    assert result.exit_code == 0
    report = _json_of(result)
    assert len(report["separations"]) == 49
    assert float(report["separations"][0]["value"]) == 1.0
    assert float(report["final_deviation"]) < 1e-8


def test_correlate_csv_dumps_spectra(runner):
    result = runner.invoke(cli.main, [
        "correlate", "--N", "2", "--L", "3", "--kp", "0.5", "--r", "1",
        "--format", "csv",
    ])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0] == "Q,j,eigenvalue_modulus,overlap_with_maxQ"
    # one row per eigenvector of each bra sector: 2 sectors of dimension 4
    assert len(lines) == 9
