"""Tests for CLI module."""

import json
import sys

import pytest

from berwald_scalar.cli import build_parser, main
from berwald_scalar.verify import VerificationReport


def _report(verdict):
    return VerificationReport(
        identity="funk-benchmark",
        metric="funk(n=2)",
        volume="bh",
        max_residual=1e-9,
        mean_residual=1e-10,
        tolerance=1e-4,
        verdict=verdict,
        seed=0,
        resolutions={"quadrature": 256, "polar": 64, "indicatrix": 256},
        samples=20,
    )


def _exit_code(argv):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    return excinfo.value.code


class TestParser:
    """Test argument parsing."""

    def test_param_values_are_json(self):
        """--param values are parsed as JSON."""
        args = build_parser().parse_args(
            ["classify", "--metric", "minkowski-randers", "--param", "b=0.3", "--param", "n=3"]
        )
        assert dict(args.param) == {"b": 0.3, "n": 3}

    def test_param_without_equals(self):
        """A --param without "=" is a usage error."""
        with pytest.raises(SystemExit):
            build_parser().parse_args(["classify", "--metric", "funk", "--param", "b"])

    def test_suite_is_repeatable(self):
        """--suite can be given more than once."""
        argv = ["verify", "--suite", "eq10,laplace1", "--suite", "homogeneity"]
        args = build_parser().parse_args(argv)
        assert args.suite == ["eq10,laplace1", "homogeneity"]


class TestCLI:
    """Test CLI command routing and exit codes."""

    def test_no_command_prints_help(self, mocker):
        """No subcommand prints help and exits 2."""
        mocker.patch.object(sys, "argv", ["berwald-scalar"])
        assert _exit_code(None) == 2

    def test_zoo_list(self, capsys):
        """zoo list shows the named metrics."""
        assert _exit_code(["zoo", "list"]) == 0
        out = capsys.readouterr().out
        assert "funk" in out
        assert "berwald-randers" in out

    def test_verify_pass(self, mocker, tmp_path):
        """A passing verify run writes the report and exits 0."""
        run = mocker.patch("berwald_scalar.verify.run_verification", return_value=[_report("pass")])
        out = tmp_path / "verify.json"

        argv = ["verify", "--suite", "funk-benchmark", "--seed", "4", "--out", str(out)]
        assert _exit_code(argv) == 0

        document = json.loads(out.read_text())
        assert document["seed"] == 4
        assert document["reports"][0]["verdict"] == "pass"
        kwargs = run.call_args.kwargs
        assert kwargs["selection"] == ["funk-benchmark"]
        assert kwargs["seed"] == 4
        assert kwargs["fault"] is None

    def test_verify_fail(self, mocker, isolated_log):
        """A failing item exits 1 and is logged."""
        mocker.patch("berwald_scalar.verify.run_verification", return_value=[_report("fail")])
        assert _exit_code(["verify", "--format", "csv"]) == 1
        assert "FAILED: funk-benchmark on funk(n=2)" in isolated_log.read_text()

    def test_verify_passes_fault_through(self, mocker):
        """--inject-fault and --resolution reach the runner."""
        run = mocker.patch("berwald_scalar.verify.run_verification", return_value=[_report("fail")])
        assert _exit_code(["verify", "--inject-fault", "e-scale", "--resolution", "128"]) == 1
        kwargs = run.call_args.kwargs
        assert kwargs["fault"] == "e-scale"
        assert kwargs["resolutions"]["quadrature"] == 128
        assert kwargs["resolutions"]["indicatrix"] == 128

    def test_verify_unknown_identity(self):
        """An unknown identity is a usage error."""
        assert _exit_code(["verify", "--suite", "no-such-identity"]) == 2

    def test_unknown_metric(self):
        """An unknown zoo metric is a usage error."""
        assert _exit_code(["classify", "--metric", "hyperbolic"]) == 2

    def test_metric_required(self):
        """classify needs --metric or --config."""
        assert _exit_code(["classify"]) == 2

    def test_bad_config_json(self, tmp_path):
        """A malformed config file is a usage error."""
        config = tmp_path / "run.json"
        config.write_text("{not json")
        assert _exit_code(["classify", "--config", str(config)]) == 2

    def test_validate(self, tmp_path):
        """validate reports ok for the Funk metric."""
        out = tmp_path / "validate.json"
        assert _exit_code(["validate", "--metric", "funk", "--seed", "1", "--out", str(out)]) == 0
        document = json.loads(out.read_text())
        assert document["ok"] is True
        assert document["metric"] == "funk(n=2)"

    def test_validate_construction_error(self):
        """A metric that fails construction exits 3."""
        # b = 1 violates the Randers bound at construction
        assert _exit_code(["validate", "--metric", "minkowski-randers", "--param", "b=1.0"]) == 3

    def test_classify_csv(self, capsys):
        """classify writes CSV on request."""
        argv = ["classify", "--metric", "euclidean", "--format", "csv", "--seed", "0"]
        assert _exit_code(argv) == 0
        assert capsys.readouterr().out.startswith("label,residual,present\n")

    def test_report(self, tmp_path):
        """report writes S at the given points and the fiber residual CSV."""
        points = tmp_path / "points.csv"
        points.write_text("x1,x2,y1,y2\n0,0,1,0\n")
        out = tmp_path / "report.json"
        residuals = tmp_path / "residual.csv"
        argv = [
            "report",
            "--metric",
            "funk",
            "--points",
            str(points),
            "--out",
            str(out),
            "--residual-csv",
            str(residuals),
        ]

        assert _exit_code(argv) == 0

        document = json.loads(out.read_text())
        assert document["points"][0]["S"] == pytest.approx(1.5, abs=1e-8)
        assert residuals.read_text().startswith("theta,residual\n")

    def test_report_domain_error(self, tmp_path):
        """A point outside the domain exits 3."""
        points = tmp_path / "points.csv"
        points.write_text("x1,x2,y1,y2\n2,0,1,0\n")
        assert _exit_code(["report", "--metric", "funk", "--points", str(points)]) == 3

    def test_unexpected_exception(self, mocker, isolated_log):
        """An unexpected error is logged with its traceback and exits 3."""
        mocker.patch("berwald_scalar.metric_zoo.build_zoo", side_effect=RuntimeError("kaput"))
        assert _exit_code(["classify", "--metric", "funk"]) == 3
        content = isolated_log.read_text()
        assert "FATAL ERROR: kaput" in content
        assert "Traceback" in content

    def test_resolution_sets_polar_nodes_in_dimension_three(self, mocker, tmp_path):
        """On an n = 3 metric --resolution reaches the polar quadrature."""
        from berwald_scalar import volume_scurv

        build = mocker.spy(volume_scurv, "volume_form_from_config")
        nodes = mocker.spy(volume_scurv, "sphere_quadrature")
        points = tmp_path / "points.csv"
        points.write_text("x1,x2,x3,y1,y2,y3\n0,0,0,1,0,0\n")
        argv = ["report", "--metric", "minkowski-randers", "--param", "n=3"]
        argv += ["--points", str(points), "--resolution", "16", "--out", str(tmp_path / "r.json")]

        assert _exit_code(argv) == 0
        assert build.call_args.args[1] == 16
        assert nodes.call_args.args == (3, 16)

    def test_resolution_help_names_polar_nodes(self):
        """Both --resolution help texts say what the flag sets for n = 3."""
        parser = build_parser()
        subparsers = next(a for a in parser._actions if a.choices and "verify" in a.choices)
        for command in ("report", "verify"):
            text = subparsers.choices[command].format_help()
            assert "polar" in " ".join(text.split())
