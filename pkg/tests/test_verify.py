"""Tests for verify module."""

import numpy as np
import pytest

from berwald_scalar.errors import DomainError, ParseError
from berwald_scalar.report import dump_verification
from berwald_scalar.spray_curvature import curvature_bundle
from berwald_scalar.verify import (
    EUCLIDEAN2,
    FUNK2,
    HOMOGENEITY_FACTORS,
    IDENTITIES,
    RIEMANN2,
    ROTATION2,
    Identity,
    Outcome,
    Suite,
    VerificationRun,
    _oracle,
    all_passed,
    check_eq10,
    check_funk,
    check_homogeneity,
    check_laplace1,
    check_oracle,
    check_thm1,
    default_resolutions,
    run_verification,
)


@pytest.fixture
def suite():
    return Suite(seed=0, resolutions=default_resolutions())


@pytest.fixture
def faulty_suite():
    return Suite(seed=0, resolutions=default_resolutions(), e_scale=2.0)


def _domain_failure(suite, m):
    raise DomainError("outside")


def _non_finite(suite, m):
    return Outcome(np.array([0.0, np.nan]), 2)


def _flagged(suite, m):
    return Outcome(np.zeros(3), 3, note="slow", failed=True)


class TestChecks:
    """Test individual identity checks."""

    def test_funk_benchmark(self, suite):
        """Funk has S = 3F/2 and E = 3/2 h on twenty samples."""
        outcome = check_funk(suite, suite.metric(FUNK2))
        assert outcome.samples == 20
        assert np.max(outcome.residuals) < 1e-4

    def test_isotropy_relation_on_funk(self, suite):
        """The isotropy relation holds on Funk."""
        outcome = check_thm1(suite, suite.metric(FUNK2))
        assert len(outcome.residuals) == 10
        assert np.max(outcome.residuals) < 1e-5

    def test_isotropy_relation_catches_scaled_e(self, faulty_suite):
        """A doubled E breaks the isotropy relation."""
        # in dimension 2 E stays a multiple of h, so the fitted c exposes the fault
        outcome = check_thm1(faulty_suite, faulty_suite.metric(FUNK2))
        assert np.max(outcome.residuals) > 1.0

    def test_hessian_of_s_catches_scaled_e(self, suite, faulty_suite):
        """E against the y-Hessian of S catches a doubled E."""
        assert np.max(check_eq10(suite, suite.metric(FUNK2)).residuals) < 1e-6
        assert np.max(check_eq10(faulty_suite, faulty_suite.metric(FUNK2)).residuals) > 0.1

    def test_homogeneity_on_rotation(self, suite):
        """Every tensor scales with its homogeneity degree in y."""
        outcome = check_homogeneity(suite, suite.metric(ROTATION2))
        assert outcome.samples == 30
        assert np.max(outcome.residuals) < 1e-7

    def test_homogeneity_uses_non_dyadic_factors(self, suite, mocker):
        """Scaled bundles are built at 0.7 and 3, not only at powers of two."""
        spy = mocker.spy(suite, "bundle")
        check_homogeneity(suite, suite.metric(ROTATION2))
        factors = {call.kwargs.get("factor", 1.0) for call in spy.call_args_list}
        assert factors == {1.0, *HOMOGENEITY_FACTORS}
        assert all(np.log2(f) % 1 != 0 for f in HOMOGENEITY_FACTORS)

    def test_oracle_on_riemann(self, suite):
        """All sixteen tensors agree with the finite-difference oracle."""
        outcome = check_oracle(suite, suite.metric(RIEMANN2))
        assert len(outcome.residuals) == 16
        assert np.max(outcome.residuals) < 1e-4

    def test_oracle_on_funk(self, suite):
        """The oracle matches the jets on a metric with nonzero B and S."""
        outcome = check_oracle(suite, suite.metric(FUNK2))
        assert np.max(outcome.residuals) < 1e-4

    def test_oracle_catches_scaled_e(self, faulty_suite):
        """A doubled E in the jets shows up against the oracle."""
        outcome = check_oracle(faulty_suite, faulty_suite.metric(FUNK2))
        names = outcome.note.removeprefix("residual per tensor: ").split(", ")
        assert outcome.residuals[names.index("E")] > 0.1
        assert outcome.residuals[names.index("g")] < 1e-4

    def test_oracle_never_builds_a_jet_bundle(self, suite, mocker):
        """The oracle works from values of F and of the volume density only."""
        m = suite.metric(FUNK2)
        p = suite.points(m, 4)
        expected = curvature_bundle(m, p, suite.volume(m))
        mocker.patch("berwald_scalar.verify.curvature_bundle", side_effect=AssertionError)
        oracle = _oracle(m, suite.volume(m), p)
        assert list(oracle) == [
            *("g", "ginv", "A", "C", "h", "G", "N", "Gjk", "B", "Gamma"),
            *("L", "J", "E", "e", "tau", "S"),
        ]
        for name, value in oracle.items():
            assert np.allclose(value, getattr(expected, name), rtol=1e-4, atol=1e-4), name

    def test_laplace1_converges(self, suite):
        """The fiber equation on Funk converges under doubling."""
        outcome = check_laplace1(suite, suite.metric(FUNK2))
        assert not outcome.failed
        assert np.max(outcome.residuals) < 1e-4

    def test_suite_caches_bundles(self, suite):
        """Metrics and bundles are built once per suite."""
        m = suite.metric(FUNK2)
        assert suite.metric(FUNK2) is m
        assert suite.bundle(m, count=3) is suite.bundle(m, count=3)


class TestRunVerification:
    """Test the suite runner."""

    def test_funk_benchmark_passes(self):
        """The Funk benchmark passes with the default resolutions."""
        reports = run_verification(["funk-benchmark"], seed=0)
        assert len(reports) == 1
        report = reports[0]
        assert report.verdict == "pass"
        assert report.metric == "funk(n=2)"
        assert report.volume == "bh"
        assert report.resolutions == default_resolutions()
        assert all_passed(reports)

    def test_injected_fault_fails(self):
        """The e-scale fault makes the Funk benchmark fail."""
        reports = run_verification(["funk-benchmark"], seed=0, fault="e-scale")
        assert reports[0].verdict == "fail"
        assert not all_passed(reports)

    def test_unknown_identity(self):
        """An unknown identity is a ParseError."""
        with pytest.raises(ParseError, match="unknown identities"):
            run_verification(["no-such-identity"])

    def test_unknown_fault(self):
        """An unknown fault is a ParseError."""
        with pytest.raises(ParseError, match="unknown fault"):
            run_verification(["funk-benchmark"], fault="flip-sign")

    def test_tolerance_override(self):
        """A tolerance override is applied and echoed."""
        reports = run_verification(["funk-benchmark"], seed=0, tolerances={"funk-benchmark": 1e-30})
        assert reports[0].verdict == "fail"
        assert reports[0].tolerance == 1e-30

    def test_deterministic_across_runs_and_workers(self):
        """Reports are identical across runs and worker counts."""
        selection = ["funk-benchmark", "schrodinger-family"]
        first = run_verification(selection, seed=3)
        second = run_verification(selection, seed=3)
        threaded = run_verification(selection, seed=3, jobs=2)

        dumps = [
            dump_verification(VerificationRun(seed=3, reports=reports))
            for reports in (first, second, threaded)
        ]
        assert dumps[0] == dumps[1] == dumps[2]
        assert [r.identity for r in first] == ["funk-benchmark"] + ["schrodinger-family"] * 3

    def test_resolution_override_is_echoed(self):
        """A resolution override is echoed in every report."""
        reports = run_verification(
            ["schrodinger-family"], seed=0, resolutions={"indicatrix": 128, "quadrature": 128}
        )
        assert all(r.resolutions["indicatrix"] == 128 for r in reports)
        assert all(r.verdict == "pass" for r in reports)

    def test_logs_summary(self, isolated_log):
        """The run logs its start and its tally."""
        run_verification(["funk-benchmark"], seed=0)
        text = isolated_log.read_text()
        assert "Running 1 verification task (seed 0)" in text
        assert "Verification finished: 1 passed, 0 failed" in text


class TestTaskFailures:
    """Test how failing checks are reported."""

    def test_error_becomes_failed_report(self, mocker):
        """An exception in a check becomes a failed report."""
        boom = Identity("boom", 1.0, (EUCLIDEAN2,), _domain_failure)
        mocker.patch.dict(IDENTITIES, {"boom": boom})
        [report] = run_verification(["boom"], seed=0)
        assert report.verdict == "fail"
        assert report.max_residual is None
        assert report.error == "DomainError: outside"
        assert report.samples == 0

    def test_non_finite_residual(self, mocker):
        """A non-finite residual fails the item."""
        mocker.patch.dict(IDENTITIES, {"nan": Identity("nan", 1.0, (EUCLIDEAN2,), _non_finite)})
        [report] = run_verification(["nan"], seed=0)
        assert report.verdict == "fail"
        assert report.max_residual is None
        assert report.error == "residual is not finite"

    def test_failed_flag_overrides_residuals(self, mocker):
        """A check can fail an item whatever its residuals."""
        mocker.patch.dict(IDENTITIES, {"slow": Identity("slow", 1.0, (EUCLIDEAN2,), _flagged)})
        [report] = run_verification(["slow"], seed=0)
        assert report.verdict == "fail"
        assert report.max_residual == 0.0
        assert report.note == "slow"
