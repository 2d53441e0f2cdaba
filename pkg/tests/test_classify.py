"""Tests for classify module."""

import pytest

from berwald_scalar.classify import LABELS, audit, classify, close_labels
from berwald_scalar.config import SamplePlanConfig
from berwald_scalar.errors import InconsistencyError
from berwald_scalar.metric_zoo import build_zoo
from berwald_scalar.volume_scurv import VolumeForm


@pytest.fixture
def plan():
    return SamplePlanConfig(count=4, seed=0, fiber=8)


class TestCloseLabels:
    """Test the implication closure."""

    def test_berwald_closure(self):
        """Berwald implies every label except WeakIsotropicS."""
        assert close_labels({"Berwald"}) == {
            "Berwald",
            "Landsberg",
            "WeakLandsberg",
            "VanishingE",
            "VanishingBerwaldScalar",
            "IsotropicE",
        }

    def test_closure_is_monotone(self):
        """The closure only adds labels that are implied."""
        assert close_labels({"Landsberg"}) == {"Landsberg", "WeakLandsberg"}
        assert close_labels({"WeakIsotropicS"}) == {"WeakIsotropicS"}
        assert close_labels(set()) == set()


class TestClassify:
    """Test labels on known metrics."""

    def test_euclidean_has_every_label(self, plan):
        """The flat metric carries every label."""
        result = classify(build_zoo("euclidean", n=2), VolumeForm("bh"), plan)
        assert result.labels == list(LABELS)
        assert result.samples == 32
        assert result.volume == "bh"

    def test_berwald_randers(self, plan):
        """A Berwald Randers metric is Berwald with weakly isotropic S."""
        result = classify(build_zoo("berwald-randers", n=2), VolumeForm("bh"), plan)
        assert "Berwald" in result.labels
        assert "WeakIsotropicS" in result.labels
        assert result.audits["Landsberg and e=0 => Berwald"] == "holds"

    def test_funk(self, plan):
        """Funk has isotropic E but is not Berwald."""
        result = classify(build_zoo("funk", n=2), VolumeForm("bh"), plan)
        assert "IsotropicE" in result.labels
        assert "WeakIsotropicS" in result.labels
        assert "Berwald" not in result.labels
        assert "VanishingBerwaldScalar" not in result.labels
        assert result.audits["e=0 => E=0"] == "vacuous"
        assert result.audits["e constant => E isotropic"] == "holds"

    def test_randers_rotation(self, plan):
        """The rotation Randers metric earns none of the strong labels."""
        plan = plan.model_copy(update={"count": 6})
        result = classify(build_zoo("randers-rotation", n=2), VolumeForm("bh"), plan)
        for label in ("Berwald", "VanishingE", "IsotropicE", "WeakIsotropicS"):
            assert label not in result.labels

    def test_without_volume(self, plan):
        """Without a volume form WeakIsotropicS is skipped with a note."""
        result = classify(build_zoo("funk", n=2), None, plan)
        assert "WeakIsotropicS" not in result.labels
        assert "WeakIsotropicS" not in result.residuals
        assert "WeakIsotropicS needs a volume form" in result.notes

    def test_too_few_fiber_directions(self, plan):
        """The S fit needs enough fiber directions to be evaluated."""
        plan = plan.model_copy(update={"fiber": 3})
        result = classify(build_zoo("funk", n=2), VolumeForm("bh"), plan)
        assert "WeakIsotropicS" not in result.labels
        assert any(note.startswith("WeakIsotropicS not evaluated") for note in result.notes)

    def test_alpha_beta_audit_in_dimension_3(self):
        """The (alpha, beta) audit runs in dimension 3."""
        plan = SamplePlanConfig(count=2, seed=0, fiber=4)
        result = classify(build_zoo("alpha-beta-exponential", n=3), None, plan)
        assert "(alpha,beta), J=0 and e=0 => Berwald" in result.audits

    def test_fiber_scale_does_not_change_labels(self, plan):
        """Labels do not depend on the length of y."""
        m = build_zoo("funk", n=2)
        unit = classify(m, VolumeForm("bh"), plan)
        scaled = classify(m, VolumeForm("bh"), plan.model_copy(update={"y_mode": "scaled"}))
        assert unit.labels == scaled.labels

    def test_logs_labels(self, plan, isolated_log):
        """The labels are written to the log."""
        classify(build_zoo("euclidean", n=2), None, plan)
        assert "Classified euclidean(n=2): Berwald" in isolated_log.read_text()


class TestAudit:
    """Test implication audits."""

    RESIDUALS = {
        "Berwald": 1.0,
        "Landsberg": 0.0,
        "WeakLandsberg": 0.0,
        "VanishingE": 1.0,
        "VanishingBerwaldScalar": 0.0,
        "IsotropicE": 1.0,
    }

    def test_vanishing_scalar_without_vanishing_e(self):
        """e = 0 without E = 0 is a contradiction."""
        m = build_zoo("euclidean", n=2)
        with pytest.raises(InconsistencyError, match="e vanishes"):
            audit({"VanishingBerwaldScalar"}, m, self.RESIDUALS, 1e-7)

    def test_landsberg_with_vanishing_e_needs_berwald(self):
        """Landsberg with e = 0 and no Berwald label is a contradiction."""
        m = build_zoo("euclidean", n=2)
        labels = {"Landsberg", "WeakLandsberg", "VanishingE", "VanishingBerwaldScalar"}
        with pytest.raises(InconsistencyError, match="Landsberg"):
            audit(labels, m, self.RESIDUALS, 1e-7)

    def test_vacuous_audits(self):
        """With no labels every audit is vacuous."""
        audits = audit(set(), build_zoo("euclidean", n=2), self.RESIDUALS, 1e-7)
        assert set(audits.values()) == {"vacuous"}

    def test_classify_raises_on_contradiction(self, mocker, plan):
        """classify raises when an audit fails."""
        mocker.patch("berwald_scalar.classify._residuals", return_value=dict(self.RESIDUALS))
        with pytest.raises(InconsistencyError):
            classify(build_zoo("euclidean", n=2), None, plan)
