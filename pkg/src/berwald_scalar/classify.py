"""Metric classification over a sample plan, with implication audits."""

from __future__ import annotations

import numpy as np
from pydantic import BaseModel, Field

from .config import SamplePlanConfig, ToleranceConfig
from .errors import InconsistencyError, RankError
from .metric_core import MetricSpec, PointOnTM, fiber_directions, sample_points
from .spray_curvature import CurvatureBundle, curvature_bundle
from .utils import log
from .volume_scurv import VolumeForm, fit_weak_isotropic

LABELS = (
    "Berwald",
    "Landsberg",
    "WeakLandsberg",
    "VanishingE",
    "VanishingBerwaldScalar",
    "IsotropicE",
    "WeakIsotropicS",
)

# label -> labels it implies
CLOSURE = {
    "Berwald": ("Landsberg", "VanishingE"),
    "Landsberg": ("WeakLandsberg",),
    "VanishingE": ("VanishingBerwaldScalar", "IsotropicE"),
}


class ClassificationResult(BaseModel):
    metric: str
    volume: str | None
    labels: list[str]
    residuals: dict[str, float]
    samples: int
    thresholds: dict[str, float]
    audits: dict[str, str] = Field(default_factory=dict)
    notes: list[str] = Field(default_factory=list)


def close_labels(labels: set[str]) -> set[str]:
    """Monotone closure under the implications in CLOSURE."""
    closed = set(labels)
    changed = True
    while changed:
        changed = False
        for label in list(closed):
            for implied in CLOSURE.get(label, ()):
                if implied not in closed:
                    closed.add(implied)
                    changed = True
    return closed


def _max_abs(tensor: np.ndarray, point_axes: int = 1) -> np.ndarray:
    return np.abs(tensor).reshape(*tensor.shape[:point_axes], -1).max(axis=-1)


def _plan_points(m: MetricSpec, plan: SamplePlanConfig) -> PointOnTM:
    bases = sample_points(m, plan.count, plan.seed, plan.x_box, plan.y_mode)
    directions = fiber_directions(m.dimension, plan.fiber, plan.seed)
    scale = np.linalg.norm(bases.y, axis=-1)
    x = np.repeat(bases.x[:, None, :], plan.fiber, axis=1)
    y = scale[:, None, None] * directions[None, :, :]
    return PointOnTM(x, y)


def _residuals(bundle: CurvatureBundle) -> dict[str, float]:
    """Per-label residuals, each normalised by 1 + max|g^-1| F per point."""
    ginv_max = np.abs(bundle.ginv).reshape(*bundle.ginv.shape[:-2], -1).max(axis=-1)
    scale = 1.0 + ginv_max * bundle.F
    point_axes = bundle.F.ndim

    def worst(values: np.ndarray) -> float:
        return float(np.max(values / scale))

    e = bundle.e
    spread = e.max(axis=-1) - e.min(axis=-1)
    return {
        "Berwald": worst(_max_abs(bundle.B, point_axes)),
        "Landsberg": worst(_max_abs(bundle.L, point_axes)),
        "WeakLandsberg": worst(_max_abs(bundle.J, point_axes)),
        "VanishingE": worst(_max_abs(bundle.E, point_axes)),
        "VanishingBerwaldScalar": worst(np.abs(e)),
        "IsotropicE": max(
            worst(bundle.isotropy),
            float(np.max(spread / (1.0 + np.abs(e).max(axis=-1)))),
        ),
    }


def _weak_isotropic_residual(bundle: CurvatureBundle) -> float:
    assert bundle.S is not None
    worst = 0.0
    for b in range(bundle.F.shape[0]):
        fit = fit_weak_isotropic(bundle.F[b], bundle.point.y[b], bundle.S[b])
        worst = max(worst, fit.residual / max(1.0, float(np.max(np.abs(bundle.S[b])))))
    return worst


def audit(
    labels: set[str], m: MetricSpec, residuals: dict[str, float], tolerance: float
) -> dict[str, str]:
    """
    Check the proven implications against the measured labels.

    Raises:
        InconsistencyError: When a hypothesis holds on the samples but the conclusion fails
    """
    audits: dict[str, str] = {}

    fiber_constant_e = residuals["IsotropicE"] < tolerance or "IsotropicE" in labels
    if "VanishingBerwaldScalar" in labels:
        if "VanishingE" not in labels:
            raise InconsistencyError(
                f"{m.label}: e vanishes on all samples but max|E| residual is "
                f"{residuals['VanishingE']:.3e}"
            )
        audits["e=0 => E=0"] = "holds"
    else:
        audits["e=0 => E=0"] = "vacuous"
    audits["e constant => E isotropic"] = "holds" if fiber_constant_e else "vacuous"

    if "Landsberg" in labels and "VanishingBerwaldScalar" in labels:
        if "Berwald" not in labels:
            raise InconsistencyError(
                f"{m.label}: Landsberg with e = 0 but B residual is {residuals['Berwald']:.3e}"
            )
        audits["Landsberg and e=0 => Berwald"] = "holds"
    else:
        audits["Landsberg and e=0 => Berwald"] = "vacuous"

    if m.alpha_beta is not None and m.dimension >= 3:
        if "WeakLandsberg" in labels and "VanishingBerwaldScalar" in labels:
            if "Berwald" not in labels:
                raise InconsistencyError(
                    f"{m.label}: (alpha, beta) metric with J = 0 and e = 0 but B residual is "
                    f"{residuals['Berwald']:.3e}"
                )
            audits["(alpha,beta), J=0 and e=0 => Berwald"] = "holds"
        else:
            audits["(alpha,beta), J=0 and e=0 => Berwald"] = "vacuous"
    return audits


def classify(
    m: MetricSpec,
    vf: VolumeForm | None,
    plan: SamplePlanConfig,
    tolerances: ToleranceConfig | None = None,
) -> ClassificationResult:
    """
    Classify a metric on ``plan.count`` base points with ``plan.fiber`` directions each.

    Labels use scale-relative thresholds. IsotropicE means E = e/(n-1) h with e
    constant along every sampled fiber; constancy is certified only on those fibers.

    Args:
        m: Validated metric
        vf: Volume form; without one, WeakIsotropicS is not evaluated
        plan: Sample plan
        tolerances: Thresholds (defaults from settings)

    Returns:
        ClassificationResult

    Raises:
        InconsistencyError: If the implication audit fails
    """
    tolerances = tolerances or ToleranceConfig()
    points = _plan_points(m, plan)
    bundle = curvature_bundle(m, points, vf)
    residuals = _residuals(bundle)

    labels = {name for name, value in residuals.items() if value < tolerances.algebraic}
    notes = ["IsotropicE is certified on sampled fibers only"]
    if vf is not None:
        try:
            residuals["WeakIsotropicS"] = _weak_isotropic_residual(bundle)
            if residuals["WeakIsotropicS"] < tolerances.discretized:
                labels.add("WeakIsotropicS")
        except RankError as e:
            notes.append(f"WeakIsotropicS not evaluated: {e}")
    else:
        notes.append("WeakIsotropicS needs a volume form")

    labels = close_labels(labels)
    audits = audit(labels, m, residuals, tolerances.algebraic)
    ordered = [label for label in LABELS if label in labels]
    log(f"Classified {m.label}: {', '.join(ordered) or 'no labels'}")

    return ClassificationResult(
        metric=m.label,
        volume=None if vf is None else vf.label,
        labels=ordered,
        residuals=residuals,
        samples=points.count,
        thresholds={"algebraic": tolerances.algebraic, "discretized": tolerances.discretized},
        audits=audits,
        notes=notes,
    )
