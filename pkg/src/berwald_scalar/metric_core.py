"""
Finsler metric abstraction and the zeroth layer of tensors.

A metric is given by an evaluator ``F(x, y)`` written with the jet-aware helpers
of ``berwald_scalar.jets`` (``jets.sqrt``, ``jets.exp``, ...), so the same code
runs on plain arrays and on jets. ``x`` and ``y`` have shape ``(..., n)``;
components are read with ``x[..., i]``.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, NamedTuple

import numpy as np
from pydantic import BaseModel
from scipy.stats import norm, qmc

from . import jets
from .config import settings
from .errors import DomainError, FinslerError, HomogeneityError, NotStronglyConvex

MIN_FIBER_NORM = 1e-8
CONVEXITY_THRESHOLD = 1e-10
EULER_TOLERANCE = 1e-10
HOMOGENEITY_FACTORS = (0.5, 2.0)

Evaluator = Callable[[Any, Any], Any]
DomainPredicate = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _everywhere(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.ones(np.shape(x)[:-1], dtype=bool)


@dataclass(frozen=True)
class MetricSpec:
    """
    Declarative description of a Finsler metric.

    Attributes:
        dimension: Base dimension n >= 2
        evaluator: Jet-aware F(x, y), positively 1-homogeneous in y
        label: Human-readable name used in reports
        domain: Vectorised predicate on (x, y); y != 0 is checked separately
        sample_box: Half-width of the base box used for sampling
        kind: Family name (zoo key or "alpha-beta")
        params: Construction parameters, echoed in reports
        alpha_beta: (alpha, beta) data when the metric is of that form
        x_independent: True for Minkowski norms (constant base volume)
    """

    dimension: int
    evaluator: Evaluator
    label: str
    domain: DomainPredicate = _everywhere
    sample_box: float = 0.5
    kind: str = "custom"
    params: dict[str, Any] = field(default_factory=dict)
    alpha_beta: Any = None
    x_independent: bool = False

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise ValueError(f"metric dimension must be >= 2, got {self.dimension}")

    def __call__(self, x: Any, y: Any) -> Any:
        return self.evaluator(x, y)


@dataclass(frozen=True)
class PointOnTM:
    """A point (x, y) of the slit tangent bundle; leading batch axes are allowed."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.shape != y.shape or x.ndim == 0:
            raise ValueError(f"x and y must share a shape (..., n), got {x.shape} and {y.shape}")
        if np.any(np.linalg.norm(y, axis=-1) < MIN_FIBER_NORM):
            raise DomainError(f"fiber vector below {MIN_FIBER_NORM} in norm")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.x.shape[:-1]

    @property
    def count(self) -> int:
        return int(np.prod(self.batch_shape, dtype=int))

    def take(self, index: Any) -> PointOnTM:
        return PointOnTM(self.x[index], self.y[index])

    def scaled(self, factor: float) -> PointOnTM:
        return PointOnTM(self.x, self.y * factor)


@dataclass(frozen=True)
class FundamentalTensor:
    g: np.ndarray
    ginv: np.ndarray
    detg: np.ndarray


class MeanCartan(NamedTuple):
    C: np.ndarray
    I: np.ndarray  # noqa: E741


def require_domain(m: MetricSpec, p: PointOnTM) -> None:
    """Raise DomainError unless every (x, y) of ``p`` satisfies the domain predicate."""
    if p.x.shape[-1] != m.dimension:
        raise DomainError(f"point has dimension {p.x.shape[-1]}, metric has {m.dimension}")
    inside = np.asarray(m.domain(p.x, p.y), dtype=bool)
    if not np.all(inside):
        first = int(np.argmin(inside.reshape(-1)))
        raise DomainError(f"point {first} lies outside the domain of {m.label}")


def evaluate(m: MetricSpec, x: Any, y: Any) -> np.ndarray:
    """F(x, y) on plain arrays."""
    value = np.asarray(m(np.asarray(x, dtype=float), np.asarray(y, dtype=float)), dtype=float)
    if not np.all(np.isfinite(value)):
        raise DomainError(f"{m.label} evaluated to a non-finite value")
    return value


class FinslerJets:
    """
    Shared jet pipeline at a (batched) point: lifted x and y, F, F^2, g and g^-1.

    All 2n coordinates are lifted into one engine of order K; variables
    0..n-1 are x, n..2n-1 are y.
    """

    def __init__(self, m: MetricSpec, p: PointOnTM, order: int | None = None):
        require_domain(m, p)
        self.metric = m
        self.point = p
        self.n = m.dimension
        self.order = settings.jet_order if order is None else order
        z = jets.variables(np.concatenate([p.x, p.y], axis=-1), self.order)
        self.engine = z.engine
        self.x = z[..., : self.n]
        self.y = z[..., self.n :]

    def xvar(self, i: int) -> int:
        return i

    def yvar(self, i: int) -> int:
        return self.n + i

    @cached_property
    def F(self) -> jets.Jet:
        value = self.metric(self.x, self.y)
        if not isinstance(value, jets.Jet):
            raise TypeError(f"evaluator of {self.metric.label} did not propagate jets")
        if not np.all(np.isfinite(value.coeffs)):
            raise DomainError(f"{self.metric.label} produced non-finite derivatives")
        return value

    @cached_property
    def F2(self) -> jets.Jet:
        return self.F * self.F

    @cached_property
    def g(self) -> jets.Jet:
        n = self.n
        dF2 = [self.F2.diff(self.yvar(i)) for i in range(n)]
        rows = [
            jets.stack([dF2[i].diff(self.yvar(j)) * 0.5 for j in range(n)], axis=-1)
            for i in range(n)
        ]
        g = jets.stack(rows, axis=-2)
        # symmetrise round-off from the two derivative orders
        return (g + g.swapaxes(-1, -2)) * 0.5

    @cached_property
    def fundamental(self) -> FundamentalTensor:
        """Checked fundamental tensor at the point (convexity, then Euler identity)."""
        g0 = self.g.value
        eigenvalues = np.linalg.eigvalsh(g0)
        trace = np.trace(g0, axis1=-2, axis2=-1)
        if np.any(eigenvalues[..., 0] <= CONVEXITY_THRESHOLD * np.abs(trace)):
            worst = float(np.min(eigenvalues[..., 0]))
            raise NotStronglyConvex(
                f"{self.metric.label}: fundamental tensor eigenvalue {worst:.3e} "
                f"<= {CONVEXITY_THRESHOLD} * trace"
            )
        y = self.point.y
        gyy = np.einsum("...i,...ij,...j->...", y, g0, y)
        f2 = self.F2.value
        if np.any(np.abs(gyy - f2) > EULER_TOLERANCE * np.maximum(np.abs(f2), 1e-300)):
            raise HomogeneityError(f"{self.metric.label}: g(y, y) != F^2 (Euler identity)")
        return FundamentalTensor(g=g0, ginv=np.linalg.inv(g0), detg=np.linalg.det(g0))

    @cached_property
    def ginv(self) -> jets.Jet:
        self.fundamental  # noqa: B018
        return jets.inv(self.g)

    @cached_property
    def dg_y(self) -> np.ndarray:
        """Values of d g_ij / d y^k, indexed [..., i, j, k]."""
        return np.stack([self.g.diff(self.yvar(k)).value for k in range(self.n)], axis=-1)

    @cached_property
    def dg_x(self) -> np.ndarray:
        """Values of d g_ij / d x^k, indexed [..., i, j, k]."""
        return np.stack([self.g.diff(self.xvar(k)).value for k in range(self.n)], axis=-1)

    @cached_property
    def lowered_y(self) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.fundamental.g, self.point.y)

    @cached_property
    def cartan(self) -> np.ndarray:
        # A_ijk = 1/4 F [F^2]_{y^i y^j y^k} = 1/2 F d g_ij / d y^k
        return 0.5 * self.F.value[..., None, None, None] * self.dg_y

    @cached_property
    def mean_cartan(self) -> MeanCartan:
        ginv = self.fundamental.ginv
        F = self.F.value
        mean = np.einsum("...ij,...ijk->...k", ginv, self.cartan) / F[..., None]
        return MeanCartan(C=mean, I=F[..., None] * mean)

    @cached_property
    def angular(self) -> np.ndarray:
        yl = self.lowered_y
        outer = yl[..., :, None] * yl[..., None, :]
        return self.fundamental.g - outer / self.F2.value[..., None, None]


def fundamental_tensor(m: MetricSpec, p: PointOnTM) -> FundamentalTensor:
    """
    Fundamental tensor g_ij = 1/2 d^2 F^2 / dy^i dy^j at ``p``.

    Raises:
        DomainError: If ``p`` is outside the metric's domain
        NotStronglyConvex: If an eigenvalue is <= 1e-10 * trace(g)
        HomogeneityError: If g(y, y) differs from F^2 beyond 1e-10 relative
    """
    return FinslerJets(m, p, order=2).fundamental


def cartan_tensor(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    """Cartan tensor A_ijk = 1/4 F d^3 F^2 / dy^i dy^j dy^k."""
    fj = FinslerJets(m, p, order=3)
    fj.fundamental  # noqa: B018
    return fj.cartan


def mean_cartan(m: MetricSpec, p: PointOnTM) -> MeanCartan:
    """Mean Cartan torsion C_k = g^ij A_ijk / F, and I = F C."""
    return FinslerJets(m, p, order=3).mean_cartan


def angular_metric(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    """Angular metric h_ij = g_ij - y_i y_j / F^2."""
    return FinslerJets(m, p, order=2).angular


# -----------------------------------------------------------------------------
# Validation
# -----------------------------------------------------------------------------


class ValidationFailure(BaseModel):
    index: int
    error: str
    message: str


class ValidationReport(BaseModel):
    metric: str
    ok: bool
    checked: int
    failure: ValidationFailure | None = None


def _check_sample(m: MetricSpec, p: PointOnTM) -> None:
    require_domain(m, p)
    FinslerJets(m, p, order=2).fundamental  # noqa: B018
    value = float(evaluate(m, p.x, p.y))
    if value <= 0:
        raise DomainError(f"F = {value:.3e} is not positive")
    for factor in HOMOGENEITY_FACTORS:
        scaled = float(evaluate(m, p.x, factor * p.y))
        if abs(scaled - factor * value) > EULER_TOLERANCE * max(abs(factor * value), 1.0):
            raise HomogeneityError(f"F(x, {factor} y) != {factor} F(x, y)")


def validate(m: MetricSpec, samples: PointOnTM | list[PointOnTM]) -> ValidationReport:
    """
    Check domain, strong convexity, positivity and homogeneity at every sample.

    Checks run in that order per sample and stop at the first failure. Never raises
    for metric failures; they are reported instead.

    Args:
        m: Metric under test
        samples: Batched points or a list of single points

    Returns:
        ValidationReport with the first failure, if any
    """
    if isinstance(samples, PointOnTM):
        points = [samples.take(i) for i in np.ndindex(*samples.batch_shape)]
    else:
        points = list(samples)
    if not points:
        raise ValueError("validate needs at least one sample")

    for index, point in enumerate(points):
        try:
            _check_sample(m, point)
        except (FinslerError, ArithmeticError, np.linalg.LinAlgError, ValueError) as e:
            return ValidationReport(
                metric=m.label,
                ok=False,
                checked=index + 1,
                failure=ValidationFailure(index=index, error=type(e).__name__, message=str(e)),
            )
    return ValidationReport(metric=m.label, ok=True, checked=len(points))


# -----------------------------------------------------------------------------
# Sampling
# -----------------------------------------------------------------------------


def _sphere(u: np.ndarray) -> np.ndarray:
    gaussian = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return gaussian / np.linalg.norm(gaussian, axis=-1, keepdims=True)


def sample_points(
    m: MetricSpec,
    count: int,
    seed: int = 0,
    x_box: float | None = None,
    y_mode: str = "unit",
) -> PointOnTM:
    """
    Seeded low-discrepancy points on the metric's domain.

    x is drawn from the box [-x_box, x_box]^n (rejecting points outside the
    domain), y from the unit sphere, optionally rescaled by a factor in [0.5, 2].

    Args:
        m: Metric to sample
        count: Number of points
        seed: Scrambling seed of the Halton sequence
        x_box: Half-width of the base box (defaults to the metric's sample_box)
        y_mode: "unit" or "scaled"

    Returns:
        Batched PointOnTM of shape (count, n)
    """
    if y_mode not in ("unit", "scaled"):
        raise ValueError(f"unknown y_mode {y_mode!r}")
    n = m.dimension
    box = m.sample_box if x_box is None else x_box
    sampler = qmc.Halton(d=2 * n + 1, scramble=True, seed=seed)
    xs: list[np.ndarray] = []
    ys: list[np.ndarray] = []
    accepted = 0
    for _ in range(50):
        u = sampler.random(max(2 * count, 16))
        x = box * (2.0 * u[:, :n] - 1.0)
        y = _sphere(u[:, n : 2 * n])
        if y_mode == "scaled":
            y = y * (0.5 * 4.0 ** u[:, 2 * n])[:, None]
        keep = np.asarray(m.domain(x, y), dtype=bool)
        xs.append(x[keep])
        ys.append(y[keep])
        accepted += int(keep.sum())
        if accepted >= count:
            break
    if accepted < count:
        raise DomainError(f"could not draw {count} admissible points for {m.label}")
    return PointOnTM(np.concatenate(xs)[:count], np.concatenate(ys)[:count])


def fiber_directions(n: int, count: int, seed: int = 0) -> np.ndarray:
    """Unit fiber directions; equally spaced angles for n = 2, Halton otherwise."""
    if n == 2:
        theta = 2.0 * np.pi * (np.arange(count) + 0.5) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    sampler = qmc.Halton(d=n, scramble=True, seed=seed)
    return _sphere(sampler.random(count))


def fiber_points(m: MetricSpec, x: Any, count: int, seed: int = 0) -> PointOnTM:
    """``count`` fiber points at a fixed base point x."""
    x = np.asarray(x, dtype=float)
    y = fiber_directions(m.dimension, count, seed)
    return PointOnTM(np.broadcast_to(x, y.shape).copy(), y)
