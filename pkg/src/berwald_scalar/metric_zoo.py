"""
Constructors for the metric families used by the engine and its tests.

Field entries (a_ij(x), b_i(x), phi(s)) are jet-aware callables, so every
constructed metric can be differentiated to any order the engine needs.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from . import jets
from .config import AlphaBetaConfig, MetricConfig
from .errors import ConstructionError, ParseError
from .metric_core import MetricSpec, sample_points, validate

RANDERS_NORM_GUARD = 1e-6
CHECK_POINTS = 8

MatrixField = Callable[[Any], Sequence[Sequence[Any]]]
CovectorField = Callable[[Any], Sequence[Any]]


@dataclass(frozen=True)
class RiemannSpec:
    """Riemannian metric a_ij(x); ``matrix(x)`` returns nested rows of entries."""

    dimension: int
    matrix: MatrixField
    label: str = "alpha"


@dataclass(frozen=True)
class OneFormSpec:
    """One-form b_i(x); ``covector(x)`` returns the n components."""

    dimension: int
    covector: CovectorField
    label: str = "beta"


@dataclass(frozen=True)
class AlphaBetaSpec:
    """F = alpha * phi(beta / alpha)."""

    alpha: RiemannSpec
    beta: OneFormSpec
    phi: str = "randers"
    params: dict[str, Any] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.alpha.dimension


# -----------------------------------------------------------------------------
# phi registry
# -----------------------------------------------------------------------------


def _phi_randers(s: Any) -> Any:
    return 1.0 + s


def _phi_square(s: Any) -> Any:
    return (1.0 + s) * (1.0 + s)


def _phi_exponential(s: Any) -> Any:
    return jets.exp(s)


def _phi_quadratic(s: Any) -> Any:
    return 1.0 + s + 0.5 * s * s


PHI: dict[str, Callable[[Any], Any]] = {
    "randers": _phi_randers,
    "square": _phi_square,
    "exponential": _phi_exponential,
    "quadratic": _phi_quadratic,
}


# -----------------------------------------------------------------------------
# Field helpers
# -----------------------------------------------------------------------------


def _is_zero(entry: Any) -> bool:
    return isinstance(entry, int | float) and entry == 0


def quadratic_form(matrix: Sequence[Sequence[Any]], y: Any) -> Any:
    total: Any = 0.0
    n = len(matrix)
    for i in range(n):
        for j in range(n):
            entry = matrix[i][j]
            if _is_zero(entry):
                continue
            total = total + entry * y[..., i] * y[..., j]
    return total


def pairing(covector: Sequence[Any], y: Any) -> Any:
    total: Any = 0.0
    for i, entry in enumerate(covector):
        if _is_zero(entry):
            continue
        total = total + entry * y[..., i]
    return total


def _numeric(entries: Any, batch_shape: tuple[int, ...]) -> np.ndarray:
    if isinstance(entries, list | tuple):
        parts = [_numeric(e, batch_shape) for e in entries]
        return np.stack(parts, axis=len(batch_shape))
    return np.broadcast_to(np.asarray(entries, dtype=float), batch_shape)


def alpha_matrix(spec: RiemannSpec, x: Any) -> np.ndarray:
    """Numeric a_ij(x), shape (..., n, n)."""
    x = np.asarray(x, dtype=float)
    return _numeric(list(map(list, spec.matrix(x))), x.shape[:-1])


def beta_covector(spec: OneFormSpec, x: Any) -> np.ndarray:
    """Numeric b_i(x), shape (..., n)."""
    x = np.asarray(x, dtype=float)
    return _numeric(list(spec.covector(x)), x.shape[:-1])


def beta_norm(spec: AlphaBetaSpec, x: Any) -> np.ndarray:
    """
    Length of beta with respect to alpha, sqrt(a^ij b_i b_j).

    Args:
        spec: (alpha, beta) data
        x: Base point(s), shape (..., n)

    Returns:
        ||beta||_alpha at each base point
    """
    a = alpha_matrix(spec.alpha, x)
    b = beta_covector(spec.beta, x)
    norm2 = np.einsum("...i,...i->...", b, np.linalg.solve(a, b[..., None])[..., 0])
    return np.sqrt(norm2)


def beta_norm_scan(
    spec: AlphaBetaSpec, xs: Any, tolerance: float = 1e-8
) -> tuple[np.ndarray, bool]:
    """
    Evaluate ||beta||_alpha over base points and report whether it is constant.

    Returns:
        (norms, is_constant) where constancy allows a spread of ``tolerance``
    """
    norms = np.atleast_1d(beta_norm(spec, xs))
    spread = float(norms.max() - norms.min())
    return norms, spread <= tolerance * max(1.0, float(np.abs(norms).max()))


# -----------------------------------------------------------------------------
# Builders
# -----------------------------------------------------------------------------


def _checked(spec: MetricSpec) -> MetricSpec:
    points = sample_points(spec, CHECK_POINTS, seed=0)
    report = validate(spec, points)
    if not report.ok:
        assert report.failure is not None
        raise ConstructionError(
            f"{spec.label} failed at check point {report.failure.index}: "
            f"{report.failure.error}: {report.failure.message}"
        )
    return spec


def euclidean_alpha(n: int) -> RiemannSpec:
    rows = [[1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    return RiemannSpec(n, lambda x: rows, label="euclidean")


def constant_alpha(matrix: Sequence[Sequence[float]]) -> RiemannSpec:
    rows = [[float(v) for v in row] for row in matrix]
    return RiemannSpec(len(rows), lambda x: rows, label="constant")


def conformal_alpha(c: Sequence[float]) -> RiemannSpec:
    """a_ij = exp(2 c.x) delta_ij."""
    c = [float(v) for v in c]
    n = len(c)

    def matrix(x: Any) -> list[list[Any]]:
        factor = jets.exp(2.0 * pairing(c, x))
        return [[factor if i == j else 0.0 for j in range(n)] for i in range(n)]

    return RiemannSpec(n, matrix, label="conformal")


def constant_beta(b: Sequence[float]) -> OneFormSpec:
    b = [float(v) for v in b]
    return OneFormSpec(len(b), lambda x: b, label="constant")


def linear_beta(offset: Sequence[float], matrix: Sequence[Sequence[float]]) -> OneFormSpec:
    """b_i(x) = offset_i + matrix_ij x^j."""
    offset = [float(v) for v in offset]
    rows = [[float(v) for v in row] for row in matrix]

    def covector(x: Any) -> list[Any]:
        return [offset[i] + pairing(rows[i], x) for i in range(len(offset))]

    return OneFormSpec(len(offset), covector, label="linear")


def build_riemannian(a: RiemannSpec, label: str | None = None, check: bool = True) -> MetricSpec:
    """F = sqrt(a_ij(x) y^i y^j)."""

    def evaluator(x: Any, y: Any) -> Any:
        return jets.sqrt(quadratic_form(a.matrix(x), y))

    spec = MetricSpec(
        dimension=a.dimension,
        evaluator=evaluator,
        label=label or f"riemannian[{a.label}]",
        kind="riemannian",
    )
    return _checked(spec) if check else spec


def build_minkowski(
    norm: Callable[[Any], Any], dimension: int, label: str = "minkowski", check: bool = True
) -> MetricSpec:
    """x-independent metric F(x, y) = norm(y)."""
    spec = MetricSpec(
        dimension=dimension,
        evaluator=lambda x, y: norm(y),
        label=label,
        kind="minkowski",
        x_independent=True,
    )
    return _checked(spec) if check else spec


def build_alpha_beta(
    spec: AlphaBetaSpec,
    label: str | None = None,
    check: bool = True,
    x_independent: bool = False,
) -> MetricSpec:
    """F = alpha phi(beta / alpha); the Randers case is evaluated as alpha + beta."""
    if spec.alpha.dimension != spec.beta.dimension:
        raise ConstructionError("alpha and beta have different dimensions")
    if spec.phi not in PHI:
        raise ConstructionError(f"unknown phi {spec.phi!r}; expected one of {sorted(PHI)}")
    phi = PHI[spec.phi]
    randers = spec.phi == "randers"

    def evaluator(x: Any, y: Any) -> Any:
        alpha = jets.sqrt(quadratic_form(spec.alpha.matrix(x), y))
        beta = pairing(spec.beta.covector(x), y)
        if randers:
            return alpha + beta
        return alpha * phi(beta / alpha)

    metric = MetricSpec(
        dimension=spec.dimension,
        evaluator=evaluator,
        label=label or f"alpha-beta[{spec.phi}]",
        kind="randers" if randers else "alpha-beta",
        params=dict(spec.params),
        alpha_beta=spec,
        x_independent=x_independent,
    )
    if check:
        samples = sample_points(metric, CHECK_POINTS, seed=0)
        norms = beta_norm(spec, samples.x)
        if randers and np.any(norms >= 1.0 - RANDERS_NORM_GUARD):
            raise ConstructionError(
                f"{metric.label}: ||beta||_alpha = {float(norms.max()):.6f} violates the "
                "Randers bound ||beta|| < 1"
            )
        _checked(metric)
    return metric


def build_randers(
    a: RiemannSpec,
    b: OneFormSpec,
    label: str | None = None,
    check: bool = True,
    x_independent: bool = False,
) -> MetricSpec:
    """Randers metric F = alpha + beta."""
    return build_alpha_beta(
        AlphaBetaSpec(alpha=a, beta=b, phi="randers"),
        label=label or f"randers[{a.label},{b.label}]",
        check=check,
        x_independent=x_independent,
    )


def _inside_unit_ball(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.sum(np.asarray(x) ** 2, axis=-1) < 1.0


def build_funk(n: int, check: bool = True) -> MetricSpec:
    """
    Funk metric of the unit ball.

    F = (sqrt((1 - |x|^2)|y|^2 + <x, y>^2) + <x, y>) / (1 - |x|^2)
    """

    def evaluator(x: Any, y: Any) -> Any:
        r2 = sum(x[..., i] * x[..., i] for i in range(n))
        y2 = sum(y[..., i] * y[..., i] for i in range(n))
        xy = sum(x[..., i] * y[..., i] for i in range(n))
        w = 1.0 - r2
        return (jets.sqrt(w * y2 + xy * xy) + xy) / w

    spec = MetricSpec(
        dimension=n,
        evaluator=evaluator,
        label=f"funk(n={n})",
        domain=_inside_unit_ball,
        sample_box=0.4,
        kind="funk",
        params={"n": n},
    )
    return _checked(spec) if check else spec


# -----------------------------------------------------------------------------
# Named fixtures
# -----------------------------------------------------------------------------


def _euclidean(n: int = 2) -> MetricSpec:
    spec = build_minkowski(
        lambda y: jets.sqrt(sum(y[..., i] * y[..., i] for i in range(n))),
        dimension=n,
        label=f"euclidean(n={n})",
        check=False,
    )
    return _checked(_with(spec, kind="euclidean", params={"n": n}))


def _riemann_diag(n: int = 2) -> MetricSpec:
    """a = diag(exp(2 x1), 1, ..., 1)."""

    def matrix(x: Any) -> list[list[Any]]:
        rows: list[list[Any]] = [[0.0] * n for _ in range(n)]
        rows[0][0] = jets.exp(2.0 * x[..., 0])
        for i in range(1, n):
            rows[i][i] = 1.0
        return rows

    spec = build_riemannian(RiemannSpec(n, matrix, "diag-exp"), label=f"riemann-diag(n={n})")
    return _with(spec, kind="riemann-diag", params={"n": n})


def _minkowski_randers(n: int = 2, b: float = 0.5) -> MetricSpec:
    covector = [b] + [0.0] * (n - 1)
    spec = build_randers(
        euclidean_alpha(n),
        constant_beta(covector),
        label=f"minkowski-randers(n={n},b={b:g})",
        x_independent=True,
    )
    return _with(spec, kind="minkowski-randers", params={"n": n, "b": b})


def _minkowski_square(n: int = 2, b: float = 0.3) -> MetricSpec:
    covector = [b] + [0.0] * (n - 1)
    spec = build_alpha_beta(
        AlphaBetaSpec(euclidean_alpha(n), constant_beta(covector), phi="square"),
        label=f"minkowski-square(n={n},b={b:g})",
        x_independent=True,
    )
    return _with(spec, kind="minkowski-square", params={"n": n, "b": b})


def _berwald_randers(n: int = 2, c: float = 0.5) -> MetricSpec:
    """Randers metric whose one-form is parallel for a flat alpha."""
    if n == 2:

        def matrix(x: Any) -> list[list[Any]]:
            factor = jets.exp(2.0 * x[..., 0])
            return [[factor, 0.0], [0.0, factor]]

        def covector(x: Any) -> list[Any]:
            radius = jets.exp(x[..., 0])
            return [c * radius * jets.cos(x[..., 1]), -c * radius * jets.sin(x[..., 1])]

    elif n == 3:

        def matrix(x: Any) -> list[list[Any]]:
            factor = jets.exp(2.0 * x[..., 0])
            return [[factor, 0.0, 0.0], [0.0, factor, 0.0], [0.0, 0.0, 1.0]]

        def covector(x: Any) -> list[Any]:
            return [0.0, 0.0, c]

    else:
        raise ConstructionError("berwald-randers is available for n = 2 and n = 3")

    spec = build_randers(
        RiemannSpec(n, matrix, "exp-conformal"),
        OneFormSpec(n, covector, "parallel"),
        label=f"berwald-randers(n={n},c={c:g})",
    )
    return _with(spec, kind="berwald-randers", params={"n": n, "c": c})


def _randers_rotation(n: int = 2, k: float = 0.6) -> MetricSpec:
    """Euclidean alpha with the rotation field b = k(-x2, x1, 0, ...); beta is not closed."""

    def covector(x: Any) -> list[Any]:
        return [-k * x[..., 1], k * x[..., 0]] + [0.0] * (n - 2)

    spec = build_randers(
        euclidean_alpha(n),
        OneFormSpec(n, covector, "rotation"),
        label=f"randers-rotation(n={n},k={k:g})",
    )
    return _with(spec, kind="randers-rotation", params={"n": n, "k": k})


def _alpha_beta_exponential(n: int = 3, b: float = 0.2, slope: float = 0.1) -> MetricSpec:
    """alpha exp(beta / alpha) with b(x) = (b + slope x2, 0, ...)."""
    rows = [[0.0] * n for _ in range(n)]
    rows[0][1] = slope
    spec = build_alpha_beta(
        AlphaBetaSpec(
            euclidean_alpha(n),
            linear_beta([b] + [0.0] * (n - 1), rows),
            phi="exponential",
            params={"b": b, "slope": slope},
        ),
        label=f"alpha-beta-exponential(n={n},b={b:g},slope={slope:g})",
    )
    return _with(spec, kind="alpha-beta-exponential", params={"n": n, "b": b, "slope": slope})


def _funk(n: int = 2) -> MetricSpec:
    return build_funk(n)


def funk_randers_data(n: int) -> AlphaBetaSpec:
    """The Funk metric written as alpha + beta (Klein-model alpha)."""

    def matrix(x: Any) -> list[list[Any]]:
        r2 = sum(x[..., i] * x[..., i] for i in range(n))
        w = 1.0 - r2
        inv_w2 = 1.0 / (w * w)
        return [
            [((w if i == j else 0.0) + x[..., i] * x[..., j]) * inv_w2 for j in range(n)]
            for i in range(n)
        ]

    def covector(x: Any) -> list[Any]:
        r2 = sum(x[..., i] * x[..., i] for i in range(n))
        return [x[..., i] / (1.0 - r2) for i in range(n)]

    return AlphaBetaSpec(
        RiemannSpec(n, matrix, "klein"), OneFormSpec(n, covector, "radial"), phi="randers"
    )


def _funk_randers(n: int = 2) -> MetricSpec:
    spec = build_alpha_beta(funk_randers_data(n), label=f"funk-randers(n={n})", check=False)
    spec = _with(spec, kind="funk-randers", params={"n": n}, domain=_inside_unit_ball)
    return _checked(_with(spec, sample_box=0.4))


def _with(spec: MetricSpec, **changes: Any) -> MetricSpec:
    return replace(spec, **changes)


@dataclass(frozen=True)
class ZooEntry:
    builder: Callable[..., MetricSpec]
    description: str
    defaults: dict[str, Any]


ZOO: dict[str, ZooEntry] = {
    "euclidean": ZooEntry(_euclidean, "Euclidean norm |y|", {"n": 2}),
    "riemann-diag": ZooEntry(
        _riemann_diag, "Riemannian diag(exp(2 x1), 1, ...)", {"n": 2}
    ),
    "minkowski-randers": ZooEntry(
        _minkowski_randers, "Minkowski Randers norm |y| + b y1", {"n": 2, "b": 0.5}
    ),
    "minkowski-square": ZooEntry(
        _minkowski_square, "Minkowski square norm (|y| + b y1)^2 / |y|", {"n": 2, "b": 0.3}
    ),
    "berwald-randers": ZooEntry(
        _berwald_randers, "Randers metric with a parallel one-form (Berwald)", {"n": 2, "c": 0.5}
    ),
    "randers-rotation": ZooEntry(
        _randers_rotation, "Randers metric with the non-closed rotation form", {"n": 2, "k": 0.6}
    ),
    "alpha-beta-exponential": ZooEntry(
        _alpha_beta_exponential,
        "alpha exp(beta/alpha) with a linear one-form",
        {"n": 3, "b": 0.2, "slope": 0.1},
    ),
    "funk": ZooEntry(_funk, "Funk metric of the unit ball", {"n": 2}),
    "funk-randers": ZooEntry(_funk_randers, "Funk metric in Randers form", {"n": 2}),
}


def build_zoo(name: str, **params: Any) -> MetricSpec:
    """
    Build a named zoo metric.

    Raises:
        ParseError: If the name or parameters are unknown
    """
    if name not in ZOO:
        raise ParseError(f"unknown zoo metric {name!r}; expected one of {sorted(ZOO)}")
    entry = ZOO[name]
    unknown = set(params) - set(entry.defaults)
    if unknown:
        raise ParseError(f"unknown parameters for {name}: {sorted(unknown)}")
    merged = {**entry.defaults, **params}
    return entry.builder(**merged)


def _alpha_from_config(cfg: AlphaBetaConfig) -> RiemannSpec:
    n = cfg.dimension
    if cfg.alpha.euclidean:
        return euclidean_alpha(n)
    if cfg.alpha.conformal is not None:
        if len(cfg.alpha.conformal) != n:
            raise ParseError(f"alpha.conformal needs {n} entries")
        return conformal_alpha(cfg.alpha.conformal)
    assert cfg.alpha.constant is not None
    matrix = np.asarray(cfg.alpha.constant, dtype=float)
    if matrix.shape != (n, n):
        raise ParseError(f"alpha.constant must be {n}x{n}")
    return constant_alpha(matrix.tolist())


def _beta_from_config(cfg: AlphaBetaConfig) -> OneFormSpec:
    n = cfg.dimension
    if cfg.beta.constant is not None:
        if len(cfg.beta.constant) != n:
            raise ParseError(f"beta.constant needs {n} entries")
        return constant_beta(cfg.beta.constant)
    assert cfg.beta.linear is not None
    offset = cfg.beta.linear.offset
    matrix = np.asarray(cfg.beta.linear.matrix, dtype=float)
    if len(offset) != n or matrix.shape != (n, n):
        raise ParseError(f"beta.linear needs an offset of {n} entries and a {n}x{n} matrix")
    return linear_beta(offset, matrix.tolist())


def metric_from_config(cfg: MetricConfig) -> MetricSpec:
    """Build the metric named by a run configuration."""
    if cfg.zoo is not None:
        return build_zoo(cfg.zoo, **cfg.params)
    assert cfg.alpha_beta is not None
    ab = cfg.alpha_beta
    alpha = _alpha_from_config(ab)
    beta = _beta_from_config(ab)
    x_independent = (ab.alpha.euclidean or ab.alpha.constant is not None) and (
        ab.beta.constant is not None
    )
    return build_alpha_beta(
        AlphaBetaSpec(alpha, beta, phi=ab.phi, params=ab.model_dump()),
        label=f"alpha-beta[{ab.phi}](n={ab.dimension})",
        x_independent=x_independent,
    )
