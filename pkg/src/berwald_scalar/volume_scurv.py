"""
Volume forms, distortion and S-curvature.

The base densities are fiber integrals over the unit sphere:

    BH:  sigma(x) = omega_n / vol{F(x, .) < 1},   vol = (1/n) int F(x, u)^-n du
    HT:  sigma(x) = 1/(n omega_n) int det g(x, u) F(x, u)^-n du

Their x-derivatives come from evaluating the same quadrature with jet-lifted x,
so ln sigma arrives as a jet in the base variables.
"""

from __future__ import annotations

import importlib
from collections.abc import Callable
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Any, Literal, NamedTuple

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import gamma

from . import jets
from .config import VolumeConfig, settings
from .errors import DomainError, ParseError, QuadratureError, RankError
from .metric_core import MetricSpec, PointOnTM, fiber_points
from .spray_curvature import SprayJets

HT_NODE_CHUNK = 512

VolumeKind = Literal["bh", "ht", "custom"]


@dataclass(frozen=True)
class VolumeForm:
    """
    Base volume sigma(x) dx^1 ... dx^n.

    Attributes:
        kind: "bh" (Busemann-Hausdorff), "ht" (Holmes-Thompson) or "custom"
        resolution: Quadrature nodes (n = 2) or polar nodes (n = 3); None uses settings
        scale: Constant factor k applied to sigma
        density: Jet-aware sigma(x) for custom volumes
        reference: "<module>:<callable>" of a custom density, for reports
    """

    kind: VolumeKind = "bh"
    resolution: int | None = None
    scale: float = 1.0
    density: Callable[[Any], Any] | None = None
    reference: str | None = None

    def __post_init__(self) -> None:
        if self.kind == "custom" and self.density is None:
            raise ValueError("custom volume form needs a density")
        if self.scale <= 0:
            raise ValueError("volume scale must be positive")

    @property
    def label(self) -> str:
        name = f"custom:{self.reference}" if self.kind == "custom" else self.kind
        return name if self.scale == 1.0 else f"{name}*{self.scale:g}"


def resolve_density(reference: str) -> Callable[[Any], Any]:
    """Import ``<module>:<callable>``."""
    module_name, _, attr = reference.partition(":")
    if not module_name or not attr:
        raise ParseError(f"custom volume reference {reference!r} is not '<module>:<callable>'")
    try:
        module = importlib.import_module(module_name)
        density = getattr(module, attr)
    except (ImportError, AttributeError) as e:
        raise ParseError(f"cannot load custom volume {reference!r}: {e}") from e
    if not callable(density):
        raise ParseError(f"custom volume {reference!r} is not callable")
    return density


def volume_form_from_config(cfg: VolumeConfig | str, resolution: int | None = None) -> VolumeForm:
    """Build a VolumeForm from "bh" | "ht" | "custom:<module>:<callable>" or a VolumeConfig."""
    if isinstance(cfg, str):
        cfg = VolumeConfig.model_validate(cfg)
    if cfg.kind == "custom":
        assert cfg.custom is not None
        return VolumeForm(
            kind="custom",
            scale=cfg.scale,
            density=resolve_density(cfg.custom),
            reference=cfg.custom,
            resolution=resolution,
        )
    return VolumeForm(kind=cfg.kind, scale=cfg.scale, resolution=resolution)


# -----------------------------------------------------------------------------
# Quadrature
# -----------------------------------------------------------------------------


def unit_ball_volume(n: int) -> float:
    return float(np.pi ** (n / 2) / gamma(n / 2 + 1))


def composite_gauss_legendre(
    a: float, b: float, count: int, panel: int | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """``count`` Gauss-Legendre nodes on [a, b], in panels of ``panel`` nodes when it divides."""
    panel = settings.quadrature_panel if panel is None else panel
    if count < 1:
        raise QuadratureError("quadrature needs at least one node")
    if panel > 0 and count > panel and count % panel == 0:
        panels, per_panel = count // panel, panel
    else:
        panels, per_panel = 1, count
    x, w = leggauss(per_panel)
    edges = np.linspace(a, b, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]
    half = 0.5 * (edges[1:] - edges[:-1])[:, None]
    return (mid + half * x).ravel(), (half * w).ravel()


@lru_cache(maxsize=16)
def sphere_quadrature(n: int, resolution: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """
    Nodes and weights on the unit sphere S^{n-1}.

    n = 2: composite Gauss-Legendre in the angle on [0, 2 pi].
    n = 3: Gauss-Legendre in the polar angle (weighted by sin) times a composite
    Gauss-Legendre azimuth with twice as many nodes.
    """
    if n == 2:
        count = settings.quadrature_nodes if resolution is None else resolution
        theta, weights = composite_gauss_legendre(0.0, 2.0 * np.pi, count)
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1), weights
    if n == 3:
        polar = settings.quadrature_polar if resolution is None else resolution
        phi, w_phi = composite_gauss_legendre(0.0, np.pi, polar)
        psi, w_psi = composite_gauss_legendre(0.0, 2.0 * np.pi, 2 * polar)
        P, S = np.meshgrid(phi, psi, indexing="ij")
        nodes = np.stack(
            [np.sin(P) * np.cos(S), np.sin(P) * np.sin(S), np.cos(P)], axis=-1
        ).reshape(-1, 3)
        weights = (w_phi[:, None] * np.sin(phi)[:, None] * w_psi[None, :]).ravel()
        return nodes, weights
    raise QuadratureError(f"fiber quadrature is available for n = 2 and n = 3, not n = {n}")


def _as_jet(value: Any, engine: jets.JetEngine) -> jets.Jet:
    return value if isinstance(value, jets.Jet) else jets.Jet.constant(engine, value)


def _check_rays(values: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise QuadratureError(f"{what} is nonpositive or non-finite along a ray")


def _bh_log_sigma(m: MetricSpec, x: np.ndarray, order: int, resolution: int | None) -> jets.Jet:
    n = m.dimension
    nodes, weights = sphere_quadrature(n, resolution)
    X = jets.variables(x[None, :], order)
    F = _as_jet(m(X, nodes), X.engine)
    _check_rays(F.value, "F")
    body = (jets.power(F, -n) * weights).sum() * (1.0 / n)
    return jets.log(body) * -1.0 + np.log(unit_ball_volume(n))


def _determinant(g: jets.Jet, n: int) -> jets.Jet:
    if n == 2:
        return g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    total: Any = 0.0
    for j in range(n):
        rest = [k for k in range(n) if k != j]
        minor = jets.stack(
            [jets.stack([g[..., r, c] for c in rest], axis=-1) for r in range(1, n)], axis=-2
        )
        total = total + g[..., 0, j] * _determinant(minor, n - 1) * (-1.0) ** j
    return total


def _ht_log_sigma(m: MetricSpec, x: np.ndarray, order: int, resolution: int | None) -> jets.Jet:
    n = m.dimension
    nodes, weights = sphere_quadrature(n, resolution)
    base = jets.get_engine(n, order)
    var_map = list(range(n)) + [None] * n
    integral = jets.Jet.constant(base, 0.0)
    for start in range(0, len(nodes), HT_NODE_CHUNK):
        u = nodes[start : start + HT_NODE_CHUNK]
        z = jets.variables(np.concatenate([np.broadcast_to(x, u.shape), u], axis=-1), order + 2)
        F = _as_jet(m(z[..., :n], z[..., n:]), z.engine)
        _check_rays(F.value, "F")
        F2 = F * F
        dF2 = [F2.diff(n + i) for i in range(n)]
        g = jets.stack(
            [jets.stack([dF2[i].diff(n + j) * 0.5 for j in range(n)], axis=-1) for i in range(n)],
            axis=-2,
        )
        det = jets.recast(_determinant(g, n), base, var_map)
        _check_rays(det.value, "det g")
        F_x = jets.recast(F, base, var_map)
        integrand = det * jets.power(F_x, -n)
        integral = integral + (integrand * weights[start : start + HT_NODE_CHUNK]).sum()
    return jets.log(integral * (1.0 / (n * unit_ball_volume(n))))


def _custom_log_sigma(vf: VolumeForm, x: np.ndarray, n: int, order: int) -> jets.Jet:
    assert vf.density is not None
    X = jets.variables(x, order)
    sigma = _as_jet(vf.density(X), X.engine)
    if np.any(sigma.value <= 0) or not np.all(np.isfinite(sigma.coeffs)):
        raise DomainError("custom volume density is not positive")
    return jets.log(sigma)


def log_sigma(m: MetricSpec, vf: VolumeForm, x: Any, order: int) -> jets.Jet:
    """
    ln sigma(x) as a jet in the n base variables.

    Computed once per distinct base point.

    Args:
        m: Metric
        vf: Volume form
        x: Base points, shape (..., n)
        order: Jet order in x

    Returns:
        Jet of shape x.shape[:-1] in engine (n, order)
    """
    n = m.dimension
    x = np.asarray(x, dtype=float)
    flat = x.reshape(-1, n)
    unique, inverse = np.unique(flat, axis=0, return_inverse=True)
    engine = jets.get_engine(n, order)
    rows = np.zeros((len(unique), engine.size))
    for r, xr in enumerate(unique):
        if vf.kind == "bh":
            value = _bh_log_sigma(m, xr, order, vf.resolution)
        elif vf.kind == "ht":
            value = _ht_log_sigma(m, xr, order, vf.resolution)
        else:
            value = _custom_log_sigma(vf, xr, n, order)
        rows[r] = value.coeffs
    rows[:, 0] += np.log(vf.scale)
    coeffs = rows[inverse.reshape(-1)].reshape(x.shape[:-1] + (engine.size,))
    return jets.Jet(engine, coeffs)


def sigma(m: MetricSpec, vf: VolumeForm, x: Any) -> np.ndarray:
    """sigma(x) values."""
    return np.exp(log_sigma(m, vf, x, 0).value)


def bh_sigma(m: MetricSpec, x: Any, resolution: int | None = None) -> float:
    """Busemann-Hausdorff density omega_n / vol{F(x, .) < 1} at one base point."""
    return float(sigma(m, VolumeForm("bh", resolution=resolution), np.asarray(x)[None, :])[0])


def ht_sigma(m: MetricSpec, x: Any, resolution: int | None = None) -> float:
    """Holmes-Thompson density at one base point (n <= 3)."""
    return float(sigma(m, VolumeForm("ht", resolution=resolution), np.asarray(x)[None, :])[0])


# -----------------------------------------------------------------------------
# Distortion and S-curvature
# -----------------------------------------------------------------------------


class ScurvJets:
    """Distortion and S-curvature jets on top of a SprayJets pipeline."""

    def __init__(self, sj: SprayJets, vf: VolumeForm):
        self.sj = sj
        self.vf = vf

    @cached_property
    def tau(self) -> jets.Jet:
        sj = self.sj
        sj.fundamental  # noqa: B018
        ln_sigma = log_sigma(sj.metric, self.vf, sj.point.x, sj.order - 2)
        ln_sigma = jets.recast(ln_sigma, sj.engine, list(range(sj.n)))
        return jets.logdet(sj.g) * 0.5 - ln_sigma

    @cached_property
    def S(self) -> jets.Jet:
        sj = self.sj
        total: Any = 0.0
        for m in range(sj.n):
            total = (
                total
                + sj.y[..., m] * self.tau.diff(sj.xvar(m))
                - sj.G[..., m] * self.tau.diff(sj.yvar(m)) * 2.0
            )
        return total

    @cached_property
    def dtau_y(self) -> np.ndarray:
        return np.stack([self.tau.diff(self.sj.yvar(k)).value for k in range(self.sj.n)], axis=-1)

    @cached_property
    def gradS_y(self) -> np.ndarray:
        return np.stack([self.S.diff(self.sj.yvar(k)).value for k in range(self.sj.n)], axis=-1)

    @cached_property
    def hessS_y(self) -> np.ndarray:
        sj = self.sj
        first = [self.S.diff(sj.yvar(i)) for i in range(sj.n)]
        return np.stack(
            [
                np.stack([first[i].diff(sj.yvar(j)).value for j in range(sj.n)], axis=-1)
                for i in range(sj.n)
            ],
            axis=-2,
        )

    @cached_property
    def E_from_S(self) -> np.ndarray:
        return self.sj.F.value[..., None, None] * self.hessS_y


@dataclass(frozen=True)
class SCurvatureSample:
    point: PointOnTM
    tau: np.ndarray
    S: np.ndarray
    Stilde: np.ndarray
    gradS_y: np.ndarray
    hessS_y: np.ndarray


def distortion(m: MetricSpec, vf: VolumeForm, p: PointOnTM) -> np.ndarray:
    """tau = ln(sqrt(det g) / sigma(x)), 0-homogeneous in y."""
    return ScurvJets(SprayJets(m, p, order=2), vf).tau.value


def s_curvature(m: MetricSpec, vf: VolumeForm, p: PointOnTM) -> SCurvatureSample:
    """
    S-curvature S = y^m dtau/dx^m - 2 G^m dtau/dy^m with its y-gradient and y-Hessian.

    Args:
        m: Metric
        vf: Volume form
        p: Point(s)

    Returns:
        SCurvatureSample
    """
    sc = ScurvJets(SprayJets(m, p, order=5), vf)
    S = sc.S.value
    return SCurvatureSample(
        point=p,
        tau=sc.tau.value,
        S=S,
        Stilde=S / sc.sj.F.value,
        gradS_y=sc.gradS_y,
        hessS_y=sc.hessS_y,
    )


def e_from_s(m: MetricSpec, vf: VolumeForm, p: PointOnTM) -> np.ndarray:
    """E_ij = F d^2 S / dy^i dy^j."""
    return ScurvJets(SprayJets(m, p, order=5), vf).E_from_S


def dv_tau_check(m: MetricSpec, vf: VolumeForm, p: PointOnTM) -> float:
    """max_k |dtau/dy^k - C_k| over the given points."""
    sc = ScurvJets(SprayJets(m, p, order=3), vf)
    return float(np.max(np.abs(sc.dtau_y - sc.sj.mean_cartan.C)))


class WeakIsotropicFit(NamedTuple):
    c: float
    xi: np.ndarray
    residual: float


def fit_weak_isotropic(F: np.ndarray, y: np.ndarray, S: np.ndarray) -> WeakIsotropicFit:
    """Least-squares fit S ~ c F + xi . y from fiber samples at one base point."""
    count, n = y.shape
    if count < n + 2:
        raise RankError(f"weak isotropic fit needs at least {n + 2} fiber samples, got {count}")
    design = np.column_stack([F, y])
    coefficients, _, rank, _ = np.linalg.lstsq(design, S, rcond=None)
    if rank < n + 1:
        raise RankError(f"weak isotropic fit system has rank {rank} < {n + 1}")
    residual = float(np.max(np.abs(design @ coefficients - S)))
    return WeakIsotropicFit(c=float(coefficients[0]), xi=coefficients[1:], residual=residual)


def weak_isotropic_fit(
    m: MetricSpec, vf: VolumeForm, x: Any, fiber_samples: int | np.ndarray | None = None
) -> WeakIsotropicFit:
    """
    Fit S(x, .) to c F + xi_i y^i over a fiber.

    Args:
        m: Metric
        vf: Volume form
        x: Base point
        fiber_samples: Number of fiber directions or an explicit (k, n) array of y

    Returns:
        (c, xi, max residual)

    Raises:
        RankError: With fewer than n + 2 samples or a degenerate system
    """
    x = np.asarray(x, dtype=float)
    if fiber_samples is None:
        fiber_samples = settings.fiber_fit_samples
    if isinstance(fiber_samples, int):
        if fiber_samples < m.dimension + 2:
            raise RankError(
                f"weak isotropic fit needs at least {m.dimension + 2} fiber samples"
            )
        points = fiber_points(m, x, fiber_samples)
    else:
        y = np.asarray(fiber_samples, dtype=float)
        points = PointOnTM(np.broadcast_to(x, y.shape).copy(), y)
    sc = ScurvJets(SprayJets(m, points, order=3), vf)
    return fit_weak_isotropic(sc.sj.F.value, points.y, sc.S.value)
