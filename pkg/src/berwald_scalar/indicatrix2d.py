"""
Fiber analysis for n = 2: the indicatrix as a closed curve and its Laplacian.

The curve y(theta) = r(theta)(cos theta, sin theta), r = 1/F(x, (cos, sin)),
carries the induced metric gdot = g_ij ydot^i ydot^j dtheta^2. Functions on the
fiber are sampled on a uniform theta grid and differentiated spectrally.
"""

from __future__ import annotations

from collections.abc import Callable
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .config import settings
from .errors import DomainError, ResolutionError
from .metric_core import FinslerJets, MetricSpec, PointOnTM, evaluate, fundamental_tensor
from .spray_curvature import SprayJets
from .volume_scurv import ScurvJets, VolumeForm

SPECTRAL_TAIL = 1e-8
CONVERGENCE_FLOOR = 1e-8
CONVERGENCE_RATIO = 10.0


@dataclass(frozen=True)
class IndicatrixCurve:
    x: np.ndarray
    theta: np.ndarray
    y: np.ndarray
    ydot: np.ndarray
    gdot: np.ndarray

    period: float = 2.0 * np.pi

    @property
    def nodes(self) -> int:
        return len(self.theta)


def spectral_derivative(f: np.ndarray) -> np.ndarray:
    """d/dtheta of periodic samples on a uniform grid over [0, 2 pi)."""
    count = f.shape[0]
    k = np.fft.fftfreq(count, d=1.0 / count)
    if count % 2 == 0:
        k[count // 2] = 0.0
    shape = (count,) + (1,) * (f.ndim - 1)
    return np.real(np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(f, axis=0), axis=0))


def _require_resolved(f: np.ndarray) -> None:
    spectrum = np.abs(np.fft.fft(f))
    count = len(f)
    # unit floor: a function of RMS 1 has spectral norm sqrt(count)
    total = max(float(np.linalg.norm(spectrum)), np.sqrt(count))
    k = np.abs(np.fft.fftfreq(count, d=1.0 / count))
    tail = float(np.linalg.norm(spectrum[k >= count // 4]))
    if tail > SPECTRAL_TAIL * total:
        raise ResolutionError(
            f"spectral tail {tail / total:.2e} exceeds {SPECTRAL_TAIL} on {count} nodes"
        )


def parametrize(m: MetricSpec, x: Any, N: int | None = None) -> IndicatrixCurve:
    """
    Parametrize the indicatrix {F(x, .) = 1} of a 2D metric.

    Args:
        m: Metric with n = 2
        x: Base point
        N: Even node count >= 64 (defaults to settings.indicatrix_nodes)

    Returns:
        IndicatrixCurve with spectral ydot and induced metric gdot

    Raises:
        DomainError: If F is nonpositive along some ray
    """
    if m.dimension != 2:
        raise ValueError("indicatrix curves are available for n = 2 only")
    N = settings.indicatrix_nodes if N is None else N
    if N < 64 or N % 2:
        raise ValueError(f"indicatrix needs an even node count >= 64, got {N}")
    x = np.asarray(x, dtype=float)
    theta = 2.0 * np.pi * np.arange(N) / N
    u = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    xs = np.broadcast_to(x, u.shape).copy()
    F = evaluate(m, xs, u)
    if np.any(F <= 0):
        raise DomainError(f"{m.label}: F is nonpositive along a ray at x = {x.tolist()}")
    y = u / F[:, None]
    ydot = spectral_derivative(y)
    g = fundamental_tensor(m, PointOnTM(xs, y)).g
    gdot = np.einsum("ki,kij,kj->k", ydot, g, ydot)
    if np.any(gdot <= 0):
        raise DomainError(f"{m.label}: induced fiber metric is not positive")
    return IndicatrixCurve(x=x, theta=theta, y=y, ydot=ydot, gdot=gdot)


def fiber_laplacian(c: IndicatrixCurve, f: np.ndarray) -> np.ndarray:
    """
    Laplace-Beltrami operator of gdot dtheta^2 applied to nodal values.

    Raises:
        ResolutionError: If the top quarter of f's spectrum carries more than 1e-8 of its norm
    """
    f = np.asarray(f, dtype=float)
    _require_resolved(f)
    root = np.sqrt(c.gdot)
    return spectral_derivative(spectral_derivative(f) / root) / root


def _points(c: IndicatrixCurve) -> PointOnTM:
    return PointOnTM(np.broadcast_to(c.x, c.y.shape).copy(), c.y)


def _tau_along(m: MetricSpec, c: IndicatrixCurve) -> np.ndarray:
    # sigma(x) is constant along a fiber, so ln sqrt(det g) carries all of dtau/dtheta
    fj = FinslerJets(m, _points(c), order=2)
    return 0.5 * np.log(fj.fundamental.detg)


def laplace1_residuals(
    m: MetricSpec, vf: VolumeForm, x: Any, N: int | None = None
) -> tuple[IndicatrixCurve, np.ndarray]:
    """Nodal residual of  Lap Stilde + gdot^-1 tau' Stilde' + Stilde - e  along the fiber."""
    c = parametrize(m, x, N)
    sc = ScurvJets(SprayJets(m, _points(c), order=5), vf)
    Stilde = sc.S.value / sc.sj.F.value
    tau = sc.tau.value
    e = sc.sj.e
    lap = fiber_laplacian(c, Stilde)
    drift = spectral_derivative(tau) * spectral_derivative(Stilde) / c.gdot
    return c, lap + drift + (m.dimension - 1) * Stilde - e


def verify_laplace1(m: MetricSpec, vf: VolumeForm, x: Any, N: int | None = None) -> float:
    """Max nodal residual of the fiber equation for the S-curvature."""
    _, residual = laplace1_residuals(m, vf, x, N)
    return float(np.max(np.abs(residual)))


def schrodinger_residuals(
    m: MetricSpec, x: Any, xi: Any, N: int | None = None
) -> tuple[IndicatrixCurve, np.ndarray]:
    """Nodal residual of  Lap f + gdot^-1 tau' f' + f  for f = xi . y."""
    c = parametrize(m, x, N)
    f = c.y @ np.asarray(xi, dtype=float)
    tau = _tau_along(m, c)
    lap = fiber_laplacian(c, f)
    drift = spectral_derivative(tau) * spectral_derivative(f) / c.gdot
    return c, lap + drift + (m.dimension - 1) * f


def verify_schrodinger_family(m: MetricSpec, x: Any, xi: Any, N: int | None = None) -> float:
    """Max nodal residual for the linear solution f = xi_i y^i."""
    _, residual = schrodinger_residuals(m, x, xi, N)
    return float(np.max(np.abs(residual)))


class Convergence(NamedTuple):
    coarse: float
    fine: float
    ratio: float
    converged: bool


def convergence_ratio(check: Callable[[int], float], N: int) -> Convergence:
    """
    Compare a residual check at N/2 and N nodes.

    Converged when the ratio exceeds 10 or the coarse residual is already
    below the 1e-8 floor.
    """
    coarse = check(N // 2)
    fine = check(N)
    ratio = coarse / fine if fine > 0 else float("inf")
    converged = coarse < CONVERGENCE_FLOOR or ratio > CONVERGENCE_RATIO
    return Convergence(coarse=coarse, fine=fine, ratio=ratio, converged=converged)


def residual_rows(c: IndicatrixCurve, residual: np.ndarray) -> list[tuple[float, float]]:
    """(theta, residual) pairs for CSV export."""
    return [(float(t), float(r)) for t, r in zip(c.theta, residual, strict=True)]
