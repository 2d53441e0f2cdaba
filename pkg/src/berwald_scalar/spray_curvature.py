"""
Spray, connections and the Berwald family of curvatures in natural coordinates.

Conventions:
    G^i      = 1/4 g^il ([F^2]_{x^k y^l} y^k - [F^2]_{x^l})
    N^i_j    = dG^i/dy^j,   G^i_jk = d^2 G^i / dy^j dy^k
    B^i_jkl  = d^3 G^i / dy^j dy^k dy^l
    L_jkl    = -1/2 y_i B^i_jkl,   J_k = g^jl L_jkl
    E_ij     = F B^m_mij,          e = g^ij E_ij
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from functools import cached_property

import numpy as np

from . import jets
from .metric_core import FinslerJets, MetricSpec, PointOnTM

BUNDLE_CHUNK = 32
VANISHING_BASE = 1e-7


class SprayJets(FinslerJets):
    """FinslerJets extended with the spray and its y-derivatives."""

    def __init__(self, m: MetricSpec, p: PointOnTM, order: int | None = None, e_scale: float = 1.0):
        super().__init__(m, p, order)
        self.e_scale = e_scale

    @cached_property
    def G(self) -> jets.Jet:
        n = self.n
        F2 = self.F2
        dF2_x = [F2.diff(self.xvar(k)) for k in range(n)]
        rhs = []
        for l in range(n):  # noqa: E741
            total = -dF2_x[l]
            for k in range(n):
                total = total + dF2_x[k].diff(self.yvar(l)) * self.y[..., k]
            rhs.append(total)
        column = jets.stack(rhs, axis=-1)[..., :, None]
        return jets.matmul(self.ginv, column)[..., 0] * 0.25

    @cached_property
    def N(self) -> jets.Jet:
        return jets.stack([self.G.diff(self.yvar(j)) for j in range(self.n)], axis=-1)

    @cached_property
    def Gjk(self) -> jets.Jet:
        return jets.stack([self.N.diff(self.yvar(k)) for k in range(self.n)], axis=-1)

    @cached_property
    def B(self) -> np.ndarray:
        third = [self.Gjk.diff(self.yvar(k)).value for k in range(self.n)]
        return np.stack(third, axis=-1)

    @cached_property
    def L(self) -> np.ndarray:
        return -0.5 * np.einsum("...i,...ijkl->...jkl", self.lowered_y, self.B)

    @cached_property
    def J(self) -> np.ndarray:
        return np.einsum("...jl,...jkl->...k", self.fundamental.ginv, self.L)

    @cached_property
    def E(self) -> np.ndarray:
        trace = np.einsum("...mmij->...ij", self.B)
        return self.e_scale * self.F.value[..., None, None] * trace

    @cached_property
    def e(self) -> np.ndarray:
        return np.einsum("...ij,...ij->...", self.fundamental.ginv, self.E)

    @cached_property
    def Gamma(self) -> np.ndarray:
        """Chern connection coefficients Gamma^i_jk."""
        N = self.N.value
        # delta_k g_lj = d_{x^k} g_lj - N^m_k d_{y^m} g_lj, indexed [..., l, j, k]
        delta = self.dg_x - np.einsum("...mk,...ljm->...ljk", N, self.dg_y)
        combined = delta + np.swapaxes(delta, -1, -2) - np.einsum("...jkl->...ljk", delta)
        return 0.5 * np.einsum("...il,...ljk->...ijk", self.fundamental.ginv, combined)

    @cached_property
    def relation_residual(self) -> np.ndarray:
        lowered = np.einsum("...im,...mjk->...ijk", self.fundamental.ginv, self.L)
        gap = self.Gjk.value - self.Gamma - lowered
        return np.abs(gap).reshape(*gap.shape[:-3], -1).max(axis=-1)

    @cached_property
    def isotropy(self) -> np.ndarray:
        h = self.angular
        gap = self.E - (self.e / (self.n - 1))[..., None, None] * h
        return np.abs(gap).reshape(*gap.shape[:-2], -1).max(axis=-1)


@dataclass
class CurvatureBundle:
    """All tensors at a batch of points; every field has the point axes leading."""

    point: PointOnTM
    F: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    A: np.ndarray
    C: np.ndarray
    h: np.ndarray
    G: np.ndarray
    N: np.ndarray
    Gjk: np.ndarray
    B: np.ndarray
    Gamma: np.ndarray
    L: np.ndarray
    J: np.ndarray
    E: np.ndarray
    e: np.ndarray
    relation: np.ndarray
    isotropy: np.ndarray
    tau: np.ndarray | None = None
    S: np.ndarray | None = None
    dtau_y: np.ndarray | None = None
    E_from_S: np.ndarray | None = None

    @property
    def count(self) -> int:
        return self.point.count

    @property
    def Stilde(self) -> np.ndarray | None:
        return None if self.S is None else self.S / self.F


def _bundle_chunk(
    m: MetricSpec, p: PointOnTM, vf: object | None, e_scale: float, order: int | None
) -> CurvatureBundle:
    sj = SprayJets(m, p, order, e_scale=e_scale)
    fundamental = sj.fundamental
    bundle = CurvatureBundle(
        point=p,
        F=sj.F.value,
        g=fundamental.g,
        ginv=fundamental.ginv,
        A=sj.cartan,
        C=sj.mean_cartan.C,
        h=sj.angular,
        G=sj.G.value,
        N=sj.N.value,
        Gjk=sj.Gjk.value,
        B=sj.B,
        Gamma=sj.Gamma,
        L=sj.L,
        J=sj.J,
        E=sj.E,
        e=sj.e,
        relation=sj.relation_residual,
        isotropy=sj.isotropy,
    )
    if vf is not None:
        from .volume_scurv import ScurvJets

        sc = ScurvJets(sj, vf)
        bundle.tau = sc.tau.value
        bundle.S = sc.S.value
        bundle.dtau_y = sc.dtau_y
        bundle.E_from_S = sc.E_from_S
    return bundle


def curvature_bundle(
    m: MetricSpec,
    p: PointOnTM,
    vf: object | None = None,
    e_scale: float = 1.0,
    order: int | None = None,
) -> CurvatureBundle:
    """
    Every curvature quantity at ``p`` from one jet pipeline.

    Points are processed in chunks; τ and 𝐒 are added when a volume form is given.

    Args:
        m: Metric
        p: Point or batch of points, shape (P, n) or (n,)
        vf: Optional VolumeForm for the distortion and S-curvature
        e_scale: Factor applied to E (fault injection for the self-test)
        order: Jet order, defaults to settings.jet_order

    Returns:
        CurvatureBundle with the same leading shape as ``p``
    """
    if p.x.ndim == 1:
        return _bundle_chunk(m, p, vf, e_scale, order)
    flat = PointOnTM(p.x.reshape(-1, m.dimension), p.y.reshape(-1, m.dimension))
    chunks = [
        _bundle_chunk(m, flat.take(slice(start, start + BUNDLE_CHUNK)), vf, e_scale, order)
        for start in range(0, flat.count, BUNDLE_CHUNK)
    ]
    merged: dict[str, object] = {"point": p}
    batch = p.batch_shape
    for f in fields(CurvatureBundle):
        if f.name == "point":
            continue
        parts = [getattr(c, f.name) for c in chunks]
        if parts[0] is None:
            merged[f.name] = None
            continue
        joined = np.concatenate(parts, axis=0)
        merged[f.name] = joined.reshape(batch + joined.shape[1:])
    return CurvatureBundle(**merged)  # type: ignore[arg-type]


def vanishing_threshold(bundle: CurvatureBundle, base: float = VANISHING_BASE) -> np.ndarray:
    """Scale-relative zero threshold base * (1 + max|g^-1| F) per point."""
    ginv_max = np.abs(bundle.ginv).reshape(*bundle.ginv.shape[:-2], -1).max(axis=-1)
    return base * (1.0 + ginv_max * bundle.F)


def spray(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    """Spray coefficients G^i, positively 2-homogeneous in y."""
    return SprayJets(m, p, order=2).G.value


def nonlinear_connection(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    return SprayJets(m, p, order=3).N.value


def berwald_connection(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    return SprayJets(m, p, order=4).Gjk.value


def berwald_curvature(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    """B^i_jkl, indexed [..., i, j, k, l]."""
    return SprayJets(m, p, order=5).B


def landsberg(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    return SprayJets(m, p, order=5).L


def mean_landsberg(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    return SprayJets(m, p, order=5).J


def mean_berwald(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    """Mean Berwald curvature E_ij = F B^m_mij."""
    return SprayJets(m, p, order=5).E


def berwald_scalar(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    """Berwald scalar curvature e = g^ij E_ij."""
    return SprayJets(m, p, order=5).e


def chern_connection(m: MetricSpec, p: PointOnTM) -> np.ndarray:
    """Gamma^i_jk = 1/2 g^il (delta_k g_lj + delta_j g_lk - delta_l g_jk)."""
    return SprayJets(m, p, order=3).Gamma


def relation_check(m: MetricSpec, p: PointOnTM) -> float:
    """max |G^i_jk - Gamma^i_jk - g^im L_mjk| over the given points."""
    return float(np.max(SprayJets(m, p, order=5).relation_residual))


def isotropy_residual(m: MetricSpec, p: PointOnTM) -> float:
    """max |E_ij - e/(n-1) h_ij| over the given points."""
    return float(np.max(SprayJets(m, p, order=5).isotropy))
