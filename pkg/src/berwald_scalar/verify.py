"""
Verification suite: identities checked numerically on the shipped zoo.

Every (identity, metric) pair becomes one task. Tasks run on a thread pool and
report assembly keeps the task order, so a fixed seed gives identical reports.
"""

from __future__ import annotations

import threading
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations_with_replacement, permutations, product
from typing import Any, Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, Field

from . import jets
from .config import settings
from .errors import FinslerError, ParseError
from .indicatrix2d import convergence_ratio, verify_laplace1, verify_schrodinger_family
from .metric_core import MetricSpec, PointOnTM, evaluate, fiber_directions, sample_points
from .metric_zoo import build_zoo
from .spray_curvature import CurvatureBundle, curvature_bundle
from .utils import log, pluralize
from .volume_scurv import VolumeForm, fit_weak_isotropic, log_sigma

FAULTS = {"e-scale": 2.0}

FUNK_S_RATIO = 1.5
FUNK_E = 1.5
COVARIANCE_SCALE = 3.0
HOMOGENEITY_FACTORS = (0.7, 3.0)
ORACLE_STEP = 5e-2
ORACLE_SPRAY_STEP = 5e-2
ORACLE_LEVELS = 2


class VerificationReport(BaseModel):
    identity: str
    metric: str
    volume: str | None
    max_residual: float | None
    mean_residual: float | None
    tolerance: float
    verdict: Literal["pass", "fail"]
    seed: int
    resolutions: dict[str, int]
    samples: int
    error: str | None = None
    note: str | None = None


class Outcome(NamedTuple):
    residuals: np.ndarray
    samples: int
    note: str | None = None
    failed: bool = False


MetricKey = tuple[str, tuple[tuple[str, Any], ...]]


def _key(name: str, **params: Any) -> MetricKey:
    return name, tuple(sorted(params.items()))


EUCLIDEAN2 = _key("euclidean", n=2)
RIEMANN2 = _key("riemann-diag", n=2)
MINKOWSKI_RANDERS2 = _key("minkowski-randers", n=2, b=0.5)
MINKOWSKI_SQUARE2 = _key("minkowski-square", n=2)
BERWALD_RANDERS2 = _key("berwald-randers", n=2)
BERWALD_RANDERS3 = _key("berwald-randers", n=3)
ROTATION2 = _key("randers-rotation", n=2)
ROTATION3 = _key("randers-rotation", n=3)
FUNK2 = _key("funk", n=2)
FUNK_RANDERS2 = _key("funk-randers", n=2)
EXPONENTIAL3 = _key("alpha-beta-exponential", n=3)

SUITE_METRICS = (
    EUCLIDEAN2,
    RIEMANN2,
    MINKOWSKI_RANDERS2,
    MINKOWSKI_SQUARE2,
    BERWALD_RANDERS2,
    BERWALD_RANDERS3,
    ROTATION2,
    ROTATION3,
    FUNK2,
    FUNK_RANDERS2,
    EXPONENTIAL3,
)
BERWALD_METRICS = (
    EUCLIDEAN2,
    RIEMANN2,
    MINKOWSKI_RANDERS2,
    MINKOWSKI_SQUARE2,
    BERWALD_RANDERS2,
    BERWALD_RANDERS3,
)


def _relative(a: np.ndarray, b: np.ndarray, point_axes: int = 1) -> np.ndarray:
    """Per-point max |a - b| / max(1, max|a|, max|b|)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lead = a.shape[:point_axes]
    gap = np.abs(a - b).reshape(*lead, -1).max(axis=-1)
    scale = np.maximum(
        np.abs(a).reshape(*lead, -1).max(axis=-1), np.abs(b).reshape(*lead, -1).max(axis=-1)
    )
    return gap / np.maximum(1.0, scale)


def _global_relative(a: np.ndarray, b: np.ndarray) -> float:
    scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(b))))
    return float(np.max(np.abs(a - b))) / scale


def _point_max(values: np.ndarray, point_axes: int = 1) -> np.ndarray:
    values = np.abs(np.asarray(values, dtype=float))
    return values.reshape(*values.shape[:point_axes], -1).max(axis=-1)


class _Cache:
    """Compute-once store; each key is built under its own lock."""

    def __init__(self) -> None:
        self._guard = threading.Lock()
        self._locks: dict[Any, threading.Lock] = {}
        self._values: dict[Any, Any] = {}

    def get(self, key: Any, build: Callable[[], Any]) -> Any:
        with self._guard:
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            if key not in self._values:
                self._values[key] = build()
            return self._values[key]


class Suite:
    """Shared state of one verification run."""

    def __init__(self, seed: int, resolutions: dict[str, int], e_scale: float = 1.0):
        self.seed = seed
        self.resolutions = resolutions
        self.e_scale = e_scale
        self._cache = _Cache()

    def metric(self, key: MetricKey) -> MetricSpec:
        name, params = key
        return self._cache.get(("metric", key), lambda: build_zoo(name, **dict(params)))

    def volume(self, m: MetricSpec, scale: float = 1.0) -> VolumeForm:
        resolution = self.resolutions["quadrature" if m.dimension == 2 else "polar"]
        return VolumeForm(kind="bh", resolution=resolution, scale=scale)

    def points(self, m: MetricSpec, count: int | None = None) -> PointOnTM:
        count = settings.sample_count if count is None else count
        return self._cache.get(
            ("points", m.label, count), lambda: sample_points(m, count, self.seed)
        )

    def bundle(
        self, m: MetricSpec, count: int | None = None, factor: float = 1.0
    ) -> CurvatureBundle:
        """Curvature bundle with the BH volume at the metric's sample points, y scaled by factor."""

        def build() -> CurvatureBundle:
            p = self.points(m, count)
            if factor != 1.0:
                p = p.scaled(factor)
            return curvature_bundle(m, p, self.volume(m), e_scale=self.e_scale)

        return self._cache.get(("bundle", m.label, count, factor), build)

    def fiber_bundle(self, m: MetricSpec, bases: int, fiber: int) -> CurvatureBundle:
        """Bundle on a (bases, fiber) grid of fiber directions over sampled base points."""

        def build() -> CurvatureBundle:
            x = self.points(m, bases).x
            y = fiber_directions(m.dimension, fiber, self.seed)
            p = PointOnTM(
                np.repeat(x[:, None, :], fiber, axis=1),
                np.broadcast_to(y, (bases, fiber, m.dimension)).copy(),
            )
            return curvature_bundle(m, p, self.volume(m), e_scale=self.e_scale)

        return self._cache.get(("fiber", m.label, bases, fiber), build)


# -----------------------------------------------------------------------------
# Identity checks
# -----------------------------------------------------------------------------


def check_eq10(suite: Suite, m: MetricSpec) -> Outcome:
    """E from the Berwald trace against E from the y-Hessian of S."""
    b = suite.bundle(m)
    assert b.E_from_S is not None
    return Outcome(_relative(b.E, b.E_from_S), b.count)


def check_dvtau(suite: Suite, m: MetricSpec) -> Outcome:
    """Vertical derivative of the distortion against the mean Cartan covector."""
    b = suite.bundle(m)
    assert b.dtau_y is not None
    return Outcome(_point_max(b.dtau_y - b.C), b.count)


def check_thm1(suite: Suite, m: MetricSpec) -> Outcome:
    """
    E = e/(n-1) h with e = (n-1) c, where S = c F + xi . y is fitted per fiber.

    The fiber fit pins e to the S-curvature, so a rescaled E is caught even in
    dimension 2 where E is always a multiple of h.
    """
    bases = 10
    b = suite.fiber_bundle(m, bases, settings.fiber_fit_samples)
    assert b.S is not None
    n = m.dimension
    rows = []
    for i in range(bases):
        fit = fit_weak_isotropic(b.F[i], b.point.y[i], b.S[i])
        scale = max(1.0, float(np.max(np.abs(b.S[i]))))
        rows.append(
            max(
                float(np.max(b.isotropy[i])),
                float(np.max(np.abs(b.e[i] - (n - 1) * fit.c))),
                fit.residual / scale,
            )
        )
    return Outcome(np.asarray(rows), b.count)


def check_funk(suite: Suite, m: MetricSpec) -> Outcome:
    """S/F = 3/2, e = 3/2 and E = 3/2 h on the 2D Funk metric."""
    b = suite.bundle(m, count=20)
    assert b.Stilde is not None
    rows = np.maximum.reduce(
        [
            np.abs(b.Stilde - FUNK_S_RATIO),
            np.abs(b.e - FUNK_E),
            _point_max(b.E - FUNK_E * b.h),
        ]
    )
    return Outcome(rows, b.count)


def check_relation(suite: Suite, m: MetricSpec) -> Outcome:
    b = suite.bundle(m)
    return Outcome(b.relation, b.count)


# (field, degree of positive homogeneity in y)
HOMOGENEITY_DEGREES = (
    ("G", 2),
    ("N", 1),
    ("Gjk", 0),
    ("B", -1),
    ("L", 0),
    ("J", 0),
    ("E", 0),
    ("e", 0),
    ("S", 1),
    ("tau", 0),
)


def check_homogeneity(suite: Suite, m: MetricSpec) -> Outcome:
    count = 10
    base = suite.bundle(m, count=count)
    rows = np.zeros(count)
    for factor in HOMOGENEITY_FACTORS:
        scaled = suite.bundle(m, count=count, factor=factor)
        for name, degree in HOMOGENEITY_DEGREES:
            expected = factor**degree * getattr(base, name)
            rows = np.maximum(rows, _relative(getattr(scaled, name), expected))
    return Outcome(rows, (1 + len(HOMOGENEITY_FACTORS)) * count)


def check_berwald_chain(suite: Suite, m: MetricSpec) -> Outcome:
    """B = 0 together with L, J, E and e."""
    b = suite.bundle(m)
    rows = np.maximum.reduce(
        [_point_max(b.B), _point_max(b.L), _point_max(b.J), _point_max(b.E), np.abs(b.e)]
    )
    return Outcome(rows, b.count)


def _oracle(m: MetricSpec, vf: VolumeForm, p: PointOnTM) -> dict[str, np.ndarray]:
    """
    Every bundle tensor from finite differences of F^2 and of ln sigma alone.

    The spray is a difference quotient of F^2 and N, Gjk and B are quotients of that
    spray, so the nested stencils use wide steps with two Richardson levels.
    """
    n = m.dimension
    batch = p.batch_shape
    z = np.concatenate([p.x, p.y], axis=-1)
    pairs = list(combinations_with_replacement(range(n), 2))
    triples = list(combinations_with_replacement(range(n), 3))

    def index(*variables: int) -> tuple[int, ...]:
        idx = [0] * (2 * n)
        for v in variables:
            idx[v] += 1
        return tuple(idx)

    def square(w: np.ndarray) -> np.ndarray:
        return evaluate(m, w[..., :n], w[..., n:]) ** 2

    def square_partials(w: np.ndarray, indices: list[tuple[int, ...]]) -> list[np.ndarray]:
        return jets.fd_partials(square, w, indices, ORACLE_STEP, ORACLE_LEVELS)

    def fundamental(w: np.ndarray, values: Sequence[np.ndarray]) -> np.ndarray:
        g = np.empty(w.shape[:-1] + (n, n))
        for (i, j), value in zip(pairs, values, strict=True):
            g[..., i, j] = g[..., j, i] = 0.5 * value
        return g

    def spray_fd(w: np.ndarray) -> np.ndarray:
        second_y = [index(n + i, n + j) for i, j in pairs]
        mixed = [index(k, n + l) for k in range(n) for l in range(n)]  # noqa: E741
        first_x = [index(l) for l in range(n)]  # noqa: E741
        values = square_partials(w, second_y + mixed + first_x)
        g = fundamental(w, values[: len(pairs)])
        q_xy = np.stack(values[len(pairs) : len(pairs) + n * n], axis=-1)
        q_xy = q_xy.reshape(w.shape[:-1] + (n, n))
        q_x = np.stack(values[len(pairs) + n * n :], axis=-1)
        rhs = np.einsum("...kl,...k->...l", q_xy, w[..., n:]) - q_x
        return 0.25 * np.einsum("...il,...l->...i", np.linalg.inv(g), rhs)

    def spray_partial(*fiber: int) -> np.ndarray:
        idx = index(*(n + v for v in fiber))
        return jets.fd_oracle(spray_fd, z, idx, ORACLE_SPRAY_STEP, ORACLE_LEVELS)

    G = spray_fd(z)
    N = np.stack([spray_partial(j) for j in range(n)], axis=-1)
    Gjk = np.empty(batch + (n,) * 3)
    for j, k in pairs:
        Gjk[..., :, j, k] = Gjk[..., :, k, j] = spray_partial(j, k)
    B = np.empty(batch + (n,) * 4)
    for jkl in triples:
        value = spray_partial(*jkl)
        for a, b, c in set(permutations(jkl)):
            B[..., :, a, b, c] = value

    g = fundamental(z, square_partials(z, [index(n + i, n + j) for i, j in pairs]))
    # dg_y[i, j, k] = d g_ij / d y^k, dg_x[i, j, k] = d g_ij / d x^k
    dg_y = np.empty(batch + (n,) * 3)
    third_y = square_partials(z, [index(n + i, n + j, n + k) for i, j, k in triples])
    for ijk, value in zip(triples, third_y, strict=True):
        for a, b, c in set(permutations(ijk)):
            dg_y[..., a, b, c] = 0.5 * value
    dg_x = np.empty(batch + (n,) * 3)
    mixed_x = list(product(pairs, range(n)))
    third_x = square_partials(z, [index(k, n + i, n + j) for (i, j), k in mixed_x])
    for ((i, j), k), value in zip(mixed_x, third_x, strict=True):
        dg_x[..., i, j, k] = dg_x[..., j, i, k] = 0.5 * value

    F = evaluate(m, p.x, p.y)
    ginv = np.linalg.inv(g)
    lowered = np.einsum("...ij,...j->...i", g, p.y)
    A = 0.5 * F[..., None, None, None] * dg_y
    C = np.einsum("...ij,...ijk->...k", ginv, A) / F[..., None]
    h = g - lowered[..., :, None] * lowered[..., None, :] / (F**2)[..., None, None]
    L = -0.5 * np.einsum("...i,...ijkl->...jkl", lowered, B)
    J = np.einsum("...jl,...jkl->...k", ginv, L)
    E = F[..., None, None] * np.einsum("...mmij->...ij", B)
    e = np.einsum("...ij,...ij->...", ginv, E)
    delta = dg_x - np.einsum("...mk,...ljm->...ljk", N, dg_y)
    combined = delta + np.swapaxes(delta, -1, -2) - np.einsum("...jkl->...ljk", delta)
    Gamma = 0.5 * np.einsum("...il,...ljk->...ijk", ginv, combined)

    def half_logdet(w: np.ndarray) -> np.ndarray:
        values = square_partials(w, [index(n + i, n + j) for i, j in pairs])
        return 0.5 * np.linalg.slogdet(fundamental(w, values))[1]

    def log_density(x: np.ndarray) -> np.ndarray:
        return log_sigma(m, vf, x, 0).value

    step = settings.fd_step
    d_det = jets.fd_partials(half_logdet, z, [index(v) for v in range(2 * n)], step)
    x_units = [tuple(int(k == v) for k in range(n)) for v in range(n)]
    d_sigma = jets.fd_partials(log_density, p.x, x_units, step)
    tau = 0.5 * np.linalg.slogdet(g)[1] - log_density(p.x)
    S = sum(
        p.y[..., k] * (d_det[k] - d_sigma[k]) - 2.0 * G[..., k] * d_det[n + k] for k in range(n)
    )
    return {
        "g": g,
        "ginv": ginv,
        "A": A,
        "C": C,
        "h": h,
        "G": G,
        "N": N,
        "Gjk": Gjk,
        "B": B,
        "Gamma": Gamma,
        "L": L,
        "J": J,
        "E": E,
        "e": e,
        "tau": tau,
        "S": np.asarray(S),
    }


def check_oracle(suite: Suite, m: MetricSpec) -> Outcome:
    """Jet tensors against the finite-difference oracle, relative with a unit floor."""
    b = suite.bundle(m, count=10)
    oracle = _oracle(m, suite.volume(m), b.point)
    rows = [_global_relative(getattr(b, name), value) for name, value in oracle.items()]
    return Outcome(np.asarray(rows), b.count, note="residual per tensor: " + ", ".join(oracle))


def check_laplace1(suite: Suite, m: MetricSpec) -> Outcome:
    """Fiber equation of S on the indicatrix, with the N/2 -> N convergence ratio."""
    N = suite.resolutions["indicatrix"]
    vf = suite.volume(m)
    xs = suite.points(m, 5).x
    rows = []
    slow = []
    for x in xs:
        conv = convergence_ratio(lambda nodes, x=x: verify_laplace1(m, vf, x, nodes), N)
        rows.append(conv.fine)
        if not conv.converged:
            slow.append(f"ratio {conv.ratio:.2f}")
    if slow:
        note = "no spectral convergence: " + ", ".join(slow)
        return Outcome(np.asarray(rows), len(xs), note=note, failed=True)
    return Outcome(np.asarray(rows), len(xs), note=f"converged from {N // 2} to {N} nodes")


def check_schrodinger(suite: Suite, m: MetricSpec) -> Outcome:
    """f = xi . y solves the fiber Schroedinger equation for 8 seeded xi."""
    N = suite.resolutions["indicatrix"]
    x = suite.points(m, 1).x[0]
    xis = np.random.default_rng(suite.seed).standard_normal((8, m.dimension))
    rows = [verify_schrodinger_family(m, x, xi, N) for xi in xis]
    return Outcome(np.asarray(rows), len(rows))


def check_thm3(suite: Suite, m: MetricSpec) -> Outcome:
    """(alpha, beta) metrics in n >= 3: J = 0 and e = 0 on the samples force B = 0."""
    b = suite.bundle(m)
    ginv_max = _point_max(b.ginv)
    scale = 1.0 + ginv_max * b.F
    tol = settings.tolerance_algebraic
    J = float(np.max(_point_max(b.J) / scale))
    e = float(np.max(np.abs(b.e) / scale))
    if J < tol and e < tol:
        return Outcome(_point_max(b.B) / scale, b.count, note="hypothesis holds")
    return Outcome(
        np.zeros(b.count),
        b.count,
        note=f"hypothesis not met (max|J| = {J:.3e}, max|e| = {e:.3e})",
    )


def check_covariance(suite: Suite, m: MetricSpec) -> Outcome:
    """S is unchanged and tau shifts by -ln k when sigma is multiplied by k."""
    b = suite.bundle(m)
    scaled = curvature_bundle(
        m, b.point, suite.volume(m, COVARIANCE_SCALE), e_scale=suite.e_scale
    )
    assert b.S is not None and scaled.S is not None
    assert b.tau is not None and scaled.tau is not None
    rows = np.maximum(
        np.abs(scaled.S - b.S), np.abs(scaled.tau - (b.tau - np.log(COVARIANCE_SCALE)))
    )
    return Outcome(rows, b.count)


@dataclass(frozen=True)
class Identity:
    name: str
    tolerance: float
    metrics: tuple[MetricKey, ...]
    check: Callable[[Suite, MetricSpec], Outcome]
    uses_volume: bool = True


IDENTITIES: dict[str, Identity] = {
    item.name: item
    for item in (
        Identity("eq10", 1e-6, SUITE_METRICS, check_eq10),
        Identity("lemma-dvtau", 1e-8, SUITE_METRICS, check_dvtau),
        Identity(
            "thm1-isotropy",
            1e-5,
            (FUNK2, FUNK_RANDERS2, MINKOWSKI_RANDERS2, RIEMANN2, BERWALD_RANDERS3),
            check_thm1,
        ),
        Identity("funk-benchmark", 1e-4, (FUNK2,), check_funk),
        Identity("chern-berwald-relation", 1e-8, SUITE_METRICS, check_relation, False),
        Identity(
            "homogeneity",
            1e-7,
            (RIEMANN2, MINKOWSKI_SQUARE2, ROTATION2, FUNK2, EXPONENTIAL3),
            check_homogeneity,
        ),
        Identity("berwald-chain", 1e-7, BERWALD_METRICS, check_berwald_chain, False),
        Identity(
            "oracle-equivalence",
            1e-4,
            SUITE_METRICS,
            check_oracle,
        ),
        Identity("laplace1", 1e-4, (FUNK2,), check_laplace1),
        Identity(
            "schrodinger-family",
            1e-6,
            (EUCLIDEAN2, MINKOWSKI_RANDERS2, FUNK2),
            check_schrodinger,
            False,
        ),
        Identity(
            "thm3-instances",
            1e-7,
            (BERWALD_RANDERS3, ROTATION3, EXPONENTIAL3),
            check_thm3,
            False,
        ),
        Identity("volume-covariance", 1e-9, (RIEMANN2, ROTATION2, FUNK2), check_covariance),
    )
}


def default_resolutions(resolution: int | None = None) -> dict[str, int]:
    """Resolutions echoed in every report; ``resolution`` overrides the n = 2 node counts."""
    return {
        "quadrature": settings.quadrature_nodes if resolution is None else resolution,
        "polar": settings.quadrature_polar,
        "indicatrix": settings.indicatrix_nodes if resolution is None else resolution,
    }


def _run_task(
    suite: Suite, identity: Identity, key: MetricKey, tolerance: float
) -> VerificationReport:
    label = f"{key[0]}{dict(key[1])}"
    volume = None
    try:
        m = suite.metric(key)
        label = m.label
        if identity.uses_volume:
            volume = suite.volume(m).label
        outcome = identity.check(suite, m)
    except (FinslerError, ArithmeticError, np.linalg.LinAlgError, ValueError) as e:
        log(f"{identity.name} on {label}: error: {e}", level="WARNING")
        return VerificationReport(
            identity=identity.name,
            metric=label,
            volume=volume,
            max_residual=None,
            mean_residual=None,
            tolerance=tolerance,
            verdict="fail",
            seed=suite.seed,
            resolutions=suite.resolutions,
            samples=0,
            error=f"{type(e).__name__}: {e}",
        )

    residuals = np.asarray(outcome.residuals, dtype=float)
    finite = bool(np.all(np.isfinite(residuals)))
    max_residual = float(np.max(residuals)) if finite else None
    mean_residual = float(np.mean(residuals)) if finite else None
    passed = max_residual is not None and max_residual < tolerance and not outcome.failed
    verdict: Literal["pass", "fail"] = "pass" if passed else "fail"
    shown = "non-finite" if max_residual is None else f"{max_residual:.3e}"
    log(f"{identity.name} on {label}: {verdict} (max {shown}, tolerance {tolerance:g})")
    return VerificationReport(
        identity=identity.name,
        metric=label,
        volume=volume,
        max_residual=max_residual,
        mean_residual=mean_residual,
        tolerance=tolerance,
        verdict=verdict,
        seed=suite.seed,
        resolutions=suite.resolutions,
        samples=outcome.samples,
        error=None if finite else "residual is not finite",
        note=outcome.note,
    )


def run_verification(
    selection: Sequence[str] | None = None,
    seed: int | None = None,
    resolutions: dict[str, int] | None = None,
    fault: str | None = None,
    jobs: int | None = None,
    tolerances: dict[str, float] | None = None,
) -> list[VerificationReport]:
    """
    Run the selected identities over their metrics.

    Args:
        selection: Identity names (all when None or empty)
        seed: Sampling seed (defaults to settings.seed)
        resolutions: "quadrature", "polar" and "indicatrix" node counts
        fault: Name of an injected fault ("e-scale" doubles E) for the mutation self-test
        jobs: Worker threads (defaults to settings.jobs)
        tolerances: Per-identity tolerance overrides

    Returns:
        One report per (identity, metric), in suite order

    Raises:
        ParseError: If an identity or fault name is unknown
    """
    names = list(selection) if selection else list(IDENTITIES)
    unknown = [name for name in names if name not in IDENTITIES]
    if unknown:
        raise ParseError(f"unknown identities {unknown}; expected some of {list(IDENTITIES)}")
    if fault is not None and fault not in FAULTS:
        raise ParseError(f"unknown fault {fault!r}; expected one of {sorted(FAULTS)}")

    seed = settings.seed if seed is None else seed
    resolutions = {**default_resolutions(), **(resolutions or {})}
    overrides = tolerances or {}
    suite = Suite(seed, resolutions, e_scale=FAULTS[fault] if fault else 1.0)
    tasks = [
        (IDENTITIES[name], key, overrides.get(name, IDENTITIES[name].tolerance))
        for name in names
        for key in IDENTITIES[name].metrics
    ]
    log(f"Running {pluralize(len(tasks), 'verification task')} (seed {seed})")

    workers = max(1, settings.jobs if jobs is None else jobs)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(lambda task: _run_task(suite, *task), tasks))

    failed = sum(report.verdict == "fail" for report in reports)
    log(f"Verification finished: {len(reports) - failed} passed, {failed} failed")
    return reports


def all_passed(reports: Sequence[VerificationReport]) -> bool:
    return all(report.verdict == "pass" for report in reports)


class VerificationRun(BaseModel):
    """Serialized form of a suite run."""

    seed: int
    fault: str | None = None
    reports: list[VerificationReport] = Field(default_factory=list)
