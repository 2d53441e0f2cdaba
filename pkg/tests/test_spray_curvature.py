"""Tests for spray_curvature module."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from berwald_scalar.metric_core import PointOnTM, angular_metric, sample_points
from berwald_scalar.metric_zoo import build_zoo
from berwald_scalar.spray_curvature import (
    berwald_curvature,
    berwald_scalar,
    chern_connection,
    curvature_bundle,
    isotropy_residual,
    landsberg,
    mean_berwald,
    mean_landsberg,
    nonlinear_connection,
    relation_check,
    spray,
    vanishing_threshold,
)
from berwald_scalar.volume_scurv import VolumeForm


@pytest.fixture(scope="module")
def riemann():
    return build_zoo("riemann-diag", n=2)


@pytest.fixture(scope="module")
def rotation():
    return build_zoo("randers-rotation", n=2)


@pytest.fixture(scope="module")
def funk():
    return build_zoo("funk", n=2)


class TestSpray:
    """Test the spray and its y-derivatives."""

    def test_minkowski_spray_vanishes(self):
        """An x-independent metric has no spray and no B."""
        m = build_zoo("minkowski-randers", n=2, b=0.5)
        p = sample_points(m, 5, seed=0)
        assert np.allclose(spray(m, p), 0.0, atol=1e-12)
        assert np.allclose(berwald_curvature(m, p), 0.0, atol=1e-12)

    def test_riemann_christoffel(self, riemann):
        """The spray of diag(exp(2 x1), 1) comes from its one Christoffel symbol."""
        # the only nonzero Christoffel symbol of diag(exp(2 x1), 1) is gamma^1_11 = 1
        p = PointOnTM(np.array([0.3, -0.1]), np.array([0.7, 0.4]))
        G = spray(m=riemann, p=p)
        assert G[0] == pytest.approx(0.5 * 0.7**2)
        assert G[1] == pytest.approx(0.0, abs=1e-12)

    def test_riemann_chern_is_christoffel(self, riemann):
        """On a Riemannian metric the Chern connection is Levi-Civita."""
        p = PointOnTM(np.array([0.3, -0.1]), np.array([0.7, 0.4]))
        expected = np.zeros((2, 2, 2))
        expected[0, 0, 0] = 1.0
        assert np.allclose(chern_connection(riemann, p), expected, atol=1e-10)

    def test_nonlinear_connection_is_y_gradient(self, riemann):
        """N is the y-gradient of the spray."""
        p = PointOnTM(np.array([0.3, -0.1]), np.array([0.7, 0.4]))
        N = nonlinear_connection(riemann, p)
        assert N[0, 0] == pytest.approx(0.7)
        assert np.allclose([N[0, 1], N[1, 0], N[1, 1]], 0.0, atol=1e-12)

    @settings(max_examples=10, deadline=None)
    @given(scale=st.floats(min_value=0.5, max_value=3.0))
    def test_spray_is_2_homogeneous(self, rotation, scale):
        """G scales as the square of y."""
        p = sample_points(rotation, 3, seed=4)
        assert np.allclose(spray(rotation, p.scaled(scale)), scale**2 * spray(rotation, p))


class TestBerwaldFamily:
    """Test B, L, J, E and e."""

    def test_berwald_randers_is_berwald(self):
        """berwald-randers has B = 0 and E = 0 in dimensions 2 and 3."""
        for n in (2, 3):
            m = build_zoo("berwald-randers", n=n)
            p = sample_points(m, 4, seed=0)
            assert np.allclose(berwald_curvature(m, p), 0.0, atol=1e-9)
            assert np.allclose(mean_berwald(m, p), 0.0, atol=1e-9)

    def test_b_symmetry_and_y_contraction(self, rotation):
        """B is symmetric in its lower indices and killed by y."""
        p = sample_points(rotation, 4, seed=1)
        B = berwald_curvature(rotation, p)

        assert np.abs(B).max() > 1e-3
        assert np.allclose(B, np.swapaxes(B, -1, -2), atol=1e-10)
        assert np.allclose(B, np.swapaxes(B, -2, -3), atol=1e-10)
        assert np.allclose(np.einsum("pijkl,pj->pikl", B, p.y), 0.0, atol=1e-10)

    def test_landsberg_and_mean_berwald_kill_y(self, rotation):
        """L is symmetric and L and E are killed by y."""
        p = sample_points(rotation, 4, seed=1)
        L = landsberg(rotation, p)
        E = mean_berwald(rotation, p)

        assert np.allclose(L, np.swapaxes(L, -1, -3), atol=1e-10)
        assert np.allclose(np.einsum("pjkl,pk->pjl", L, p.y), 0.0, atol=1e-10)
        assert np.allclose(np.einsum("pij,pj->pi", E, p.y), 0.0, atol=1e-10)
        assert mean_landsberg(rotation, p).shape == (4, 2)

    def test_funk_berwald_scalar(self, funk):
        """Funk has e = 3/2 and E = 3/2 h at unit y."""
        p = PointOnTM(np.array([0.1, -0.2]), np.array([0.6, 0.8]))
        assert float(berwald_scalar(funk, p)) == pytest.approx(1.5, abs=1e-8)
        assert np.allclose(mean_berwald(funk, p), 1.5 * angular_metric(funk, p), atol=1e-8)
        assert isotropy_residual(funk, p) < 1e-8

    def test_isotropy_fails_in_dimension_3(self):
        """E is not isotropic for the 3-dimensional rotation metric."""
        m = build_zoo("randers-rotation", n=3)
        p = sample_points(m, 4, seed=0)
        assert isotropy_residual(m, p) > 1e-4


class TestRelation:
    """Test the Berwald-Chern relation."""

    @pytest.mark.parametrize(
        "name,params",
        [
            ("randers-rotation", {"n": 2}),
            ("funk", {"n": 2}),
            ("alpha-beta-exponential", {"n": 3}),
        ],
    )
    def test_relation_holds(self, name, params):
        """The Berwald and Chern connections differ by the Landsberg tensor."""
        m = build_zoo(name, **params)
        assert relation_check(m, sample_points(m, 4, seed=2)) < 1e-8


class TestCurvatureBundle:
    """Test the batched bundle."""

    def test_shapes(self, rotation):
        """Bundle tensors carry the batch axis in front."""
        p = sample_points(rotation, 5, seed=0)
        bundle = curvature_bundle(rotation, p, VolumeForm("bh"))

        assert bundle.count == 5
        assert bundle.B.shape == (5, 2, 2, 2, 2)
        assert bundle.E.shape == (5, 2, 2)
        assert bundle.e.shape == (5,)
        assert bundle.S is not None and bundle.S.shape == (5,)
        assert bundle.Stilde is not None

    def test_grid_shapes(self, funk):
        """A grid of points keeps both batch axes and skips S without a volume."""
        x = np.zeros((2, 3, 2))
        y = np.broadcast_to(np.array([1.0, 0.0]), (2, 3, 2)).copy()
        bundle = curvature_bundle(funk, PointOnTM(x, y))
        assert bundle.e.shape == (2, 3)
        assert bundle.S is None

    def test_matches_single_operations(self, rotation):
        """The bundle agrees with the single-tensor functions."""
        p = sample_points(rotation, 40, seed=3)
        bundle = curvature_bundle(rotation, p)
        assert np.allclose(bundle.B, berwald_curvature(rotation, p))
        assert np.allclose(bundle.e, berwald_scalar(rotation, p))

    def test_e_scale(self, funk):
        """e_scale multiplies E and e."""
        p = sample_points(funk, 3, seed=0)
        plain = curvature_bundle(funk, p)
        doubled = curvature_bundle(funk, p, e_scale=2.0)
        assert np.allclose(doubled.E, 2.0 * plain.E)
        assert np.allclose(doubled.e, 2.0 * plain.e)

    def test_vanishing_threshold(self, funk):
        """The vanishing threshold is per point and above round-off."""
        p = sample_points(funk, 3, seed=0)
        threshold = vanishing_threshold(curvature_bundle(funk, p))
        assert threshold.shape == (3,)
        assert np.all(threshold > 1e-7)
