import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heisqc.heis_core import dist, horiz_derivative, koranyi_norm
from heisqc.qc_models import (MODEL_MAPS, boundary_singular_map, composition_closure_check, dilation_stretch,
                              distortion_estimate, distortion_inequality_scan, growth_estimate_check,
                              inversion_composite, model_map, pole_near, radial_derivative_bound_check,
                              random_ball_points, shifted_stretch, stretch)
from heisqc.sphere_measures import SpherePoint

betas = st.floats(0.3, 4.0)


@given(betas)
def test_stretch_maps_spheres_to_spheres(beta):
    q = random_ball_points(200, 1, 1.5)
    assert np.allclose(koranyi_norm(stretch(beta)(q)), koranyi_norm(q) ** beta, rtol=1e-12)


def test_stretch_with_beta_one_is_identity():
    q = random_ball_points(100, 2)
    assert np.allclose(stretch(1.0)(q), q, atol=1e-14)


def test_stretch_is_contact_but_dilation_stretch_is_not():
    q = random_ball_points(100, 3, 0.9)
    q = q[koranyi_norm(q) > 0.05]
    assert horiz_derivative(stretch(2.0), q).contact_residual.max() < 1e-9
    assert horiz_derivative(dilation_stretch(2.0), q).contact_residual.max() > 0.1
    assert np.allclose(koranyi_norm(dilation_stretch(2.0)(q)), koranyi_norm(q) ** 2)


@pytest.mark.parametrize("name", ["identity", "dilation", "rotation", "translation"])
def test_conformal_models_have_unit_distortion(name):
    q = random_ball_points(20, 4, 0.9)
    assert np.allclose(distortion_estimate(model_map(name), q), 1.0, atol=1e-6)


def test_stretch_distortion_grows_with_beta():
    q = random_ball_points(20, 5, 0.9)
    means = [float(np.mean(distortion_estimate(stretch(b), q))) for b in (1.0, 1.5, 2.0, 3.0)]
    assert np.all(np.diff(means) > 0)


def test_distortion_inequality_constant():
    s = distortion_inequality_scan(stretch(2.0), samples=100).summary
    # sampled sup: approaches 16 from below as more points are drawn
    assert 15.9 < s["K_hat"] <= 16.0 * (1 + 1e-6)
    assert s["relative_change"] < 1e-3
    s = distortion_inequality_scan(inversion_composite(), samples=100).summary
    assert s["K_hat"] == pytest.approx(1.0, abs=1e-6)


def test_composition_closure():
    q = random_ball_points(12, 6, 0.5)
    assert composition_closure_check(stretch(3.0), inversion_composite(), q).passed


def test_boundary_singular_norm():
    a = pole_near(SpherePoint(0.4, 1.0), 0.1)
    f = boundary_singular_map(a, 2.0)
    q = random_ball_points(200, 7)
    assert np.allclose(koranyi_norm(f(q)), dist(q, a) ** -2.0, rtol=1e-12)
    with pytest.raises(ValueError):
        boundary_singular_map(np.array([0.5, 0.0, 0.0]))


def test_radial_derivative_bound():
    s = np.array([0.3, 0.8, 0.99])
    om = SpherePoint(np.array([[-1.2], [0.0], [1.0]]), np.full((3, 1), 0.4))
    for f in (stretch(2.0), boundary_singular_map(pole_near(SpherePoint(1.2, 0.3), 0.05), 2.0)):
        assert radial_derivative_bound_check(f, om, s[None, :]).summary["min_slack"] >= -1e-6


def test_growth_exponents(quad):
    singular = growth_estimate_check(boundary_singular_map(pole_near(SpherePoint(1.2, 0.3), 0.0), 2.0), quad)
    assert singular.summary["slope"] == pytest.approx(-2.0, abs=0.15) and singular.passed
    bounded = growth_estimate_check(shifted_stretch(2.0), quad)
    assert abs(bounded.summary["slope"]) < 0.15 and bounded.passed


def test_registry():
    assert set(MODEL_MAPS) >= {"identity", "stretch", "boundary_singular", "shifted_stretch"}
    with pytest.raises(KeyError):
        model_map("nope")
    with pytest.raises(ValueError):
        stretch(0.0)


def test_random_ball_points_are_inside():
    q = random_ball_points(1000, 8, 0.7)
    assert q.shape == (1000, 3) and koranyi_norm(q).max() < 0.7
    assert np.array_equal(q, random_ball_points(1000, 8, 0.7))
