import math

import numpy as np
import pytest
from scipy.optimize import minimize
from hypothesis import given
from hypothesis import strategies as st

from heisqc.heis_core import dist, koranyi_norm, point
from heisqc.radial_polar import (appendix_bounds_scan, big_M, boundary_distance, cartesian_integrate,
                                 closed_form_dist, dist_to_boundary, hitting_param, kappa_scan,
                                 level_set_radius, mc_ball_volume, nt_ratio, polar_integrate, radial_coordinates,
                                 radial_gap, radial_point, refined_kappa)
from heisqc.qc_models import identity, stretch
from heisqc.sphere_measures import HALF_PI, QuadSpec, SpherePoint, embed

alphas = st.floats(-HALF_PI + 1e-3, HALF_PI - 1e-3)
phis = st.floats(0.0, 2 * math.pi, exclude_max=True)
params = st.floats(0.05, 1.0)


def _brute_force_boundary_distance(q, n=2001):
    # dense (latitude, angle) grid, then Nelder-Mead from the best node
    edge = HALF_PI - 1e-15
    a, f = np.meshgrid(np.linspace(-edge, edge, n), np.linspace(0, 2 * math.pi, 721)[:-1], indexing="ij")
    d = dist(q, embed(SpherePoint(a, f)))
    k = np.unravel_index(np.argmin(d), d.shape)
    obj = lambda v: float(dist(q, embed(SpherePoint(float(np.clip(v[0], -edge, edge)), v[1]))))
    res = minimize(obj, [a[k], f[k]], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15})
    return min(float(d[k]), res.fun)


@given(params, alphas, phis)
def test_radial_curve_has_gauge_s(s, a, f):
    assert float(koranyi_norm(radial_point(s, SpherePoint(a, f)))) == pytest.approx(s, rel=1e-14)


@given(params, alphas, phis)
def test_radial_coordinates_invert(s, a, f):
    s2, w = radial_coordinates(radial_point(s, SpherePoint(a, f)))
    assert float(s2) == pytest.approx(s, rel=1e-13)
    assert float(w.alpha) == pytest.approx(a, abs=1e-9)
    assert math.cos(float(w.phi) - f) == pytest.approx(1.0, abs=1e-9)


def test_polar_volume_and_annulus(quad):
    one = lambda q: np.ones(q.shape[:-1])
    assert polar_integrate(one, quad=quad) == pytest.approx(math.pi ** 2 / 2, rel=1e-10)
    assert polar_integrate(one, (0.3, 0.8), quad) == pytest.approx(math.pi ** 2 * (0.8 ** 4 - 0.3 ** 4) / 2, rel=1e-10)


@pytest.mark.parametrize("u", [lambda q: koranyi_norm(q) ** 2, lambda q: q[..., 2] ** 2,
                               lambda q: np.cos(q[..., 0]) * np.exp(q[..., 2]) + q[..., 1] ** 2])
def test_polar_matches_cartesian(u, quad):
    assert polar_integrate(u, quad=quad) == pytest.approx(cartesian_integrate(u), rel=1e-3)


def test_monte_carlo_volume():
    vol, se = mc_ball_volume(1_000_000, 3)
    assert abs(vol - math.pi ** 2 / 2) < 3 * se


def test_boundary_distance_on_axis_against_brute_force():
    q = point(0.0, 0.0, 0.5)
    oracle = _brute_force_boundary_distance(q)
    assert oracle == pytest.approx(math.sqrt(0.5), abs=1e-6)
    assert float(boundary_distance(q)[0]) == pytest.approx(math.sqrt(0.5), abs=1e-12)


def test_boundary_distance_generic_point_against_brute_force():
    q = point(0.3, -0.2, 0.25)
    assert float(boundary_distance(q)[0]) == pytest.approx(_brute_force_boundary_distance(q), abs=1e-6)


def test_boundary_distance_examples():
    assert dist_to_boundary(point(0, 0, 0)).value == pytest.approx(1.0, abs=1e-14)
    assert dist_to_boundary(point(0.4, 0, 0)).value == pytest.approx(0.6, abs=1e-14)
    with pytest.raises(ValueError):
        dist_to_boundary(point(1.0, 0.5, 0.0))


@given(params, alphas, alphas, st.floats(-math.pi, math.pi))
def test_closed_form_distance(s, a, b, f):
    q = point(s * math.sqrt(math.cos(a)), 0.0, s * s * math.sin(a))
    direct = float(dist(q, embed(SpherePoint(b, f))))
    assert float(closed_form_dist(s, a, b, f)) == pytest.approx(direct, abs=1e-10)


@given(alphas, st.floats(1e-3, 0.9))
def test_hitting_parameter(a, rho):
    w = SpherePoint(a, 0.3)
    s = hitting_param(w, rho)
    assert float(radial_gap(s, w)) == pytest.approx(rho, abs=1e-10)
    assert s >= 1 - rho - 1e-12


def test_equator_ratio_is_one():
    s = np.linspace(0.1, 0.999, 50)
    assert np.allclose(nt_ratio(s, SpherePoint(np.zeros(50), np.zeros(50))), 1.0, atol=1e-10)


def test_kappa_scan_values(quad):
    kappa, base, fine = refined_kappa(quad)
    assert base.summary["kappa_hat"] == pytest.approx(0.36986, abs=1e-5)
    assert kappa == pytest.approx(0.371978, abs=1e-5)
    assert abs(fine.summary["kappa_hat"] / base.summary["kappa_hat"] - 1) < 0.15
    assert base.summary["min_ratio"] >= 1 - 1e-9


def test_kappa_scan_is_deterministic():
    q = QuadSpec(n_alpha=20, n_s=12)
    assert kappa_scan(q).as_dict() == kappa_scan(q).as_dict()


def test_appendix_bounds(quad):
    s = appendix_bounds_scan(quad).summary
    assert s["C_hat"] == pytest.approx(1.0607, abs=1e-3)
    assert s["c_hat"] == pytest.approx(0.569, abs=1e-3)


def test_level_set_radius():
    r = np.array([0.2, 0.5, 0.9])
    assert np.allclose(level_set_radius(r, 0.0), r, atol=1e-12)
    slab = 1 - (1 - r) ** 2
    assert np.all(level_set_radius(r, slab) == 0.0)
    with pytest.raises(ValueError):
        level_set_radius(0.5, 0.9)


def test_vertical_axis_distance():
    tau = np.linspace(-0.9, 0.9, 19)
    d, _, _ = boundary_distance(point(0 * tau, 0 * tau, tau))
    assert np.allclose(d, np.sqrt(1 - np.abs(tau)), atol=1e-12)


def test_big_M():
    r = np.linspace(0.1, 0.9, 5)
    Mi = big_M(r, identity())
    assert np.all(Mi <= 1) and np.all(np.diff(Mi) > 0)
    assert np.allclose(big_M(r, stretch(2.0)), Mi ** 2, atol=1e-12)
