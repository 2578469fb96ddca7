import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heisqc.experiments import S3_TOTAL
from heisqc.heis_core import dist, koranyi_norm
from heisqc.sphere_measures import (HALF_PI, MeasureKind, QuadSpec, SphereGrid, SpherePoint, area_form_product,
                                    density, embed, hl_maximal, integrate_ball, integrate_sphere, project,
                                    regularity_scan, sphere_ball_measure, total_measure)

alphas = st.floats(-HALF_PI + 1e-6, HALF_PI - 1e-6)
phis = st.floats(0.0, 2 * math.pi, exclude_max=True)


def test_s3_reference_against_high_precision_oracle():
    mpmath.mp.dps = 40
    oracle = 2 * mpmath.pi * mpmath.quad(lambda a: mpmath.sqrt(mpmath.cos(a)), [-mpmath.pi / 2, 0, mpmath.pi / 2])
    assert abs(float(oracle) - S3_TOTAL) < 1e-12


def test_totals(quad):
    assert total_measure(MeasureKind.Sigma, quad) == pytest.approx(math.pi ** 2, rel=1e-8)
    assert total_measure(MeasureKind.Sigma0, quad) == pytest.approx(2 * math.pi ** 2, rel=1e-10)
    assert total_measure(MeasureKind.S3, quad) == pytest.approx(S3_TOTAL, rel=1e-8)


def test_density_ordering():
    a = np.linspace(-HALF_PI, HALF_PI, 101)
    sig, s3, sig0 = (density(k, a) for k in (MeasureKind.Sigma, MeasureKind.S3, MeasureKind.Sigma0))
    assert np.all(sig <= s3 + 1e-15) and np.all(s3 <= sig0)


@given(alphas, phis)
def test_embed_lands_on_sphere_and_projects_back(a, f):
    p = embed(SpherePoint(a, f))
    assert abs(float(koranyi_norm(p)) - 1.0) < 1e-14
    w = project(p)
    assert float(w.alpha) == pytest.approx(a, abs=1e-9)
    assert math.cos(float(w.phi) - f) == pytest.approx(1.0, abs=1e-12)


@given(alphas, phis)
def test_area_form_matches_density(a, f):
    assert float(area_form_product(a, f)) == pytest.approx(math.sqrt(math.cos(a)), abs=1e-12)


def test_embed_example():
    assert np.allclose(embed(SpherePoint(math.pi / 3, 0.0)), [math.sqrt(0.5), 0.0, math.sqrt(3) / 2], atol=1e-15)


def test_project_rejects_off_sphere_and_poles():
    with pytest.raises(ValueError):
        project(np.array([0.5, 0.0, 0.0]))
    with pytest.raises(ValueError):
        project(np.array([0.0, 0.0, 1.0]))


def test_integrate_trig_moment(quad):
    value = integrate_sphere(lambda w: np.sin(w.alpha) ** 2, MeasureKind.Sigma0, quad)
    assert value == pytest.approx(math.pi ** 2, rel=1e-10)


def test_ball_measure_is_monotone_and_saturates(quad):
    w = SpherePoint(0.4, 1.0)
    values = [sphere_ball_measure(w, r, MeasureKind.S3, quad) for r in (0.01, 0.1, 0.5, 1.0, 2.5)]
    assert np.all(np.diff(values) >= 0)
    assert values[-1] == pytest.approx(S3_TOTAL, rel=1e-6)


def test_ball_measure_against_monte_carlo():
    # uniform sampling in (alpha, phi) weighted by the density is an independent estimate
    rng = np.random.default_rng(7)
    n = 400_000
    a = rng.uniform(-HALF_PI, HALF_PI, n)
    f = rng.uniform(0, 2 * math.pi, n)
    center = SpherePoint(0.3, 0.5)
    inside = dist(embed(SpherePoint(a, f)), embed(center)) < 0.3
    estimate = 2 * math.pi ** 2 * np.mean(inside * np.sqrt(np.cos(a)))
    se = 2 * math.pi ** 2 * np.std(inside * np.sqrt(np.cos(a))) / math.sqrt(n)
    value = sphere_ball_measure(center, 0.3, MeasureKind.S3, QuadSpec())
    assert abs(value - estimate) < 4 * se


def test_integrate_ball_of_constant_is_mass():
    num, mass = integrate_ball(lambda w: np.full(np.shape(w.alpha), 2.0), SpherePoint(0.0, 0.0), 0.2, MeasureKind.S3)
    assert float(num) == pytest.approx(2 * float(mass), rel=1e-14)


def test_maximal_function_bounds():
    q = QuadSpec(n_alpha=16, n_phi=16)
    w = SpherePoint(0.2, 0.5)
    assert hl_maximal(lambda v: np.full(np.shape(v.alpha), 3.0), w, q) == pytest.approx(3.0, rel=1e-12)
    g = lambda v: 0.5 + 0.25 * np.cos(v.phi)
    assert hl_maximal(g, w, q) <= 0.75 + 1e-12


def test_regularity_constant_is_stable(quad):
    base = regularity_scan(quad).summary["C"]
    fine = regularity_scan(quad.doubled()).summary["C"]
    assert abs(fine / base - 1) < 0.1
    assert base == pytest.approx(4.1847, abs=1e-3)


def test_quadspec_validation():
    with pytest.raises(ValueError):
        QuadSpec(n_alpha=1)
    with pytest.raises(ValueError):
        QuadSpec(rel_tol=0.0)
    assert QuadSpec().doubled().n_phi == 128


def test_grid_weights_shape(quad):
    grid = SphereGrid.from_quad(quad)
    assert grid.weights(MeasureKind.S3).shape == (quad.n_alpha, quad.n_phi)
