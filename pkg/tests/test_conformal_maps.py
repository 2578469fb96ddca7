import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from heisqc.conformal_maps import (Calibration, MobiusParams, ball_inclusion_scan, canonical_T,
                                   conjugation_transfer_check, corkscrew_exterior, corkscrew_interior,
                                   horizontal_normal, inversion, load_calibration, mobius, mobius_jacobian,
                                   normalization_scan, parse_key_values, pole_image, remark_properties,
                                   sphere_image_check)
from heisqc.heis_core import dilate, dist, group_mul, horiz_derivative, koranyi_norm, point
from heisqc.qc_models import inversion_composite, stretch
from heisqc.radial_polar import boundary_distance, radial_point
from heisqc.sphere_measures import HALF_PI, SpherePoint, embed

coord = st.floats(-2.0, 2.0)
pts = st.tuples(coord, coord, coord).map(np.array).filter(lambda p: float(koranyi_norm(p)) > 0.1)


@given(pts, pts)
def test_inversion_distance_formula(y, y2):
    lhs = float(dist(inversion(y), inversion(y2))) * float(koranyi_norm(y)) * float(koranyi_norm(y2))
    assert lhs == pytest.approx(float(dist(y, y2)), rel=1e-10, abs=1e-12)


@given(pts)
def test_inversion_is_involution(y):
    assert np.allclose(inversion(inversion(y)), y, rtol=1e-12, atol=1e-12)


def test_inversion_examples():
    assert np.array_equal(inversion(point(0, 0, 1)) + 0.0, [0.0, 0.0, -1.0])
    assert np.array_equal(inversion(point(1, 0, 0)) + 0.0, [-1.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        inversion(point(0, 0, 0))


PARAMS = MobiusParams(point(0.2, -0.1, 0.3), point(1.5, 0.4, -0.2), 1.3)


def test_mobius_sends_x_to_origin_and_inverts():
    T = mobius(PARAMS)
    assert np.allclose(T(PARAMS.x), 0.0, atol=1e-14)
    y = np.random.default_rng(1).uniform(-1, 1, size=(100, 3))
    assert np.allclose(T.inverse(T(y)), y, atol=1e-11)


def test_mobius_distance_factor():
    T = mobius(PARAMS)
    rng = np.random.default_rng(2)
    y, y2 = rng.uniform(-1, 1, size=(2, 500, 3))
    expected = PARAMS.rho * dist(y, y2) / (dist(PARAMS.a, y) * dist(PARAMS.a, y2))
    assert np.allclose(dist(T(y), T(y2)), expected, rtol=1e-10)


def test_mobius_pole_image():
    T = mobius(PARAMS)
    far = group_mul(PARAMS.a, dilate(1e8, embed(SpherePoint(0.2, 1.0))))
    assert float(dist(T(far), pole_image(PARAMS))) < 1e-7


def test_mobius_jacobian_against_finite_differences():
    y = np.random.default_rng(3).uniform(-0.7, 0.7, size=(50, 3))
    fd = horiz_derivative(mobius(PARAMS), y).jacobian
    assert np.allclose(fd, mobius_jacobian(PARAMS, y), rtol=1e-4)


def test_inversion_jacobian():
    y = np.random.default_rng(4).uniform(-1, 1, size=(50, 3))
    y = y[koranyi_norm(y) > 0.4]
    assert np.allclose(horiz_derivative(inversion, y).jacobian, koranyi_norm(y) ** -8, rtol=1e-4)


@pytest.mark.parametrize("r", [0.1, 0.5, 2.0])
def test_sphere_images(r):
    assert sphere_image_check(PARAMS, r).summary["max_deviation"] < 1e-10


def test_mobius_params_validation():
    with pytest.raises(ValueError):
        MobiusParams(point(0, 0, 0), point(0, 0, 0), 1.0)
    with pytest.raises(ValueError):
        MobiusParams(point(0, 0, 0), point(1, 0, 0), 0.0)


def test_equatorial_corkscrew():
    r = 0.1
    w = SpherePoint(0.0, 0.0)
    q = radial_point(1 - r / 2, w)
    assert float(boundary_distance(q)[0]) == pytest.approx(r / 2, abs=1e-12)
    assert corkscrew_interior(w, r, 2.0).satisfies(2.0)
    assert corkscrew_exterior(w, r, 2.0).satisfies(2.0)


@pytest.mark.parametrize("alpha", [-HALF_PI + 0.01, -0.5, 0.7, HALF_PI - 0.01])
def test_corkscrews_near_characteristic_points(alpha, calib):
    for r in (0.2, 0.01, 1e-3):
        ci = corkscrew_interior(SpherePoint(alpha, 0.4), r, calib.M0)
        ce = corkscrew_exterior(SpherePoint(alpha, 0.4), r, calib.M0)
        assert ci.satisfies(calib.M0) and ce.satisfies(calib.M0)
        assert koranyi_norm(ci.point) < 1 < koranyi_norm(ce.point)


def test_horizontal_normal_is_unit():
    n = horizontal_normal(embed(SpherePoint(0.3, 1.0)))
    assert math.hypot(n[0], n[1]) == pytest.approx(1.0, abs=1e-12)


def test_packaged_calibration(calib):
    assert calib == load_calibration()
    assert calib.kappa_hat == pytest.approx(0.37197762807678525, abs=1e-12)
    assert calib.r_star == pytest.approx(calib.r0 / (calib.M0 * calib.N), rel=1e-12)
    assert 0 < calib.r_star < calib.r0 and calib.R_star < 1


def test_calibration_text_round_trip():
    c = Calibration(kappa_hat=0.3, M0=2.5)
    assert Calibration.from_mapping(parse_key_values(c.to_text())) == c
    with pytest.raises(ValueError):
        parse_key_values("no equals sign")


def test_canonical_map_properties(calib):
    for lat in (-1.4, 0.0, 1.0):
        x = radial_point(1 - 0.5 * (1 - calib.R_star), SpherePoint(lat, 0.2))
        data = canonical_T(x, calib)
        assert all(remark_properties(data, calib).values())
        assert np.allclose(data.handle(x), 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        canonical_T(point(0.1, 0, 0), calib)


def test_inclusion_and_normalization(calib):
    incl = ball_inclusion_scan(calib).summary
    assert incl["m"] == pytest.approx(0.1467, abs=1e-3)
    assert incl["M"] == pytest.approx(0.3119, abs=1e-3)
    assert normalization_scan(calib).summary["c_hat"] == pytest.approx(0.0572, abs=1e-3)


def test_conjugation_transfer():
    prm = MobiusParams(point(0, 0, 0), point(3.0, 0.0, 0.5), 1.0)
    region = (SpherePoint(0.5, 0.2), 0.05)
    conf = conjugation_transfer_check(inversion_composite(), prm, region).summary
    assert conf["ratio_min"] == pytest.approx(1, abs=1e-3) and conf["ratio_max"] == pytest.approx(1, abs=1e-3)
    st_ = conjugation_transfer_check(stretch(2.0), prm, region).summary
    assert 0 < st_["comparability_min"] <= st_["comparability_max"] < np.inf
