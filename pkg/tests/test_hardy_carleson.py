import math

import numpy as np
import pytest

from heisqc import hardy_carleson as hc
from heisqc.experiments import S3_TOTAL
from heisqc.heis_core import koranyi_norm, point
from heisqc.qc_models import boundary_singular_map, identity, pole_near, random_ball_points, shifted_stretch, stretch
from heisqc.radial_polar import kappa_grid, radial_point
from heisqc.sphere_measures import HALF_PI, QuadSpec, SpherePoint, embed


def singular(beta, r=0.0, alpha=1.2, phi=0.3):
    return boundary_singular_map(pole_near(SpherePoint(alpha, phi), r), beta)


def test_identity_hardy_profile(quad):
    prof = hc.hardy_norm(identity(), 2.0, quad=quad)
    assert np.allclose(prof.values, prof.s_grid ** 2 * S3_TOTAL, rtol=1e-8)
    assert prof.divergence_slope is None
    assert prof.norm == pytest.approx(math.sqrt(S3_TOTAL), rel=1e-8)


@pytest.mark.parametrize("beta,p", [(2.0, 2.0), (2.0, 3.0)])
def test_divergence_slope(beta, p, quad):
    prof = hc.hardy_norm(singular(beta), p, quad=quad)
    assert prof.divergence_slope == pytest.approx(3 - beta * p, abs=0.2)


@pytest.mark.parametrize("f", [identity(), stretch(2.0), singular(1.0), singular(2.0, 0.1, 0.4, 1.0)],
                         ids=["identity", "stretch", "singular", "singular_off"])
def test_fatou_slack(f, quad):
    for p in (1.0, 2.0):
        assert hc.fatou_check(f, p, quad).summary["slack"] >= -1e-6


def test_radial_limits():
    w = SpherePoint(0.5, 2.0)
    lim = hc.radial_limit(identity(), w)
    assert lim.converged and np.allclose(lim.value, embed(w), atol=1e-8)
    f = singular(2.0)
    lim = hc.radial_limit(f, w)
    expected = float(koranyi_norm(f(embed(w))))
    assert lim.converged and float(koranyi_norm(lim.value)) == pytest.approx(expected, rel=1e-6)


def test_regions_and_shadows(calib, quad):
    alphas, svals = kappa_grid(quad)
    A, S = np.meshgrid(alphas, svals, indexing="ij")
    om = SpherePoint(A, np.zeros_like(A))
    assert hc.in_nt_region(radial_point(S, om), om, calib.kappa_hat).all()
    rng = np.random.default_rng(0)
    w = SpherePoint(rng.uniform(-1.5, 1.5, 200), rng.uniform(0, 6, 200))
    assert hc.shadow_contains(np.zeros((200, 3)), w, calib.kappa_hat).all()
    q = 0.95 * random_ball_points(200, 1)
    assert np.array_equal(hc.in_nt_region(q, w, 0.37), hc.shadow_contains(q, w, 0.37))


def test_maximal_function_dominates_boundary_values(calib, quad):
    f = singular(1.0)
    grid = hc.maximal_on_grid(f, calib.kappa_hat, quad, 5, 4)
    rep = hc.pointwise_maximal_check(f, calib.kappa_hat, quad, 5, 4, maximal=grid)
    assert rep.passed and rep.summary["skipped"] == 0
    chain = hc.chain_check(f, 2.0, calib.kappa_hat, quad, 5, 4, maximal=grid)
    assert chain.summary["C_hat"] >= 1 - 1e-6 and math.isfinite(chain.summary["C_hat"])


def test_carleson_lebesgue_is_stable(quad):
    centers = SpherePoint(np.array([-HALF_PI + 0.01, 0.0, 1.0]), np.array([0.3, 1.0, 2.0]))
    est = hc.carleson_constant(hc.lebesgue_density, 4 / 3, [2.0 ** -k for k in range(1, 9)], centers, quad, 4096)
    coarse, stable = hc.carleson_stability(est)
    assert stable and math.isfinite(est.gamma_hat)


def test_ball_mass_of_lebesgue_is_ball_volume():
    # a radius-3 ball around a boundary point covers the whole unit ball
    mass = hc.ball_mass(hc.lebesgue_density, SpherePoint(0.0, 0.0), 3.0, 2 ** 17, 5)
    assert mass == pytest.approx(math.pi ** 2 / 2, rel=5e-3)


def test_grad_log_density_of_identity():
    q = random_ball_points(100, 3, 0.9)
    q = q[koranyi_norm(q) > 0.05]
    assert np.allclose(hc.grad_log_norm_density(identity())(q),
                       np.hypot(q[:, 0], q[:, 1]) / koranyi_norm(q) ** 2, rtol=1e-6)


def test_qc_density_domain():
    with pytest.raises(ValueError):
        hc.qc_carleson_density(identity(), 4.0)


def test_ap_norms(quad):
    assert math.isfinite(hc.ap_norm(identity(), 4 / 3, quad))
    assert math.isinf(hc.ap_norm(singular(1.0), 4.5, quad))


def test_ap_norm_of_identity_closed_form(quad):
    # int_B |q|^2 dq = 2 pi^2 / 6
    assert hc.ap_norm(identity(), 2.0, quad) == pytest.approx(math.sqrt(math.pi ** 2 / 3), rel=1e-6)


@pytest.mark.parametrize("exponent", [4.0, 6.0])
def test_necessity_slope(exponent, quad):
    assert hc.necessity_slope(exponent, quad=quad).summary["error"] <= 0.15


def test_central_smallness_after_recentring(quad):
    from heisqc.heis_core import inverse
    from heisqc.qc_models import compose, translation
    f = singular(1.0)
    g = compose(translation(inverse(f(embed(SpherePoint(0.3, 0.0))))), f)
    rep = hc.central_smallness(g, quad=quad)
    assert rep.passed and rep.summary["measures"][0] > 0


def test_embedding_ratio_is_finite(quad):
    lhs, rhs, ratio = hc.embedding_check(shifted_stretch(2.0), hc.lebesgue_density, 1.0, 4 / 3, quad)
    assert 0 < ratio < math.inf
