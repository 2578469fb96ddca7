"""The twelve acceptance criteria at their stated tolerances.

Each test records one PASS/FAIL line; the lines are printed together in the
pytest terminal summary.
"""

import contextlib
import filecmp
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from heisqc import experiments as ex
from heisqc import hardy_carleson as hc
from heisqc import modulus as md
from heisqc.cli import run
from heisqc.conformal_maps import MobiusParams, inversion, mobius, mobius_jacobian, sphere_image_check
from heisqc.heis_core import dilate, dist, group_mul, horiz_derivative, koranyi_norm
from heisqc.radial_polar import (cartesian_integrate, closed_form_dist, kappa_grid, mc_ball_volume, nt_ratio,
                                 polar_integrate, refined_kappa)
from heisqc.sphere_measures import HALF_PI, MeasureKind, QuadSpec, SpherePoint, embed, regularity_scan, total_measure


@contextlib.contextmanager
def criterion(number: int, title: str):
    detail = {}
    try:
        yield detail
    except BaseException:
        ACCEPTANCE_LINES.append(f"criterion {number}: FAIL  {title}  {detail}")
        raise
    ACCEPTANCE_LINES.append(f"criterion {number}: PASS  {title}  {detail}")


def _checks(outcome):
    return {c.name: c for c in outcome.checks}


def test_01_ring_modulus(quad):
    with criterion(1, "ring modulus and admissibility") as d:
        t = time.time()
        worst, adm = 0.0, 0.0
        for a, b in [(0.5, 1.0), (1 / math.e, 1.0), (0.25, 0.5)]:
            rho = md.ring_extremal_density(a, b)
            worst = max(worst, abs(md.energy(rho, quad) / md.ring_modulus_formula(a, b) - 1))
            curves = [md.radial_curve(SpherePoint(al, 0.7), a, b) for al in (-1.5, -0.4, 0.0, 0.9, 1.56)]
            rep = md.admissibility_check(rho, curves)
            adm = max(adm, abs(rep.summary["min_integral"] - 1), abs(rep.summary["max_integral"] - 1))
        d.update(rel_error=worst, admissibility=adm, seconds=round(time.time() - t, 2))
        assert worst <= 1e-6 and adm <= 1e-8 and d["seconds"] < 5


def test_02_radial_family_modulus(quad):
    with criterion(2, "radial-family modulus and r-scaling") as d:
        sets = [md.whole_sphere(), md.phi_band(), md.polar_cap(0.6), md.polar_cap(-0.3, north=False)]
        worst = max(abs(md.radial_family_modulus(E, r, quad) / md.radial_family_formula(E, r, quad) - 1)
                    for E in sets for r in (0.5, 0.25))
        expo = md.r_scaling(md.whole_sphere(), quad=quad).summary["exponent"]
        d.update(rel_error=worst, exponent=expo)
        assert worst <= 1e-6 and abs(expo + 3) <= 0.02


def test_03_polar_coordinates(quad):
    with criterion(3, "polar coordinates vs Monte Carlo and Cartesian") as d:
        t = time.time()
        vol, se = mc_ball_volume(10_000_000, quad.seed)
        exact = polar_integrate(lambda q: np.ones(q.shape[:-1]), quad=quad)
        worst = max(abs(polar_integrate(u, quad=quad) / cartesian_integrate(u) - 1) for u in ex.polar_suite().values())
        d.update(mc_sigmas=abs(vol - exact) / se, polar_vs_cartesian=worst, seconds=round(time.time() - t, 2))
        assert exact == pytest.approx(math.pi ** 2 / 2, rel=1e-10)
        assert abs(vol - exact) <= 3 * se and worst <= 1e-3 and d["seconds"] < 30


def test_04_measure_totals(quad):
    with criterion(4, "measure totals") as d:
        errs = {"Sigma": abs(total_measure(MeasureKind.Sigma, quad) / math.pi ** 2 - 1),
                "Sigma0": abs(total_measure(MeasureKind.Sigma0, quad) / (2 * math.pi ** 2) - 1),
                "S3": abs(total_measure(MeasureKind.S3, quad) / ex.S3_TOTAL - 1)}
        d.update(errs)
        assert errs["Sigma"] <= 1e-8 and errs["Sigma0"] <= 1e-10 and errs["S3"] <= 1e-8


def test_05_mobius_identities():
    with criterion(5, "Moebius identities, Jacobian and sphere images") as d:
        t = time.time()
        rng = np.random.default_rng(5)
        n = 10_000
        y, y2 = rng.uniform(-2, 2, size=(2, n, 3))
        inv = np.max(np.abs(dist(inversion(y), inversion(y2)) * koranyi_norm(y) * koranyi_norm(y2) / dist(y, y2) - 1))
        x, a = rng.uniform(-1.5, 1.5, size=(2, n, 3))
        keep = (dist(x, a) > 0.3) & (dist(y, a) > 0.1) & (dist(y2, a) > 0.1)
        x, a, yk, yk2 = x[keep], a[keep], y[keep], y2[keep]
        rho = rng.uniform(0.5, 2.0, len(x))
        c_inv = -inversion(group_mul(-a, x))  # inverse of I(a^{-1} x)
        T = lambda q: dilate(rho, group_mul(c_inv, inversion(group_mul(-a, q))))
        factor_err = np.max(np.abs(dist(T(yk), T(yk2)) * dist(a, yk) * dist(a, yk2) / (rho * dist(yk, yk2)) - 1))
        norm_err = np.max(np.abs(koranyi_norm(T(yk)) * dist(a, yk) * dist(a, x) / (rho * dist(x, yk)) - 1))
        prm = MobiusParams(np.array([0.2, -0.1, 0.3]), np.array([1.5, 0.4, -0.2]), 1.3)
        ys = rng.uniform(-0.7, 0.7, size=(200, 3))
        jacobian_err = np.max(np.abs(horiz_derivative(mobius(prm), ys).jacobian / mobius_jacobian(prm, ys) - 1))
        sphere_err = max(sphere_image_check(prm, r, samples=1000).summary["max_deviation"] for r in (0.1, 0.5, 2.0))
        d.update(tuples=int(len(x)), inversion=float(inv), factor_err=float(factor_err), norm_err=float(norm_err), jacobian_err=float(jacobian_err),
                 sphere_err=float(sphere_err), seconds=round(time.time() - t, 2))
        assert len(x) > 9000
        assert max(inv, factor_err, norm_err) <= 1e-10 and jacobian_err <= 1e-4 and sphere_err < 1e-10 and d["seconds"] < 10


def test_06_regularity(quad):
    with criterion(6, "3-regularity bracket stable under doubling") as d:
        base, fine = regularity_scan(quad), regularity_scan(quad.doubled())
        alphas = base.column("alpha")
        radii = base.column("r")
        d.update(C=base.summary["C"], C_doubled=fine.summary["C"])
        assert np.max(np.abs(alphas)) >= HALF_PI - 0.01
        assert radii.min() == 2.0 ** -10 and radii.max() == 0.5
        assert math.isfinite(base.summary["C"]) and abs(fine.summary["C"] / base.summary["C"] - 1) <= 0.10


def test_07_kappa_scan(quad):
    with criterion(7, "kappa scan, equatorial ratio, closed-form distance") as d:
        kappa, base, fine = refined_kappa(quad)
        change = abs(fine.summary["kappa_hat"] / base.summary["kappa_hat"] - 1)
        _, s = kappa_grid(quad)
        eq = np.max(np.abs(nt_ratio(s, SpherePoint(np.zeros_like(s), np.zeros_like(s))) - 1))
        rng = np.random.default_rng(7)
        n = 10_000
        sv = rng.uniform(0.05, 1.0, n)
        av, bv = rng.uniform(-HALF_PI + 1e-3, HALF_PI - 1e-3, size=(2, n))
        ph, phi0 = rng.uniform(-math.pi, math.pi, n), rng.uniform(0, 2 * math.pi, n)
        r = sv * np.sqrt(np.cos(av))
        q = np.stack([r * np.cos(phi0), r * np.sin(phi0), sv * sv * np.sin(av)], axis=-1)
        direct = dist(q, embed(SpherePoint(bv, phi0 + ph)))
        err = float(np.max(np.abs(closed_form_dist(sv, av, bv, ph) - direct)))
        d.update(kappa_hat=kappa, relative_change=change, equatorial=float(eq), closed_form=err,
                 min_distance=float(direct.min()))
        assert math.isfinite(kappa) and change <= 0.15 and eq <= 1e-10 and err < 1e-12


def test_08_carleson(quad, calib):
    with criterion(8, "Carleson densities stable across dyadic scales") as d:
        t = time.time()
        out = ex.carleson_experiment(ex.RunContext(quad, calib))
        checks = _checks(out)
        names = ["carleson_lebesgue", "carleson_singular_p1", "carleson_singular_p2",
                 "carleson_shifted_stretch_p1", "carleson_shifted_stretch_p2"]
        d.update({n: round(checks[n].value["gamma_hat"], 4) for n in names}, seconds=round(time.time() - t, 1))
        assert all(checks[n].passed for n in names) and d["seconds"] < 60


def test_09_hardy_equivalences(quad, calib):
    with criterion(9, "Fatou slack, pointwise maximal bound, chain constant") as d:
        out = ex.hardy_experiment(ex.RunContext(quad, calib))
        checks = _checks(out)
        fatou = [c for c in out.checks if c.name.startswith("fatou_")]
        pointwise = [c for c in out.checks if c.name.startswith("pointwise_")]
        chain = [c for c in out.checks if c.name.startswith("chain_")]
        d.update(min_fatou_slack=min(c.value for c in fatou),
                 chain={c.name[6:]: round(c.value, 3) for c in chain})
        assert len(fatou) == 8 and len(pointwise) == 4 and len(chain) == 8
        assert min(c.value for c in fatou) >= -1e-6
        assert all(c.passed for c in pointwise + chain)
        assert checks["curves_in_region"].passed


def test_10_necessity_slope(quad):
    with criterion(10, "necessity slopes 3 - beta p") as d:
        reps = {e: hc.necessity_slope(e, radii=2.0 ** -np.arange(3, 8), quad=quad) for e in (4.0, 6.0)}
        d.update({f"slope_{e:g}": r.summary["slope"] for e, r in reps.items()})
        assert all(r.summary["error"] <= 0.15 for r in reps.values())


def test_11_hardy_to_bergman(quad, calib):
    with criterion(11, "ap_norm(f, 4p/3) finite for bounded Hardy profiles") as d:
        out = ex.embedding_experiment(ex.RunContext(quad, calib))
        rows = [r for s in out.scans if s.name == "hardy-to-bergman" for r in s.cells]
        bounded = [r for r in rows if r["bounded"]]
        d.update(bounded=len(bounded), of=len(rows))
        assert bounded and all(math.isfinite(r["ap_norm"]) for r in bounded)


@pytest.mark.parametrize("experiment", ["verify-polar", "kappa-scan", "carleson"])
def test_12_determinism(experiment, tmp_path):
    with criterion(12, f"bit-identical rerun of {experiment}") as d:
        a, b = tmp_path / "a", tmp_path / "b"
        assert run(["--experiment", experiment, "--out", str(a)]) == 0
        assert run(["--experiment", experiment, "--out", str(b)]) == 0
        same = all(filecmp.cmp(a / f, b / f, shallow=False) for f in ("report.json", "tables.csv"))
        d.update(identical=same)
        assert same
