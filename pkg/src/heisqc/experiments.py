"""The verification experiments run by the command line.

Each experiment takes a ``RunContext`` and fills an ``Outcome`` with named
checks (value, limit, verdict) and the scan tables behind them.  Everything
is seeded from ``QuadSpec.seed`` so reruns are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import hardy_carleson as hc
from . import modulus as md
from . import qc_models as qm
from .conformal_maps import (Calibration, MobiusParams, ball_inclusion_scan, calibrate_constants, canonical_T,
                             conjugation_transfer_check, corkscrew_interior, inversion, mobius, mobius_jacobian,
                             normalization_scan, pole_image, remark_properties, sphere_image_check,
                             verify_corkscrews)
from .handles import MapHandle
from .heis_core import (dilate, dist, grad_koranyi_norm, group_mul, horiz_derivative, horizontal_frame, inverse,
                        koranyi_norm, point, rotate)
from .radial_polar import (appendix_bounds_scan, big_M, boundary_distance, cartesian_integrate, closed_form_dist,
                           dist_to_boundary, hitting_param, kappa_grid, level_set_radius, mc_ball_volume,
                           nt_ratio, polar_integrate, radial_gap, radial_point, radial_speed, refined_kappa)
from .report import ScanReport
from .sphere_measures import (HALF_PI, MeasureKind, QuadSpec, SphereGrid, SpherePoint, area_form_product, density,
                              embed, hl_maximal, integrate_sphere, project, regularity_scan, total_measure)

# Reference value of int sqrt(cos a) da dphi over the sphere, from a 1D
# quadrature at 50 digits (see tests/test_sphere_measures.py for the oracle).
S3_TOTAL = 15.0562742376627


@dataclass
class RunContext:
    quad: QuadSpec
    calib: Calibration
    params: dict = field(default_factory=dict)
    map_name: str | None = None

    def param(self, key: str, default):
        value = self.params.get(key, default)
        return type(default)(value) if isinstance(default, (int, float)) and not isinstance(default, bool) else value

    def map_params(self) -> dict:
        return {k[4:]: v for k, v in self.params.items() if k.startswith("map.")}


@dataclass
class Check:
    name: str
    value: object
    limit: str
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "limit": self.limit, "pass": bool(self.passed)}


@dataclass
class Outcome:
    checks: list = field(default_factory=list)
    scans: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def check(self, name: str, value, limit: str, passed) -> Check:
        c = Check(name, value, limit, bool(passed))
        self.checks.append(c)
        return c

    def scan(self, report: ScanReport) -> ScanReport:
        self.scans.append(report)
        return report

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _rng(ctx: RunContext, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([ctx.quad.seed, stream]))


def _random_points(rng, n: int, lo: float = -1.0, hi: float = 1.0) -> np.ndarray:
    return rng.uniform(lo, hi, size=(n, 3))


def _random_sphere(rng, n: int, edge: float = 1e-3) -> SpherePoint:
    return SpherePoint(rng.uniform(-HALF_PI + edge, HALF_PI - edge, n), rng.uniform(0.0, 2.0 * math.pi, n))


def _rel(a, b) -> float:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def _suite(ctx: RunContext, default: dict) -> dict:
    """Model maps for a scan, or just ``--map`` with its ``map.*`` parameters."""
    if ctx.map_name:
        return {ctx.map_name: qm.model_map(ctx.map_name, **ctx.map_params())}
    return {name: build() for name, build in default.items()}


def _singular(beta: float, r: float = 0.0, alpha: float = 1.2, phi: float = 0.3) -> MapHandle:
    return qm.boundary_singular_map(qm.pole_near(SpherePoint(alpha, phi), r), beta)


# ---------------------------------------------------------------------------
# verify-core


CONFORMAL_MODELS = ("identity", "dilation", "rotation", "translation", "inversion")
CONTACT_MODELS = CONFORMAL_MODELS + ("stretch", "shifted_stretch")


def verify_core(ctx: RunContext) -> Outcome:
    out = Outcome()
    rng = _rng(ctx, 1)
    n = 10_000
    p, q, r = (_random_points(rng, n) for _ in range(3))
    assoc = float(np.abs(group_mul(group_mul(p, q), r) - group_mul(p, group_mul(q, r))).max())
    out.check("associativity", assoc, "<= 1e-12", assoc <= 1e-12)
    inv = float(np.abs(group_mul(p, inverse(p))).max())
    out.check("inverse_law", inv, "<= 1e-15", inv <= 1e-15)
    g = _random_points(rng, n, -2.0, 2.0)
    left = float(np.abs(dist(group_mul(g, p), group_mul(g, q)) - dist(p, q)).max())
    out.check("left_invariance", left, "<= 1e-12", left <= 1e-12)
    rho = rng.uniform(0.1, 10.0, n)
    homog = _rel(dist(dilate(rho, p), dilate(rho, q)), rho * dist(p, q))
    out.check("homogeneity", homog, "<= 1e-12 relative", homog <= 1e-12)
    gauge = _rel(koranyi_norm(dilate(rho, p)), rho * koranyi_norm(p))
    out.check("gauge_homogeneity", gauge, "<= 1e-12 relative", gauge <= 1e-12)
    theta = rng.uniform(0.0, 2.0 * math.pi, n)
    iso = _rel(koranyi_norm(rotate(theta, p)), koranyi_norm(p))
    out.check("rotation_isometry", iso, "<= 1e-12 relative", iso <= 1e-12)

    examples = {
        "product": (group_mul(point(1, 0, 0), point(0, 1, 0)), [1.0, 1.0, -2.0]),
        "identity_product": (group_mul(point(0, 0, 0), point(0.3, -0.7, 1.1)), [0.3, -0.7, 1.1]),
        "norm_vertical": (koranyi_norm(point(0, 0, 1)), 1.0),
        "norm_diagonal": (koranyi_norm(point(1, 1, 0)), math.sqrt(2.0)),
        "dilate": (dilate(2.0, point(1, 0, 1)), [2.0, 0.0, 4.0]),
        "rotate": (rotate(HALF_PI, point(1, 0, 0)), [0.0, 1.0, 0.0]),
        "abelian_line": (dist(point(0.3, 0, 0), point(1, 0, 0)), 0.7),
    }
    worst = max(float(np.max(np.abs(np.asarray(v) - np.asarray(e)))) for v, e in examples.values())
    out.check("worked_examples", worst, "<= 1e-15", worst <= 1e-15)
    X, Y = horizontal_frame(point(1, 2, 0))
    frame_err = float(np.max(np.abs(np.concatenate([X.cartesian(), Y.cartesian()]) - [1, 0, 4, 0, 1, -2])))
    out.check("frame_example", frame_err, "== 0", frame_err == 0.0)
    Xr, Yr = horizontal_frame(p)
    fn = float(max(np.abs(Xr.norm - 1).max(), np.abs(Yr.norm - 1).max()))
    out.check("frame_unit_norm", fn, "<= 1e-15", fn <= 1e-15)

    qs = qm.random_ball_points(500, ctx.quad.seed, 0.9)
    qs = qs[koranyi_norm(qs) > 0.05]
    gradient = grad_koranyi_norm(qs)
    exact = np.hypot(qs[:, 0], qs[:, 1]) / koranyi_norm(qs)
    gerr = float(np.abs(gradient.norm - exact).max())
    out.check("gauge_gradient", gerr, "<= 1e-8", gerr <= 1e-8)

    table = out.scan(ScanReport("model-derivatives", params={"h": 1e-5, "points": int(len(qs))}))
    for name in CONTACT_MODELS + ("dilation_stretch",):
        f = qm.model_map(name)
        dh = horiz_derivative(f, qs)
        ratio = dh.operator_norm ** 4 / dh.jacobian
        res_h = float(horiz_derivative(f, qs, 1e-3, richardson=False).contact_residual.max())
        res_h2 = float(horiz_derivative(f, qs, 5e-4, richardson=False).contact_residual.max())
        analytic = (float(np.abs(dh.matrix - f.analytic_dh(qs)).max()) if f.analytic_dh is not None else float("nan"))
        table.add(map=name, distortion_max=float(ratio.max()), distortion_min=float(ratio.min()),
                  residual_default=float(dh.contact_residual.max()), residual_h=res_h, residual_half=res_h2,
                  analytic_error=analytic)
        if name in CONFORMAL_MODELS:
            dev = float(np.abs(ratio - 1.0).max())
            out.check(f"conformal_{name}", dev, "|D_H f|^4/J - 1 <= 1e-3", dev <= 1e-3)
        if f.analytic_dh is not None:
            out.check(f"analytic_dh_{name}", analytic, "<= 1e-6", analytic <= 1e-6)
        if name in CONTACT_MODELS:
            quadratic = res_h < 1e-10 or res_h2 / res_h <= 0.3
            out.check(f"contact_{name}", {"h": res_h, "half": res_h2, "default": float(dh.contact_residual.max())},
                      "O(h^2) under halving, default step <= 1e-9",
                      quadratic and dh.contact_residual.max() <= 1e-9)
        else:
            out.check(f"non_contact_{name}", res_h2, "flagged: residual stays O(1)", res_h2 > 1e-2)
    return out


# ---------------------------------------------------------------------------
# verify-polar


def polar_suite() -> dict:
    return {
        "exp_gauge4": lambda q: np.exp(-koranyi_norm(q) ** 4),
        "gauge2": lambda q: koranyi_norm(q) ** 2,
        "horizontal2": lambda q: q[..., 0] ** 2 + q[..., 1] ** 2,
        "vertical2": lambda q: q[..., 2] ** 2,
        "mixed": lambda q: np.cos(q[..., 0]) * np.exp(q[..., 2]) + q[..., 1] ** 2,
    }


def verify_polar(ctx: RunContext) -> Outcome:
    out = Outcome()
    quad = ctx.quad
    samples = 50 * quad.mc_samples
    vol, se = mc_ball_volume(samples, quad.seed)
    exact = math.pi ** 2 / 2.0
    out.check("mc_volume", {"estimate": vol, "standard_error": se, "exact": exact},
              "within 3 standard errors", abs(vol - exact) <= 3.0 * se)
    polar_vol = polar_integrate(lambda q: np.ones(q.shape[:-1]), quad=quad)
    out.check("polar_volume", _rel(polar_vol, exact), "<= 1e-10 relative", _rel(polar_vol, exact) <= 1e-10)
    a, b = 0.3, 0.8
    ann = polar_integrate(lambda q: np.ones(q.shape[:-1]), (a, b), quad)
    ann_exact = 2.0 * math.pi ** 2 * (b ** 4 - a ** 4) / 4.0
    out.check("annulus_volume", _rel(ann, ann_exact), "<= 1e-10 relative", _rel(ann, ann_exact) <= 1e-10)

    table = out.scan(ScanReport("polar-vs-cartesian", params={"rel_tol": quad.rel_tol}))
    worst = 0.0
    for name, u in polar_suite().items():
        pv, cv = polar_integrate(u, quad=quad), cartesian_integrate(u)
        err = abs(pv / cv - 1.0)
        worst = max(worst, err)
        table.add(integrand=name, polar=pv, cartesian=cv, rel_error=err)
    out.check("polar_vs_cartesian", worst, f"<= {quad.rel_tol:g} relative", worst <= quad.rel_tol)

    rng = _rng(ctx, 2)
    om = _random_sphere(rng, 2000)
    s = rng.uniform(0.05, 1.0, 2000)
    norm_err = float(np.abs(koranyi_norm(radial_point(s, om)) - s).max())
    out.check("radial_norm", norm_err, "<= 1e-14", norm_err <= 1e-14)
    end_err = float(np.abs(radial_point(1.0, om) - embed(om)).max())
    out.check("radial_endpoint", end_err, "<= 1e-15", end_err <= 1e-15)
    h = 1e-6
    sub = SpherePoint(om.alpha[:200], om.phi[:200])
    ss = np.clip(s[:200], 0.1, 0.9)
    dq = group_mul(inverse(radial_point(ss, sub)), radial_point(ss + h, sub))
    dq_back = group_mul(inverse(radial_point(ss, sub)), radial_point(ss - h, sub))
    speed_fd = np.hypot(dq[:, 0] - dq_back[:, 0], dq[:, 1] - dq_back[:, 1]) / (2 * h)
    speed_err = _rel(speed_fd, radial_speed(ss, sub))
    out.check("radial_speed", speed_err, "<= 1e-6 relative", speed_err <= 1e-6)

    pts = 0.9 * qm.random_ball_points(500, quad.seed + 1)
    d, _, _ = boundary_distance(pts)
    lower_gap = float((1.0 - koranyi_norm(pts) - d).max())
    out.check("boundary_distance_lower_bound", lower_gap, "1 - |q| - d <= 1e-12", lower_gap <= 1e-12)
    edge = HALF_PI - 1e-3
    probe = embed(_random_sphere(rng, 2000))
    upper_gap = float((d - dist(pts[:, None, :], probe[None, :, :]).min(axis=1)).max())
    out.check("boundary_distance_upper_bound", upper_gap, "d <= d(q, w) + 1e-12", upper_gap <= 1e-12)
    ex = {"origin": (dist_to_boundary(point(0, 0, 0)).value, 1.0),
          "axis": (dist_to_boundary(point(0.4, 0, 0)).value, 0.6)}
    ex_err = max(abs(v - e) for v, e in ex.values())
    out.check("boundary_distance_examples", ex_err, "<= 1e-12", ex_err <= 1e-12)

    hits = out.scan(ScanReport("hitting-parameters"))
    worst_eq, worst_low = 0.0, math.inf
    for a_ in np.linspace(-edge, edge, 9):
        for r_ in (0.5, 0.1, 0.01, 1e-3):
            w = SpherePoint(float(a_), 0.3)
            sh = hitting_param(w, r_)
            eq = abs(float(radial_gap(sh, w)) - r_)
            worst_eq = max(worst_eq, eq)
            worst_low = min(worst_low, sh - (1.0 - r_))
            hits.add(alpha=float(a_), rho=r_, s=sh, equation_error=eq)
    out.check("hitting_equation", worst_eq, "<= 1e-10", worst_eq <= 1e-10)
    out.check("hitting_lower_bound", worst_low, "s - (1 - rho) >= -1e-12", worst_low >= -1e-12)
    eq_hit = abs(hitting_param(SpherePoint(0.0, 0.0), 0.25) - 0.75)
    out.check("hitting_equator", eq_hit, "<= 1e-12", eq_hit <= 1e-12)
    return out


# ---------------------------------------------------------------------------
# verify-measures


def verify_measures(ctx: RunContext) -> Outcome:
    out = Outcome()
    quad = ctx.quad
    totals = {kind.value: total_measure(kind, quad) for kind in MeasureKind}
    sigma = _rel(totals["Sigma"], math.pi ** 2)
    sigma0 = _rel(totals["Sigma0"], 2 * math.pi ** 2)
    s3 = _rel(totals["S3"], S3_TOTAL)
    out.check("sigma_total", sigma, "<= 1e-8 relative to pi^2", sigma <= 1e-8)
    out.check("sigma0_total", sigma0, "<= 1e-10 relative to 2 pi^2", sigma0 <= 1e-10)
    out.check("s3_total", s3, "<= 1e-8 relative to reference", s3 <= 1e-8)
    table = out.scan(ScanReport("measure-totals"))
    for kind, value in totals.items():
        table.add(kind=kind, total=value)

    grid = SphereGrid.from_quad(quad)
    cells = {kind: grid.weights(kind) for kind in MeasureKind}
    order = bool(np.all(cells[MeasureKind.Sigma] <= cells[MeasureKind.S3])
                 and np.all(cells[MeasureKind.S3] <= cells[MeasureKind.Sigma0]))
    out.check("measure_ordering", order, "sigma <= S3 <= sigma0 on every cell", order)

    rng = _rng(ctx, 3)
    om = _random_sphere(rng, 10_000, edge=1e-6)
    area = float(np.abs(area_form_product(om.alpha, om.phi) - density(MeasureKind.S3, om.alpha)).max())
    out.check("s3_area_form", area, "<= 1e-12", area <= 1e-12)
    back = project(embed(om))
    trip = float(max(np.abs(back.alpha - om.alpha).max(),
                     np.abs(np.angle(np.exp(1j * (back.phi - om.phi)))).max()))
    out.check("embed_project_round_trip", trip, "<= 1e-9", trip <= 1e-9)
    on_sphere = float(np.abs(koranyi_norm(embed(om)) - 1.0).max())
    out.check("embed_on_sphere", on_sphere, "<= 1e-14", on_sphere <= 1e-14)
    ex = np.abs(embed(SpherePoint(math.pi / 3, 0.0)) - [math.sqrt(0.5), 0.0, math.sqrt(3) / 2]).max()
    out.check("embed_example", float(ex), "<= 1e-15", ex <= 1e-15)
    return out


# ---------------------------------------------------------------------------
# verify-mobius


def _random_mobius(rng) -> MobiusParams:
    while True:
        x = rng.uniform(-1.5, 1.5, 3)
        a = rng.uniform(-1.5, 1.5, 3)
        if float(dist(x, a)) > 0.3:
            return MobiusParams(x, a, float(rng.uniform(0.5, 2.0)))


def verify_mobius(ctx: RunContext) -> Outcome:
    out = Outcome()
    rng = _rng(ctx, 4)
    n = 10_000
    y, y2 = _random_points(rng, n, -2, 2), _random_points(rng, n, -2, 2)
    inv_err = _rel(dist(inversion(y), inversion(y2)) * koranyi_norm(y) * koranyi_norm(y2), dist(y, y2))
    out.check("inversion_formula", inv_err, "<= 1e-10 relative", inv_err <= 1e-10)
    norm_err = _rel(koranyi_norm(inversion(y)) * koranyi_norm(y), np.ones(n))
    out.check("inversion_norm", norm_err, "<= 1e-12", norm_err <= 1e-12)
    ex = float(np.abs(np.concatenate([inversion(point(0, 0, 1)) - [0, 0, -1], inversion(point(1, 0, 0)) - [-1, 0, 0]])).max())
    out.check("inversion_examples", ex, "== 0", ex == 0.0)

    origin_err, factor_err, norm_err, roundtrip, pole = 0.0, 0.0, 0.0, 0.0, 0.0
    for _ in range(50):
        prm = _random_mobius(rng)
        T = mobius(prm)
        ys, ys2 = _random_points(rng, 200, -2, 2), _random_points(rng, 200, -2, 2)
        keep = (dist(ys, prm.a) > 0.1) & (dist(ys2, prm.a) > 0.1)
        ys, ys2 = ys[keep], ys2[keep]
        origin_err = max(origin_err, float(np.abs(T(prm.x)).max()))
        d_img = dist(T(ys), T(ys2))
        factor_err = max(factor_err, _rel(d_img * dist(prm.a, ys) * dist(prm.a, ys2), prm.rho * dist(ys, ys2)))
        norm_err = max(norm_err, _rel(koranyi_norm(T(ys)), prm.rho * dist(prm.x, ys) / (dist(prm.a, ys) * dist(prm.a, prm.x))))
        roundtrip = max(roundtrip, float(np.abs(T.inverse(T(ys)) - ys).max()))
        far = group_mul(prm.a, dilate(1e7, embed(SpherePoint(0.3, 1.0))))
        pole = max(pole, float(dist(T(far), pole_image(prm))))
    out.check("centre_to_origin", origin_err, "|T(x)| <= 1e-12", origin_err <= 1e-12)
    out.check("distance_factor", factor_err, "<= 1e-10 relative", factor_err <= 1e-10)
    out.check("norm_factor", norm_err, "<= 1e-10 relative", norm_err <= 1e-10)
    out.check("inverse_round_trip", roundtrip, "<= 1e-11", roundtrip <= 1e-11)
    out.check("pole_image", pole, "T(far point) -> T(infinity), <= 1e-6", pole <= 1e-6)

    jac = out.scan(ScanReport("jacobian-fd"))
    worst_jac = 0.0
    for k in range(5):
        prm = _random_mobius(rng)
        ys = _random_points(rng, 100, -1, 1)
        ys = ys[dist(ys, prm.a) > 0.4]
        fd = horiz_derivative(mobius(prm), ys).jacobian
        err = _rel(fd, mobius_jacobian(prm, ys))
        worst_jac = max(worst_jac, err)
        jac.add(trial=k, points=int(len(ys)), rel_error=err)
    out.check("jacobian_formula", worst_jac, "<= 1e-4 relative", worst_jac <= 1e-4)
    ys = _random_points(rng, 200, -1.5, 1.5)
    ys = ys[koranyi_norm(ys) > 0.4]
    jI = _rel(horiz_derivative(inversion, ys).jacobian, koranyi_norm(ys) ** -8)
    out.check("inversion_jacobian", jI, "<= 1e-4 relative", jI <= 1e-4)

    worst_img = 0.0
    for k in range(3):
        prm = _random_mobius(rng)
        for r in (0.1, 0.5, 2.0):
            rep = sphere_image_check(prm, r, ctx.quad)
            worst_img = max(worst_img, rep.summary["max_deviation"])
            if k == 0:
                out.scan(rep)
    out.check("sphere_image", worst_img, "< 1e-10", worst_img < 1e-10)

    omega0 = SpherePoint(0.0, 0.0)
    r = 0.1
    ck = corkscrew_interior(omega0, r, 2.0)
    s_half = radial_point(1.0 - r / 2, omega0)
    d_half, _, _ = boundary_distance(s_half)
    ok = r / 2 <= d_half + 1e-12 and float(dist(s_half, embed(omega0))) <= r + 1e-12
    out.check("corkscrew_equator", {"radial_candidate": bool(ok), "search_depth": ck.to_boundary / r},
              "gamma(1 - r/2) qualifies with M0 = 2", ok and ck.satisfies(2.0))

    calib = ctx.calib
    props = out.scan(ScanReport("canonical-maps"))
    all_ok = True
    for lat in np.linspace(-HALF_PI + 0.05, HALF_PI - 0.05, 5):
        for depth in (0.3, 0.7):
            x = radial_point(1.0 - (1.0 - calib.R_star) * depth, SpherePoint(float(lat), 0.4))
            data = canonical_T(x, calib)
            flags = remark_properties(data, calib)
            all_ok &= all(flags.values())
            props.add(alpha=float(lat), depth=depth, rho=data.rho, **flags)
    out.check("canonical_properties", bool(all_ok), "all four distance relations hold", all_ok)
    incl = out.scan(ball_inclusion_scan(calib))
    m, M = incl.summary["m"], incl.summary["M"]
    out.check("ball_inclusion", {"m": m, "M": M}, "0 < m <= M < inf", 0 < m <= M < math.inf)
    norm = out.scan(normalization_scan(calib))
    out.check("normalization", norm.summary["c_hat"], "c_hat > 0", norm.summary["c_hat"] > 0)

    region = (SpherePoint(0.5, 0.2), 0.05)
    prm = MobiusParams(point(0.0, 0.0, 0.0), point(3.0, 0.0, 0.5), 1.0)
    conf = out.scan(conjugation_transfer_check(qm.inversion_composite(), prm, region, ctx.quad))
    dev = max(abs(conf.summary["ratio_min"] - 1), abs(conf.summary["ratio_max"] - 1))
    out.check("conjugation_conformal", dev, "ratio within 1e-3 of 1", dev <= 1e-3)
    st = out.scan(conjugation_transfer_check(qm.stretch(2.0), prm, region, ctx.quad))
    bracket = [st.summary["ratio_min"], st.summary["ratio_max"]]
    out.check("conjugation_stretch", bracket, "finite positive bracket",
              0 < bracket[0] <= bracket[1] < math.inf)
    comp = [st.summary["comparability_min"], st.summary["comparability_max"]]
    out.check("shadow_comparability", comp, "finite positive bracket", 0 < comp[0] <= comp[1] < math.inf)
    jt = [st.summary["jac_scaled_min"], st.summary["jac_scaled_max"],
          st.summary["dist_scaled_min"], st.summary["dist_scaled_max"]]
    out.check("jacobian_comparability", jt, "r J^{1/4} and r d'/d finite positive", min(jt) > 0 and max(jt) < math.inf)
    return out


# ---------------------------------------------------------------------------
# modulus


def modulus_experiment(ctx: RunContext) -> Outcome:
    out = Outcome()
    quad = ctx.quad
    rings = [(0.5, 1.0), (1.0 / math.e, 1.0), (0.25, 0.5)]
    if "a" in ctx.params or "b" in ctx.params:
        rings = [(ctx.param("a", 0.5), ctx.param("b", 1.0))]
    table = out.scan(ScanReport("ring-modulus"))
    omegas = [SpherePoint(a_, p_) for a_ in (-1.5, -0.7, 0.0, 0.4, 1.2, 1.56) for p_ in (0.0, 2.0)]
    for a, b in rings:
        rho = md.ring_extremal_density(a, b)
        value = md.energy(rho, quad)
        formula = md.ring_modulus_formula(a, b)
        err = abs(value / formula - 1.0)
        table.add(a=a, b=b, energy=value, formula=formula, rel_error=err)
        out.check(f"ring_{a:.6g}_{b:.6g}", {"energy": value, "formula": formula, "rel_error": err},
                  "<= 1e-6 relative", err <= 1e-6)
        adm = md.admissibility_check(rho, [md.radial_curve(w, a, b) for w in omegas])
        dev = max(abs(adm.summary["min_integral"] - 1), abs(adm.summary["max_integral"] - 1))
        out.check(f"admissibility_{a:.6g}_{b:.6g}", dev, "radial integrals within 1e-8 of 1", dev <= 1e-8)
        doubled = md.admissibility_check(rho.scaled(2.0), [md.radial_curve(omegas[0], a, b)])
        out.check(f"doubled_density_{a:.6g}_{b:.6g}", doubled.summary["min_integral"], "== 2 within 1e-8",
                  abs(doubled.summary["min_integral"] - 2.0) <= 1e-8)
        scale = md.energy(rho.scaled(1.5), quad) / value
        out.check(f"energy_scaling_{a:.6g}_{b:.6g}", scale, "== 1.5^4 within 1e-12",
                  abs(scale / 1.5 ** 4 - 1) <= 1e-12)
        base = point(0.1 * a, 0.05 * a, 0.02 * a * a)
        chords = [md.horizontal_chord(base, th, a, b) for th in np.linspace(0.0, 2.0 * math.pi, 7)[:-1]]
        ch = out.scan(md.admissibility_check(rho, chords))
        out.check(f"chords_{a:.6g}_{b:.6g}", ch.summary["min_integral"], ">= 1 - 1e-6", bool(ch.passed))
    out.check("zero_density", md.energy(md.zero_density(), quad), "== 0", md.energy(md.zero_density(), quad) == 0.0)

    sets = {"sphere": md.whole_sphere(), "phi_band": md.phi_band(), "north_cap": md.polar_cap(0.6),
            "south_cap": md.polar_cap(-0.3, north=False)}
    fam = out.scan(ScanReport("radial-family-modulus"))
    for name, E in sets.items():
        for r in (0.5, 0.25):
            value = md.radial_family_modulus(E, r, quad)
            formula = md.radial_family_formula(E, r, quad)
            err = abs(value / formula - 1.0)
            fam.add(set=name, r=r, modulus=value, formula=formula, rel_error=err)
            out.check(f"family_{name}_{r:g}", err, "<= 1e-6 relative", err <= 1e-6)
    exact_sets = {"sphere": math.pi ** 2, "phi_band": math.pi ** 2 / 2,
                  "north_cap": md.cap_measure(0.6), "south_cap": md.cap_measure(-0.3, north=False)}
    for name, E in sets.items():
        err = abs(md.set_measure(E, quad) / exact_sets[name] - 1.0)
        out.check(f"set_measure_{name}", err, "<= 1e-6 relative", err <= 1e-6)
    scaling = out.scan(md.r_scaling(md.whole_sphere(), quad=quad))
    expo = scaling.summary["exponent"]
    out.check("r_scaling_exponent", expo, "-3 +- 0.02", abs(expo + 3.0) <= 0.02)
    mono = [md.radial_family_modulus(E, 0.5, quad) for E in (md.polar_cap(1.0), md.polar_cap(0.6), md.whole_sphere())]
    out.check("monotonicity", mono, "nested sets give nondecreasing moduli", mono[0] <= mono[1] <= mono[2])
    return out


# ---------------------------------------------------------------------------
# kappa-scan


def kappa_experiment(ctx: RunContext) -> Outcome:
    out = Outcome()
    quad = ctx.quad
    kappa, base, fine = refined_kappa(quad)
    out.scan(base)
    out.scan(fine)
    k0, k1 = base.summary["kappa_hat"], fine.summary["kappa_hat"]
    out.info["kappa_hat"] = kappa
    out.info["argmax"] = {"alpha": fine.summary["argmax_alpha"], "s": fine.summary["argmax_s"]}
    out.check("kappa_finite", kappa, "finite and >= 0", 0.0 <= kappa < math.inf)
    change = abs(k1 / k0 - 1.0)
    out.check("kappa_stability", {"default": k0, "doubled": k1, "relative_change": change},
              "<= 0.15 under grid doubling", change <= 0.15)
    low = min(base.summary["min_ratio"], fine.summary["min_ratio"])
    out.check("ratio_at_least_one", low, ">= 1 - 1e-9", low >= 1.0 - 1e-9)
    _, svals = kappa_grid(quad)
    eq = float(np.abs(nt_ratio(svals, SpherePoint(np.zeros_like(svals), np.zeros_like(svals))) - 1.0).max())
    out.check("equatorial_ratio", eq, "== 1 within 1e-10", eq <= 1e-10)
    calib_gap = abs(kappa - ctx.calib.kappa_hat)
    out.check("calibration_match", {"scan": kappa, "calibration": ctx.calib.kappa_hat},
              "informational unless the quadrature is the calibration default", calib_gap <= 1e-9 or (quad.n_alpha, quad.n_s) != (QuadSpec().n_alpha, QuadSpec().n_s))

    rng = _rng(ctx, 6)
    n = 10_000
    s = rng.uniform(0.05, 1.0, n)
    a = rng.uniform(-HALF_PI + 1e-3, HALF_PI - 1e-3, n)
    at = rng.uniform(-HALF_PI + 1e-3, HALF_PI - 1e-3, n)
    ph = rng.uniform(-math.pi, math.pi, n)
    phi0 = rng.uniform(0.0, 2.0 * math.pi, n)
    q = point(s * np.sqrt(np.cos(a)) * np.cos(phi0), s * np.sqrt(np.cos(a)) * np.sin(phi0), s * s * np.sin(a))
    direct = dist(q, embed(SpherePoint(at, phi0 + ph)))
    closed = closed_form_dist(s, a, at, ph)
    keep = direct > 1e-2
    err = float(np.abs(closed - direct)[keep].max())
    out.check("closed_form_distance", err, "< 1e-12 on tuples with distance > 1e-2", err < 1e-12)
    same = float(closed_form_dist(1.0, 0.7, 0.7, 0.0))
    out.check("closed_form_same_point", same, "<= 1e-7 (fourth root of rounding)", same <= 1e-7)
    sv, av = rng.uniform(0.05, 0.9, 100), rng.uniform(-1.5, 1.5, 100)
    # the radial curve's phase lags its endpoint by tan(a) log(s)
    along = _rel(closed_form_dist(sv, av, av, np.tan(av) * np.log(sv)), radial_gap(sv, SpherePoint(av, np.zeros_like(av))))
    out.check("curve_to_endpoint_formula", along, "<= 1e-10 relative", along <= 1e-10)

    app = out.scan(appendix_bounds_scan(quad))
    out.check("appendix_bounds", app.summary, "C_hat finite, c_hat > 0",
              app.summary["C_hat"] < math.inf and app.summary["c_hat"] > 0)
    return out


# ---------------------------------------------------------------------------
# regularity


def regularity_experiment(ctx: RunContext) -> Outcome:
    out = Outcome()
    base = out.scan(regularity_scan(ctx.quad))
    fine = regularity_scan(ctx.quad.doubled())
    fine.name = "regularity-doubled"
    out.scan(fine)
    C0, C1 = base.summary["C"], fine.summary["C"]
    change = abs(C1 / C0 - 1.0)
    out.info["C"] = C0
    out.check("regularity_bracket", {"C": C0, "ratio_min": base.summary["ratio_min"],
                                     "ratio_max": base.summary["ratio_max"]},
              "ratios in [1/C, C] with C finite", C0 < math.inf)
    out.check("regularity_stability", {"default": C0, "doubled": C1, "relative_change": change},
              "<= 0.10 under grid doubling", change <= 0.10)

    from .sphere_measures import sphere_ball_measure
    w0 = SpherePoint(0.4, 1.0)
    full = sphere_ball_measure(w0, 2.5, MeasureKind.S3, ctx.quad)
    tot = total_measure(MeasureKind.S3, ctx.quad)
    out.check("large_ball_total", abs(full / tot - 1.0), "<= 1e-6 relative", abs(full / tot - 1.0) <= 1e-6)
    seq = [sphere_ball_measure(w0, r, MeasureKind.S3, ctx.quad) for r in (1e-3, 1e-2, 0.1, 0.5, 1.0)]
    out.check("ball_monotone", seq, "nondecreasing in r", bool(np.all(np.diff(seq) >= 0)))

    hl_quad = QuadSpec(n_alpha=16, n_phi=16)
    w = SpherePoint(0.2, 0.5)
    const = hl_maximal(lambda v: np.full(np.shape(v.alpha), 3.0), w, hl_quad)
    out.check("maximal_constant", const, "== 3 within 1e-12", abs(const - 3.0) <= 1e-12)
    small = lambda v: 0.5 + 0.25 * np.cos(v.phi)
    big = lambda v: 1.0 + 0.25 * np.cos(v.phi) + 0.5 * np.sin(v.alpha) ** 2
    m_small, m_big = hl_maximal(small, w, hl_quad), hl_maximal(big, w, hl_quad)
    out.check("maximal_monotone", [m_small, m_big], "g <= g' gives M g <= M g'", m_small <= m_big)
    cap = lambda v: (np.asarray(v.alpha) > 0.8).astype(float)
    inside = SpherePoint(1.0, 0.3)
    m_cap = hl_maximal(cap, inside, hl_quad)
    from .sphere_measures import integrate_ball
    num, mass = integrate_ball(cap, inside, 0.25, MeasureKind.S3, 16, 16)
    direct = float(num / mass)
    out.check("maximal_cap", {"maximal": m_cap, "direct_average": direct}, "maximal >= direct average",
              m_cap >= direct - 1e-12)
    return out


# ---------------------------------------------------------------------------
# distortion


def distortion_experiment(ctx: RunContext) -> Outcome:
    out = Outcome()
    quad = ctx.quad
    qs = qm.random_ball_points(24, quad.seed, 0.9)
    for name in ("identity", "dilation", "rotation", "translation"):
        h = qm.distortion_estimate(qm.model_map(name), qs)
        dev = float(np.abs(h - 1.0).max())
        out.check(f"distortion_{name}", dev, "<= 1e-3 from 1", dev <= 1e-3)
    rng = _rng(ctx, 8)
    dirs = rng.normal(size=(24, 3))
    radii = rng.uniform(0.5, 2.0, 24)
    pts = dilate(radii, dirs / koranyi_norm(dirs)[:, None])
    inv = MapHandle("inversion", inversion, claimed_conformal=True)
    h_inv = qm.distortion_estimate(inv, pts)
    dev = float(np.abs(h_inv - 1.0).max())
    out.check("distortion_inversion", dev, "<= 2e-2 from 1 at r = 1e-3", dev <= 2e-2)

    table = out.scan(ScanReport("stretch-distortion"))
    betas = (1.0, 1.5, 2.0, 3.0)
    means = []
    for beta in betas:
        h = qm.distortion_estimate(qm.stretch(beta), qs)
        means.append(float(np.mean(h)))
        table.add(beta=beta, mean=means[-1], max=float(np.max(h)))
    out.check("stretch_distortion_increasing", means, "finite and increasing in beta",
              bool(np.all(np.isfinite(means)) and np.all(np.diff(means) > 0)))
    sample = qm.random_ball_points(1000, quad.seed + 2, 1.0)
    exact = max(float(np.abs(koranyi_norm(qm.stretch(b)(sample)) - koranyi_norm(sample) ** b).max()) for b in betas)
    out.check("stretch_sphere_mapping", exact, "< 1e-12", exact < 1e-12)
    one = float(np.abs(qm.stretch(1.0)(sample) - sample).max())
    out.check("stretch_beta_one", one, "identity within 1e-14", one <= 1e-14)

    maps = _suite(ctx, {"identity": qm.identity, "dilation": qm.dilation, "rotation": qm.rotation,
                        "translation": qm.translation, "inversion": qm.inversion_composite,
                        "stretch": qm.stretch, "shifted_stretch": qm.shifted_stretch,
                        "singular": lambda: _singular(2.0, 0.1)})
    kt = out.scan(ScanReport("distortion-inequality"))
    for name, f in maps.items():
        rep = qm.distortion_inequality_scan(f, samples=200, seed=quad.seed)
        s = rep.summary
        kt.add(map=name, K_hat=s["K_hat"], K_hat_half_step=s["K_hat_half_step"], relative_change=s["relative_change"])
        out.check(f"K_hat_{name}", s, "finite and stable under h-halving within 1e-3",
                  math.isfinite(s["K_hat"]) and s["relative_change"] <= 1e-3)

    T = qm.inversion_composite()
    for name, f in (("stretch", qm.stretch(2.0)), ("stretch3", qm.stretch(3.0))):
        rep = out.scan(qm.composition_closure_check(f, T, qm.random_ball_points(12, quad.seed + 3, 0.5)))
        out.check(f"composition_{name}", rep.summary["ratio_max"], "<= 1 + 2e-2", bool(rep.passed))

    s_grid = np.array([0.2, 0.5, 0.8, 0.95, 0.99])
    lat = np.array([-1.4, -0.6, 0.0, 0.7, 1.3])
    om = SpherePoint(lat[:, None], np.full((5, 1), 0.4))
    for name, f in (("identity", qm.identity()), ("stretch", qm.stretch(2.0)),
                    ("singular", _singular(2.0, 0.05))):
        rep = out.scan(qm.radial_derivative_bound_check(f, om, s_grid[None, :]))
        out.check(f"radial_derivative_{name}", rep.summary["min_slack"], ">= -1e-6", rep.summary["min_slack"] >= -1e-6)

    growth = out.scan(qm.growth_estimate_check(_singular(2.0), quad))
    g = growth.summary
    out.check("growth_singular", g, "slope -2 +- 0.15 and the C1 + C2 d^-alpha bound",
              abs(g["slope"] + 2.0) < 0.15 and bool(growth.passed))
    bounded = out.scan(qm.growth_estimate_check(qm.shifted_stretch(2.0), quad))
    b = bounded.summary
    out.check("growth_bounded", b, "slope 0 +- 0.15 and the bound", abs(b["slope"]) < 0.15 and bool(bounded.passed))
    return out


# ---------------------------------------------------------------------------
# hardy


def hardy_experiment(ctx: RunContext) -> Outcome:
    out = Outcome()
    quad = ctx.quad
    kappa = ctx.calib.kappa_hat
    ps = (ctx.param("p", 1.0),) if "p" in ctx.params else (1.0, 2.0)
    maps = _suite(ctx, {"identity": qm.identity, "stretch": qm.stretch,
                        "singular": lambda: _singular(1.0),
                        "singular_off": lambda: _singular(2.0, 0.1, 0.4, 1.0)})

    prof = hc.hardy_norm(qm.identity(), 2.0, quad=quad)
    ident = _rel(prof.values, prof.s_grid ** 2 * S3_TOTAL)
    out.check("identity_profile", ident, "I_s = s^p S3(sphere) within 1e-8", ident <= 1e-8)

    fatou = out.scan(ScanReport("fatou"))
    for name, f in maps.items():
        for p in ps:
            rep = hc.fatou_check(f, p, quad)
            s = rep.summary
            fatou.add(map=name, p=p, sup=s["sup"], boundary=s["boundary"], slack=s["slack"])
            out.check(f"fatou_{name}_p{p:g}", s["slack"], ">= -1e-6", s["slack"] >= -1e-6)

    for name, f in maps.items():
        grid_M = hc.maximal_on_grid(f, kappa, quad)
        grid_HL = hc.hl_on_grid(f, ps)
        pw = out.scan(hc.pointwise_maximal_check(f, kappa, quad, maximal=grid_M))
        out.check(f"pointwise_{name}", pw.summary, "M(f) >= |f*| - 1e-6 where the limit converges", bool(pw.passed))
        for p in ps:
            ch = out.scan(hc.chain_check(f, p, kappa, quad, maximal=grid_M, hl=grid_HL[p]))
            c = ch.summary["C_hat"]
            out.check(f"chain_{name}_p{p:g}", c, "single finite C_hat >= 1 - 1e-6", math.isfinite(c) and c >= 1 - 1e-6)

    div = out.scan(ScanReport("hardy-divergence"))
    for beta, p in ((2.0, 2.0), (2.0, 3.0)):
        pr = hc.hardy_norm(_singular(beta), p, quad=quad)
        expected = 3.0 - beta * p
        div.add(beta=beta, p=p, slope=pr.divergence_slope, expected=expected)
        ok = pr.divergence_slope is not None and abs(pr.divergence_slope - expected) <= 0.2
        out.check(f"divergence_beta{beta:g}_p{p:g}", pr.divergence_slope, f"{expected:g} +- 0.2", ok)
    conv = hc.hardy_norm(_singular(1.0), 2.0, quad=quad)
    out.check("convergent_profile", conv.divergence_slope, "no growth for beta p < 3", conv.divergence_slope is None)

    lim = out.scan(ScanReport("radial-limits"))
    sing = _singular(2.0)
    pole = sing.meta["pole"]
    worst_id, worst_sing = 0.0, 0.0
    for a_ in (-1.3, -0.5, 0.0, 0.6, 1.4):
        w = SpherePoint(a_, 2.0)
        li = hc.radial_limit(qm.identity(), w)
        worst_id = max(worst_id, float(np.abs(li.value - embed(w)).max()))
        ls = hc.radial_limit(sing, w)
        target = float(dist(embed(w), pole)) ** -2.0
        err = abs(float(koranyi_norm(ls.value)) / target - 1.0)
        worst_sing = max(worst_sing, err if ls.converged else math.inf)
        lim.add(alpha=a_, identity_error=float(np.abs(li.value - embed(w)).max()), singular_rel_error=err,
                converged=ls.converged)
    out.check("radial_limit_identity", worst_id, "<= 1e-8", worst_id <= 1e-8)
    out.check("radial_limit_singular", worst_sing, "converged, norm matches d(w, a)^-beta within 1e-6",
              worst_sing <= 1e-6)

    alphas, svals = kappa_grid(quad)
    A, S = np.meshgrid(alphas, svals, indexing="ij")
    inside = hc.in_nt_region(radial_point(S, SpherePoint(A, np.zeros_like(A))), SpherePoint(A, np.zeros_like(A)), kappa)
    out.check("curves_in_region", int(np.count_nonzero(~inside)), "every kappa-grid node inside", bool(inside.all()))
    rng = _rng(ctx, 9)
    w_rand = _random_sphere(rng, 500)
    zero_shadow = hc.shadow_contains(np.zeros((500, 3)), w_rand, kappa)
    out.check("origin_shadow", int(np.count_nonzero(~zero_shadow)), "shadow of 0 is the whole sphere",
              bool(zero_shadow.all()))
    qr = 0.95 * qm.random_ball_points(500, quad.seed + 4)
    dual = bool(np.array_equal(hc.in_nt_region(qr, w_rand, kappa), hc.shadow_contains(qr, w_rand, kappa)))
    out.check("region_shadow_duality", dual, "identical predicates", dual)

    pts = radial_point(np.array([0.5, 0.9, 0.99, 0.999, 0.9999]),
                       SpherePoint(np.array([0.0, 0.5, 1.0, 1.4, -0.8]), np.array([0.0, 1.0, 2.0, 3.0, 4.0])))
    for name, f in (("identity", qm.identity()), ("singular", _singular(1.0))):
        mv = out.scan(hc.mean_value_check(f, 1.0, kappa, pts))
        c = mv.summary["C_hat"]
        out.check(f"mean_value_{name}", c, "finite C_hat", math.isfinite(c))

    for name, f in (("identity", qm.identity()), ("singular", _singular(1.0))):
        # |f*| >= |f(0)| / 2 for the raw maps, so the sets are empty; move a boundary value to 0
        recentred = qm.compose(qm.translation(inverse(f(embed(SpherePoint(0.3, 0.0))))), f, name + "-recentred")
        cs = out.scan(hc.central_smallness(recentred, quad=quad))
        out.check(f"central_smallness_{name}", cs.summary["measures"], "nonincreasing in N", bool(cs.passed))
    for name, f in (("identity", qm.identity()), ("singular_off", _singular(2.0, 0.1, 0.4, 1.0))):
        mc = out.scan(hc.max_criterion_check(f, 1.0, quad))
        out.check(f"max_criterion_{name}", mc.summary, "both sides finite", bool(mc.passed))
    return out


# ---------------------------------------------------------------------------
# carleson


def carleson_experiment(ctx: RunContext) -> Outcome:
    out = Outcome()
    quad = ctx.quad
    scales = [2.0 ** -k for k in range(1, 9)]
    lat = np.array([-HALF_PI + 0.01, -1.0, 0.0, 0.7, HALF_PI - 0.01])
    centers = SpherePoint(np.repeat(lat, 2), np.tile([0.3, 3.5], len(lat)))
    samples = max(512, quad.mc_samples // 25)

    def record(label, est):
        coarse, stable = hc.carleson_stability(est)
        rep = ScanReport(f"carleson-{label}", params={"alpha": est.alpha, "samples": samples}, cells=est.cells)
        rep.summary = {"gamma_hat": est.gamma_hat, "coarse_gamma": coarse, "stable": stable}
        out.scan(rep)
        out.check(f"carleson_{label}", rep.summary, "finite gamma_hat within factor 2 of the coarse-scale value",
                  math.isfinite(est.gamma_hat) and stable)

    record("lebesgue", hc.carleson_constant(hc.lebesgue_density, 4.0 / 3.0, scales, centers, quad, samples))
    maps = _suite(ctx, {"singular": lambda: _singular(1.0), "shifted_stretch": qm.shifted_stretch})
    for name, f in maps.items():
        for p in (1.0, 2.0):
            est = hc.carleson_constant(hc.qc_carleson_density(f, p), 1.0, scales, centers, quad, samples)
            record(f"{name}_p{p:g}", est)
        est = hc.carleson_constant(hc.grad_log_norm_density(f), 1.0, scales, centers, quad, samples)
        record(f"{name}_grad_log", est)
    ident = hc.grad_log_norm_density(qm.identity())
    qs = qm.random_ball_points(200, quad.seed, 0.95)
    qs = qs[koranyi_norm(qs) > 0.05]
    err = _rel(ident(qs), np.hypot(qs[:, 0], qs[:, 1]) / koranyi_norm(qs) ** 2)
    out.check("grad_log_identity", err, "|z|/|q|^2 within 1e-6 relative", err <= 1e-6)
    const = MapHandle("constant", lambda q: np.broadcast_to(point(1.0, 0.5, 0.2), np.shape(q)).copy())
    zero = float(np.abs(hc.grad_log_norm_density(const)(qs)).max())
    out.check("grad_log_constant", zero, "== 0", zero == 0.0)
    return out


# ---------------------------------------------------------------------------
# embedding


def embedding_experiment(ctx: RunContext) -> Outcome:
    out = Outcome()
    quad = ctx.quad
    ps = (ctx.param("p", 1.0),) if "p" in ctx.params else (1.0, 2.0)
    maps = _suite(ctx, {"identity": qm.identity, "stretch": qm.stretch,
                        "singular": lambda: _singular(1.0),
                        "singular_off": lambda: _singular(2.0, 0.1, 0.4, 1.0)})
    table = out.scan(ScanReport("hardy-to-bergman"))
    for name, f in maps.items():
        for p in ps:
            prof = hc.hardy_norm(f, p, quad=quad)
            bounded = prof.divergence_slope is None
            ap = hc.ap_norm(f, 4.0 * p / 3.0, quad) if bounded else float("nan")
            table.add(map=name, p=p, hardy_sup=prof.sup, bounded=bounded, ap_norm=ap)
            if bounded:
                out.check(f"ap_{name}_p{p:g}", ap, "A^{4p/3} norm finite", math.isfinite(ap))
    div = hc.ap_norm(_singular(1.0), 4.5, quad)
    out.check("ap_divergence_flag", div, "beta p > 4 is flagged infinite", math.isinf(div))

    emb = out.scan(ScanReport("embedding"))
    lhs, rhs, ratio = hc.embedding_check(qm.identity(), hc.lebesgue_density, 1.0, 4.0 / 3.0, quad)
    emb.add(map="identity", beta=1.0, lhs=lhs, rhs=rhs, ratio=ratio)
    out.check("embedding_identity", ratio, "finite positive", 0 < ratio < math.inf)
    ratios = []
    for beta in (1.0, 1.5, 2.0, 3.0):
        lhs, rhs, ratio = hc.embedding_check(qm.shifted_stretch(beta), hc.lebesgue_density, 1.0, 4.0 / 3.0, quad)
        ratios.append(ratio)
        emb.add(map="shifted_stretch", beta=beta, lhs=lhs, rhs=rhs, ratio=ratio)
    out.check("embedding_stretch", {"min": min(ratios), "max": max(ratios)}, "finite across the beta grid",
              all(0 < r < math.inf for r in ratios))

    for exponent in (4.0, 6.0):
        rep = out.scan(hc.necessity_slope(exponent, quad=quad))
        out.check(f"necessity_slope_{exponent:g}", rep.summary, "|slope - (3 - beta p)| <= 0.15",
                  rep.summary["error"] <= 0.15)

    tests = {"gauge": lambda q: koranyi_norm(q),
             "singular": lambda q: koranyi_norm(_singular(1.0)(q)) / 4.0,
             "bump": lambda q: np.exp(-4.0 * dist(q, point(0.6, 0.0, 0.3)) ** 2)}
    mc = out.scan(hc.metric_carleson_check(tests, hc.lebesgue_density, 1.0, 4.0 / 3.0,
                                           ctx.calib.kappa_hat, quad, n_alpha=8, n_phi=6))
    out.check("metric_carleson", mc.summary["C_hat"], "single finite C_hat", math.isfinite(mc.summary["C_hat"]))
    return out


# ---------------------------------------------------------------------------
# levelsets


def levelsets_experiment(ctx: RunContext) -> Outcome:
    out = Outcome()
    table = out.scan(ScanReport("level-sets"))
    radii = np.array([0.05, 0.2, 0.5, 0.8, 0.95])
    worst_pole, worst_eq = 0.0, 0.0
    monotone = True
    for r in radii:
        slab = 1.0 - (1.0 - r) ** 2
        pole = float(np.max(np.abs(level_set_radius(r, np.array([slab, -slab])))))
        eq = abs(float(level_set_radius(r, 0.0)) - r)
        t = np.linspace(0.0, slab, 33)
        rho = level_set_radius(np.full_like(t, r), t)
        mono = bool(np.all(np.diff(rho) <= 1e-12))
        worst_pole, worst_eq = max(worst_pole, pole), max(worst_eq, eq)
        monotone &= mono
        table.add(r=float(r), slab=slab, pole_radius=pole, equator_error=eq, radius_decreasing=mono)
    out.check("level_set_poles", worst_pole, "radius 0 at t = +-(1 - (1 - r)^2)", worst_pole == 0.0)
    out.check("level_set_equator", worst_eq, "radius r at t = 0 within 1e-12", worst_eq <= 1e-12)
    out.check("level_set_graph", monotone, "radius decreasing in |t| (a sphere-like graph)", monotone)

    tau = np.linspace(-0.95, 0.95, 39)
    d, _, _ = boundary_distance(point(0.0 * tau, 0.0 * tau, tau))
    axis = float(np.abs(d - np.sqrt(1.0 - np.abs(tau))).max())
    out.check("vertical_axis_distance", axis, "d((0,0,tau), S) = sqrt(1 - |tau|) within 1e-12", axis <= 1e-12)
    rs = np.linspace(0.05, 0.95, 10)
    Mi = big_M(rs, qm.identity(), ctx.quad)
    out.check("big_M_identity", [float(Mi.min()), float(Mi.max())], "<= 1 and increasing in r",
              bool(Mi.max() <= 1.0 and np.all(np.diff(Mi) > 0)))
    Ms = big_M(rs, qm.stretch(2.0), ctx.quad)
    gap = float(np.abs(Ms - Mi ** 2).max())
    out.check("big_M_stretch", gap, "M(r, stretch_2) = M(r, id)^2 within 1e-12", gap <= 1e-12)
    return out


EXPERIMENTS: dict[str, Callable[[RunContext], Outcome]] = {
    "verify-core": verify_core,
    "verify-polar": verify_polar,
    "verify-measures": verify_measures,
    "verify-mobius": verify_mobius,
    "modulus": modulus_experiment,
    "kappa-scan": kappa_experiment,
    "regularity": regularity_experiment,
    "distortion": distortion_experiment,
    "hardy": hardy_experiment,
    "carleson": carleson_experiment,
    "embedding": embedding_experiment,
    "levelsets": levelsets_experiment,
}

# Columns of tables.csv; every row also carries the table name.
TABLE_COLUMNS = {
    "verify-core": "model-derivatives: map, distortion_max, distortion_min, residual_default, residual_h, residual_half, analytic_error",
    "verify-polar": "polar-vs-cartesian: integrand, polar, cartesian, rel_error; hitting-parameters: alpha, rho, s, equation_error",
    "verify-measures": "measure-totals: kind, total",
    "verify-mobius": "jacobian-fd, sphere-image, canonical-maps, ball-inclusion, normalization, conjugation-transfer",
    "modulus": "ring-modulus: a, b, energy, formula, rel_error; radial-family-modulus: set, r, modulus, formula, rel_error",
    "kappa-scan": "kappa-scan: alpha, s, ratio (per-latitude maxima); appendix-bounds: alpha, upper_ratio_max, lower_ratio_min",
    "regularity": "regularity: alpha, phi, r, value, ratio",
    "distortion": "stretch-distortion, distortion-inequality, composition-closure, radial-derivative-bound, growth",
    "hardy": "fatou, pointwise-maximal, chain, hardy-divergence, radial-limits, mean-value, central-smallness, max-criterion",
    "carleson": "carleson-*: alpha, phi, r, mass, ratio",
    "embedding": "hardy-to-bergman, embedding, necessity-slope, metric-carleson",
    "levelsets": "level-sets: r, slab, pole_radius, equator_error, radius_decreasing",
}


def calibrate(quad: QuadSpec, samples: int = 1000) -> tuple[Calibration, Outcome]:
    """Cone aperture plus corkscrew constants, with a post-hoc corkscrew verification."""
    out = Outcome()
    kappa, base, fine = refined_kappa(quad)
    out.scan(base)
    out.scan(fine)
    calib = calibrate_constants(quad, kappa)
    check = out.scan(verify_corkscrews(calib, samples, quad.seed))
    out.check("corkscrews", check.summary, "no search failure with the calibrated M0", bool(check.passed))
    out.check("kappa_hat", kappa, "finite", math.isfinite(kappa))
    return calib, out
