"""Korányi inversion, Möbius maps ``T_{x,a,rho}`` and corkscrew points.

``T(y) = delta_rho([I(a^{-1} x)]^{-1} * I(a^{-1} y))`` sends ``x`` to the origin
and ``a`` to infinity.  It multiplies distances by
``rho / (d(a, y) d(a, y'))`` and has Jacobian ``rho^4 / d(a, y)^8``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .handles import MapHandle
from .heis_core import (dilate, dist, group_mul, horiz_derivative, inverse, koranyi_norm, point)
from .radial_polar import boundary_distance, dist_to_boundary, hitting_param, radial_point
from .report import ScanReport
from .sphere_measures import (HALF_PI, QuadSpec, SphereGrid, SpherePoint, ball_nodes, embed)


def inversion(y) -> np.ndarray:
    """``I(y) = -(z (|z|^2 + i t), t) / |y|^4``; an involution off the origin."""
    y = np.asarray(y, dtype=float)
    x1, x2, t = y[..., 0], y[..., 1], y[..., 2]
    r2 = x1 * x1 + x2 * x2
    n4 = r2 * r2 + t * t
    if np.any(n4 == 0):
        raise ValueError("inversion is undefined at the origin")
    return point(-(x1 * r2 - x2 * t) / n4, -(x2 * r2 + x1 * t) / n4, -t / n4)


@dataclass(frozen=True)
class MobiusParams:
    x: np.ndarray
    a: np.ndarray
    rho: float

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if float(dist(self.x, self.a)) == 0.0:
            raise ValueError("x and a must differ")


def pole_image(params: MobiusParams) -> np.ndarray:
    """``T(infinity) = delta_rho([I(a^{-1} x)]^{-1})``."""
    c = inversion(group_mul(inverse(params.a), params.x))
    return dilate(params.rho, inverse(c))


def mobius(params: MobiusParams) -> MapHandle:
    a = np.asarray(params.a, dtype=float)
    rho = float(params.rho)
    c = inversion(group_mul(inverse(a), params.x))
    c_inv = inverse(c)

    def fwd(y):
        ay = group_mul(inverse(a), y)
        if np.any(koranyi_norm(ay) == 0):
            raise ValueError("Möbius map evaluated at its pole")
        return dilate(rho, group_mul(c_inv, inversion(ay)))

    def back(w):
        return group_mul(a, inversion(group_mul(c, dilate(1.0 / rho, w))))

    def jac(y):
        return mobius_jacobian(params, y)

    return MapHandle("mobius", fwd, claimed_conformal=True, inverse=back, jacobian=jac,
                     meta={"pole": a, "pole_image": dilate(rho, c_inv)})


def mobius_jacobian(params: MobiusParams, y) -> np.ndarray:
    d = dist(params.a, y)
    if np.any(d == 0):
        raise ValueError("Jacobian is undefined at the pole")
    return params.rho ** 4 / d ** 8


def sphere_image_check(params: MobiusParams, r: float, quad: QuadSpec | None = None,
                       samples: int = 1000) -> ScanReport:
    """Images of ``dB(a, r)`` lie on ``dB(T(infinity), rho/r)``; reports the largest deviation."""
    quad = quad or QuadSpec()
    rng = np.random.default_rng(quad.seed)
    edge = HALF_PI - 1e-6
    omega = SpherePoint(rng.uniform(-edge, edge, samples), rng.uniform(0.0, 2 * math.pi, samples))
    p = group_mul(params.a, dilate(r, embed(omega)))
    T = mobius(params)
    center = pole_image(params)
    dev = np.abs(dist(T(p), center) - params.rho / r)
    report = ScanReport("sphere-image", params={"r": r, "samples": samples, "rho": params.rho})
    worst = np.argsort(dev)[::-1][:10]
    for k in worst:
        report.add(alpha=float(omega.alpha[k]), phi=float(omega.phi[k]), deviation=float(dev[k]))
    report.summary = {"max_deviation": float(dev.max()), "image_radius": params.rho / r}
    return report


# ---------------------------------------------------------------------------
# Corkscrew points


@dataclass(frozen=True)
class Corkscrew:
    point: np.ndarray
    to_boundary: float
    to_omega: float
    scale: float

    def satisfies(self, M0: float, tol: float = 1e-12) -> bool:
        r = self.scale
        return (r / M0 <= self.to_boundary + tol and self.to_boundary <= self.to_omega + tol
                and self.to_omega <= r + tol)


def horizontal_normal(p) -> np.ndarray:
    """Unit outward horizontal normal (frame coefficients) of the gauge sphere through ``p``."""
    p = np.asarray(p, dtype=float)
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    r2 = x * x + y * y
    a, b = r2 * x + t * y, r2 * y - t * x
    n = np.hypot(a, b)
    safe = n > 1e-300
    return np.stack([np.where(safe, a / np.where(safe, n, 1), 1.0), np.where(safe, b / np.where(safe, n, 1), 0.0)], -1)


def _normal_family(omega: SpherePoint, r: float, n_beta: int = 41, thetas=(0.5, 0.75, 1.0)):
    """Points ``omega * delta_{theta r}(e)`` with ``e`` in the plane of the horizontal normal and T."""
    w = embed(omega)
    n = horizontal_normal(w)
    beta = np.linspace(-HALF_PI, HALF_PI, n_beta)
    th = np.asarray(thetas, dtype=float)
    B, TH = np.meshgrid(beta, th, indexing="ij")
    root = np.sqrt(np.clip(np.cos(B), 0.0, None))
    e = point(root * n[0], root * n[1], np.sin(B))
    steps = dilate(TH * r, e)
    return group_mul(w, steps).reshape(-1, 3), (TH * r).reshape(-1)


def _pick(cands, to_omega, r, inside: bool, M0: float):
    d_bdry, _, _ = boundary_distance(cands)
    norms = koranyi_norm(cands)
    side = norms < 1.0 if inside else norms > 1.0
    ok = side & (to_omega <= r * (1 + 1e-12)) & (d_bdry <= to_omega + 1e-12)
    if not np.any(ok):
        raise RuntimeError("no corkscrew candidate on the requested side")
    k = int(np.argmax(np.where(ok, d_bdry, -np.inf)))
    ck = Corkscrew(cands[k], float(d_bdry[k]), float(to_omega[k]), float(r))
    if not ck.satisfies(M0):
        raise RuntimeError(f"corkscrew search failed at scale {r:g} for M0={M0:g}")
    return ck


def corkscrew_interior(omega: SpherePoint, r: float, M0: float = 4.0) -> Corkscrew:
    """Interior point ``p`` with ``r/M0 <= d(p, dB) <= d(p, omega) <= r`` (verified)."""
    cands, to_omega = [], []
    for theta in (0.5, 0.75, 0.9):
        if theta * r < 1.0:
            s = hitting_param(omega, theta * r)
            cands.append(radial_point(s, omega))
            to_omega.append(float(dist(cands[-1], embed(omega))))
    fam, fam_d = _normal_family(omega, r)
    cands = np.concatenate([np.array(cands).reshape(-1, 3), fam])
    to_omega = np.concatenate([np.array(to_omega), fam_d])
    return _pick(cands, to_omega, r, True, M0)


def corkscrew_exterior(omega: SpherePoint, r: float, M0: float = 4.0) -> Corkscrew:
    """Exterior point ``p`` with ``r/M0 <= d(p, dB) <= d(p, omega) <= r`` (verified)."""
    cands, to_omega = _normal_family(omega, r)
    return _pick(cands, to_omega, r, False, M0)


# ---------------------------------------------------------------------------
# Calibration constants


@dataclass(frozen=True)
class Calibration:
    kappa_hat: float = 0.372
    M0: float = 4.0
    N: float = 2.0
    eta: float = 1.0
    r0: float = 0.25
    r_star: float = 0.03125
    R_star: float = 0.9995

    def to_text(self) -> str:
        return "".join(f"{f.name} = {getattr(self, f.name)!r}\n" for f in fields(self))

    @classmethod
    def from_mapping(cls, mapping: dict) -> "Calibration":
        known = {f.name for f in fields(cls)}
        values = {k: float(v) for k, v in mapping.items() if k in known}
        return cls(**values)

    def as_dict(self) -> dict:
        return asdict(self)


def parse_key_values(text: str) -> dict:
    out = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def load_calibration(path=None) -> Calibration:
    """Read a key=value calibration file; the packaged one when ``path`` is None."""
    if path is None:
        text = resources.files("heisqc").joinpath("calibration.cfg").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return Calibration.from_mapping(parse_key_values(text))


_DEFAULT_CALIBRATION: Calibration | None = None


def default_calibration() -> Calibration:
    global _DEFAULT_CALIBRATION
    if _DEFAULT_CALIBRATION is None:
        _DEFAULT_CALIBRATION = load_calibration()
    return _DEFAULT_CALIBRATION


def exclusion_factor(a, r_search: float, n_dir: int = 24, n_u: int = 96) -> float:
    """Estimate of ``inf_{q in closed ball} d(a, q) / d(a, dB)`` for an exterior point ``a``."""
    d_a, _, _ = boundary_distance(a)
    R = 3.0 * float(d_a)
    grid = SphereGrid.from_quad(QuadSpec(n_alpha=n_dir, n_phi=n_dir))
    dirs = embed(grid.mesh()).reshape(-1, 3)
    u = np.linspace(0.0, 1.0, n_u + 1)[1:]
    pts = group_mul(a, dilate(R * u[:, None], dirs[None, :, :]))
    inside = koranyi_norm(pts) <= 1.0
    if not np.any(inside):
        return 1.0
    first = np.min(np.where(inside, u[:, None], np.inf))
    # refine: step back one grid cell, the true entry lies in between
    return float(R * max(first - 1.0 / n_u, 0.0) / d_a)


def calibrate_constants(quad: QuadSpec, kappa_hat: float, M0_margin: float = 1.25) -> Calibration:
    """Discover M0, N, r0, r*, R* by corkscrew scans over latitudes and dyadic scales."""
    alphas = np.concatenate([np.linspace(-HALF_PI + 0.01, HALF_PI - 0.01, 13), [0.0]])
    scales = [2.0 ** -k for k in range(2, 9)]
    worst = np.inf
    eta = 1.0
    for a in alphas:
        omega = SpherePoint(float(a), 0.0)
        for r in scales:
            ci = corkscrew_interior(omega, r, M0=1e9)
            ce = corkscrew_exterior(omega, r, M0=1e9)
            worst = min(worst, ci.to_boundary / r, ce.to_boundary / r)
            if r in (scales[0], scales[-1]):
                eta = min(eta, exclusion_factor(ce.point, r))
    M0 = math.ceil(M0_margin / worst * 100.0) / 100.0
    N = max(2.0, math.ceil(1.5 / max(eta, 1e-3) * 100.0) / 100.0)
    r0 = scales[0]
    r_star = r0 / (M0 * N)
    R_star = shell_threshold(r_star)
    return Calibration(kappa_hat=float(kappa_hat), M0=float(M0), N=float(N), eta=float(eta),
                       r0=float(r0), r_star=float(r_star), R_star=float(R_star))


def verify_corkscrews(calib: Calibration, samples: int = 1000, seed: int = 0) -> ScanReport:
    """Re-run both corkscrew searches at random ``(omega, r)`` with ``r < r0`` against ``M0``."""
    rng = np.random.default_rng(seed)
    edge = HALF_PI - 0.01
    alphas = rng.uniform(-edge, edge, samples)
    phis = rng.uniform(0.0, 2.0 * math.pi, samples)
    radii = calib.r0 * np.exp(rng.uniform(math.log(1e-3), 0.0, samples))
    report = ScanReport("corkscrew-verification", params={"samples": samples, "seed": seed, "M0": calib.M0})
    failures = 0
    worst = math.inf
    for a, ph, r in zip(alphas, phis, radii):
        omega = SpherePoint(float(a), float(ph))
        for side, search in (("interior", corkscrew_interior), ("exterior", corkscrew_exterior)):
            try:
                ck = search(omega, float(r), calib.M0)
                worst = min(worst, ck.to_boundary / ck.scale)
            except RuntimeError:
                failures += 1
                report.add(alpha=float(a), phi=float(ph), r=float(r), side=side)
    report.summary = {"failures": failures, "min_depth_ratio": worst, "required": 1.0 / calib.M0}
    report.passed = failures == 0
    return report


def shell_threshold(r_star: float, n_alpha: int = 65, n_R: int = 400) -> float:
    """Smallest grid radius ``R`` with ``sup_{|y| >= R} d(y, dB) < r_star``."""
    alphas = np.linspace(-HALF_PI, HALF_PI, n_alpha)
    Rs = 1.0 - np.geomspace(r_star, 1e-9, n_R)
    A, RR = np.meshgrid(alphas, Rs, indexing="ij")
    ys = point(RR * np.sqrt(np.clip(np.cos(A), 0, None)), 0.0 * A, RR * RR * np.sin(A))
    d, _, _ = boundary_distance(ys)
    shell_sup = d.max(axis=0)
    tail_sup = np.maximum.accumulate(shell_sup[::-1])[::-1]
    good = np.nonzero(tail_sup < r_star)[0]
    return float(Rs[good[0]]) if len(good) else float(Rs[-1])


# ---------------------------------------------------------------------------
# Canonical normalizing maps


@dataclass(frozen=True)
class CanonicalData:
    params: MobiusParams
    handle: MapHandle
    omega: SpherePoint
    rho: float
    exterior: Corkscrew


def canonical_T(x, calib: Calibration | None = None) -> CanonicalData:
    """``T_x`` with ``rho_x = d(x, dB)``, nearest boundary point ``omega_x`` and
    exterior corkscrew ``a_x`` at scale ``M0 N rho_x``."""
    calib = calib or default_calibration()
    x = np.asarray(x, dtype=float)
    if koranyi_norm(x) <= calib.R_star:
        raise ValueError("canonical map requires |x| > R*")
    res = dist_to_boundary(x)
    omega = res.argmin
    ext = corkscrew_exterior(omega, calib.M0 * calib.N * res.value, calib.M0)
    params = MobiusParams(x, ext.point, res.value)
    return CanonicalData(params, mobius(params), omega, res.value, ext)


def remark_properties(data: CanonicalData, calib: Calibration) -> dict:
    """The four distance relations between ``x``, ``omega_x`` and ``a_x`` at scale ``rho_x``."""
    r = data.rho
    x, a = data.params.x, data.params.a
    w = embed(data.omega)
    d_x_b = float(boundary_distance(x)[0])
    d_x_w = float(dist(x, w))
    d_a_b = float(boundary_distance(a)[0])
    d_a_w = float(dist(a, w))
    d_x_a = float(dist(x, a))
    M0, N = calib.M0, calib.N
    tol = 1e-9 * max(r, 1e-300)
    return {
        "interior_depth": d_x_b >= r / M0 - tol,
        "interior_reach": r / M0 - tol <= d_x_w <= r + tol,
        "exterior_bracket": N * r - tol <= d_a_b <= d_a_w + tol and d_a_w <= M0 * N * r + tol,
        "separation": (N - 1) * r - tol <= d_x_a <= (1 + M0 * N) * r + tol,
    }


def _local_seeds(center, radius, n: int):
    alpha, phi, _ = ball_nodes(center, radius, n, n // 2)
    return alpha.reshape(alpha.shape[:-2] + (-1,)), phi.reshape(phi.shape[:-2] + (-1,))


def image_boundary_distance(T: MapHandle, w, seed_alpha, seed_phi, zoom_steps: int = 14, k: int = 5):
    """``d(w, T(dB))`` from a seed mesh of preimages followed by patch zooming.

    ``seed_alpha``/``seed_phi`` have shape ``(m, n_seeds)`` matching the ``m``
    target points ``w``.  Returns the minimal distance found (an upper bound
    of the true value that converges under zooming).
    """
    w = np.asarray(w, dtype=float).reshape(-1, 3)
    edge = HALF_PI - 1e-9
    sa = np.clip(seed_alpha, -edge, edge)
    vals = dist(w[:, None, :], T(embed(SpherePoint(sa, seed_phi))))
    j = np.argmin(vals, axis=1)
    rows = np.arange(len(j))
    best_a, best_p, best = sa[rows, j], seed_phi[rows, j], vals[rows, j]
    step_a = np.full(len(j), 0.05)
    step_p = np.full(len(j), 0.05)
    u = np.linspace(-1.0, 1.0, k)
    U, V = np.meshgrid(u, u, indexing="ij")
    U, V = U.ravel(), V.ravel()
    for _ in range(zoom_steps):
        pa = np.clip(best_a[:, None] + step_a[:, None] * U, -edge, edge)
        pp = best_p[:, None] + step_p[:, None] * V
        pv = dist(w[:, None, :], T(embed(SpherePoint(pa, pp))))
        jj = np.argmin(pv, axis=1)
        improve = pv[rows, jj] < best
        best_a = np.where(improve, pa[rows, jj], best_a)
        best_p = np.where(improve, pp[rows, jj], best_p)
        best = np.minimum(best, pv[rows, jj])
        step_a *= 0.5
        step_p *= 0.5
    return best


def _boundary_seeds(points, radius, n_local: int = 24, n_global: int = 24):
    grid = SphereGrid.from_quad(QuadSpec(n_alpha=n_global, n_phi=n_global))
    mesh = grid.mesh()
    ga = np.broadcast_to(np.ravel(mesh.alpha), (len(points), mesh.alpha.size))
    gp = np.broadcast_to(np.ravel(mesh.phi), (len(points), mesh.phi.size))
    la, lp = _local_seeds(points, radius, n_local)
    return np.concatenate([ga, la], axis=1), np.concatenate([gp, lp], axis=1)


def ball_inclusion_scan(calib: Calibration, n_lat: int = 7, n_depth: int = 3, n_local: int = 32) -> ScanReport:
    """Bracket ``B(0, m) in T_x(B) in B(0, M)`` from boundary images over an x-grid."""
    report = ScanReport("ball-inclusion", params={"n_lat": n_lat, "n_depth": n_depth})
    lats = np.linspace(-HALF_PI + 0.05, HALF_PI - 0.05, n_lat)
    depths = 1.0 - (1.0 - calib.R_star) * np.linspace(0.2, 0.8, n_depth)
    ms, Ms = [], []
    grid = SphereGrid.from_quad(QuadSpec(n_alpha=48, n_phi=48))
    for lat in lats:
        for s in depths:
            x = radial_point(s, SpherePoint(float(lat), 0.0))
            data = canonical_T(x, calib)
            la, lp = _local_seeds(data.omega, 8.0 * calib.M0 * calib.N * data.rho, n_local)
            mesh = grid.mesh()
            A = np.concatenate([np.ravel(mesh.alpha), np.ravel(la)])
            P = np.concatenate([np.ravel(mesh.phi), np.ravel(lp)])
            norms = koranyi_norm(data.handle(embed(SpherePoint(A, P))))
            m, M = float(norms.min()), float(norms.max())
            ms.append(m)
            Ms.append(M)
            report.add(alpha=float(lat), s=float(s), rho=data.rho, m=m, M=M)
    report.summary = {"m": float(min(ms)), "M": float(max(Ms))}
    return report


def normalization_scan(calib: Calibration, n_lat: int = 5, n_depth: int = 2, n_shadow: int = 6) -> ScanReport:
    """Smallest ``d(T_x(gamma(s_{omega,x}, omega)), T_x(dB))`` over x and shadow points."""
    report = ScanReport("normalization", params={"n_lat": n_lat, "n_depth": n_depth, "n_shadow": n_shadow})
    lats = np.linspace(-HALF_PI + 0.05, HALF_PI - 0.05, n_lat)
    depths = 1.0 - (1.0 - calib.R_star) * np.linspace(0.3, 0.7, n_depth)
    kappa = calib.kappa_hat
    overall = np.inf
    for lat in lats:
        for s in depths:
            x = radial_point(s, SpherePoint(float(lat), 0.0))
            data = canonical_T(x, calib)
            alpha, phi, w = ball_nodes(x, (1.0 + kappa) * data.rho, n_shadow, n_shadow // 2)
            keep = w.ravel() > 0
            sa, sp = alpha.ravel()[keep], phi.ravel()[keep]
            sa = np.clip(sa, -HALF_PI + 1e-9, HALF_PI - 1e-9)
            pts = []
            for a_, p_ in zip(sa, sp):
                om = SpherePoint(float(a_), float(p_))
                pts.append(radial_point(hitting_param(om, data.rho), om))
            pts = np.array(pts)
            images = data.handle(pts)
            seeds = _boundary_seeds(pts, 6.0 * calib.M0 * calib.N * data.rho)
            d = image_boundary_distance(data.handle, images, *seeds)
            overall = min(overall, float(d.min()))
            report.add(alpha=float(lat), s=float(s), rho=data.rho, min_distance=float(d.min()),
                       shadow_points=int(len(pts)))
    report.summary = {"c_hat": overall}
    return report


def conjugation_transfer_check(f: MapHandle, params: MobiusParams, region, quad: QuadSpec | None = None,
                               samples: int = 40, h: float = 1e-5) -> ScanReport:
    """Ratio ``|D_H f(y)| / (|D_H (f o T^{-1})(T y)| J_T(y)^{1/4})`` on ``B(omega, r)`` inside B.

    ``region`` is ``(omega, r)``.  Also reports ``r J_T^{1/4}``, the
    distance ratio ``r d(Ty, dT(B)) / d(y, dB)`` used for the Jacobian comparison,
    and ``(d(Ty, dT(B)) / d(y, dB)) / (rho / d(y, a)^2)``.
    """
    quad = quad or QuadSpec()
    omega, r = region
    T = mobius(params)
    rng = np.random.default_rng(quad.seed)
    e = rng.uniform(-1.0, 1.0, size=(8 * samples, 3))
    e = e[koranyi_norm(e) < 1.0]
    ys = group_mul(embed(omega), dilate(r, e))
    ys = ys[koranyi_norm(ys) < 1.0][:samples]
    g = MapHandle("conjugate", lambda w: f(T.inverse(w)))
    df = horiz_derivative(f, ys, h).operator_norm
    dg = horiz_derivative(g, T(ys), h).operator_norm
    jt = mobius_jacobian(params, ys)
    ratio = df / (dg * jt ** 0.25)
    d_y, _, _ = boundary_distance(ys)
    seeds = _boundary_seeds(ys, 4.0 * max(float(r), float(d_y.max())))
    d_img = image_boundary_distance(T, T(ys), *seeds)
    jac_scaled = r * jt ** 0.25
    dist_scaled = r * d_img / d_y
    comparability = (d_img / d_y) / (params.rho / dist(ys, params.a) ** 2)
    report = ScanReport("conjugation-transfer", params={"r": float(r), "samples": int(len(ys))})
    for k in range(len(ys)):
        report.add(x=float(ys[k, 0]), y=float(ys[k, 1]), t=float(ys[k, 2]), ratio=float(ratio[k]),
                   jac_scaled=float(jac_scaled[k]), dist_scaled=float(dist_scaled[k]),
                   comparability=float(comparability[k]))
    report.summary = {"ratio_min": float(ratio.min()), "ratio_max": float(ratio.max()),
                      "jac_scaled_min": float(jac_scaled.min()), "jac_scaled_max": float(jac_scaled.max()),
                      "dist_scaled_min": float(dist_scaled.min()), "dist_scaled_max": float(dist_scaled.max()),
                      "comparability_min": float(comparability.min()),
                      "comparability_max": float(comparability.max())}
    return report
