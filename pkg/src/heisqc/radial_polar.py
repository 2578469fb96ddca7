"""Radial curves, polar coordinates and distances to the unit sphere.

The radial curve through a boundary point ``omega = (alpha, phi)`` is the
horizontal spiral

    gamma(s, omega) = (s sqrt(cos alpha) e^{i (phi - tan(alpha) log s)}, s^2 sin alpha),

with ``|gamma(s, omega)| = s`` and horizontal speed ``1/sqrt(cos alpha)``.
Lebesgue measure disintegrates as ``s^3 ds d alpha d phi`` along these curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .heis_core import dist, koranyi_norm, point
from .report import ScanReport
from .sphere_measures import (HALF_PI, QuadSpec, SphereGrid, SpherePoint, _latitude_terms, embed)

INVGOLD = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BoundaryDistanceResult:
    value: float
    argmin: SpherePoint
    iterations: int


def radial_point(s, omega: SpherePoint) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    a = np.asarray(omega.alpha, dtype=float)
    f = np.asarray(omega.phi, dtype=float)
    with np.errstate(divide="ignore"):
        phase = f - np.tan(a) * np.log(s)
    r = s * np.sqrt(np.cos(a))
    return point(r * np.cos(phase), r * np.sin(phase), s * s * np.sin(a))


def radial_speed(s, omega: SpherePoint) -> np.ndarray:
    a = np.asarray(omega.alpha, dtype=float)
    return np.broadcast_to(1.0 / np.sqrt(np.cos(a)), np.broadcast_shapes(np.shape(s), a.shape)).copy()


def radial_coordinates(q):
    """Inverse of ``radial_point`` off the vertical axis: returns ``(s, omega)``."""
    q = np.asarray(q, dtype=float)
    s = koranyi_norm(q)
    alpha = np.arctan2(q[..., 2], q[..., 0] ** 2 + q[..., 1] ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        phi = np.arctan2(q[..., 1], q[..., 0]) + np.tan(alpha) * np.log(s)
    return s, SpherePoint(alpha, np.mod(phi, 2.0 * math.pi))


def s_rule(a: float, b: float, n: int):
    x, w = leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def polar_integrate(u, s_range=(0.0, 1.0), quad: QuadSpec | None = None) -> float:
    """Integral of ``u`` over the annulus ``a < |q| < b`` in polar coordinates.

    ``u`` receives Cartesian points with a trailing axis of length 3.
    """
    quad = quad or QuadSpec()
    a, b = s_range
    grid = SphereGrid.from_quad(quad)
    s, ws = s_rule(a, b, quad.n_s)
    wphi = grid.w_phi
    total = 0.0
    for i, alpha in enumerate(grid.alpha):
        omega = SpherePoint(np.full((len(grid.phi), 1), alpha), grid.phi[:, None])
        pts = radial_point(s[None, :], omega)
        vals = np.asarray(u(pts), dtype=float)
        vals = np.broadcast_to(vals, pts.shape[:-1])
        if not np.all(np.isfinite(vals)):
            raise ValueError("integrand is not finite on the polar grid")
        total += grid.w_alpha[i] * float(np.sum(wphi[:, None] * (s ** 3 * ws)[None, :] * vals))
    return total


def cartesian_integrate(u, n: int = 64) -> float:
    """Iterated Gauss-Legendre quadrature of ``u`` over the unit ball in (x, y, t)."""
    xg, wg = leggauss(n)
    x = xg[:, None, None]
    wx = wg[:, None, None]
    ymax = np.sqrt(1.0 - x * x)
    y = ymax * xg[None, :, None]
    wy = ymax * wg[None, :, None]
    tmax = np.sqrt(np.clip(1.0 - (x * x + y * y) ** 2, 0.0, None))
    t = tmax * xg[None, None, :]
    wt = tmax * wg[None, None, :]
    pts = point(np.broadcast_to(x, t.shape), np.broadcast_to(y, t.shape), t)
    vals = np.broadcast_to(np.asarray(u(pts), dtype=float), t.shape)
    return float(np.sum(vals * wx * wy * wt))


def mc_ball_volume(samples: int, seed: int, chunk: int = 1_000_000):
    """Rejection-sampling estimate of the ball volume in the box [-1,1]^3 and its standard error."""
    rng = np.random.default_rng(seed)
    hits = 0
    left = int(samples)
    while left > 0:
        m = min(chunk, left)
        p = rng.uniform(-1.0, 1.0, size=(m, 3))
        hits += int(np.count_nonzero(koranyi_norm(p) < 1.0))
        left -= m
    frac = hits / samples
    return 8.0 * frac, 8.0 * math.sqrt(frac * (1.0 - frac) / samples)


# ---------------------------------------------------------------------------
# Distance to the unit sphere


def _sphere_gap(r2, t, alpha):
    """``d(q, circle)^2`` minimized over the latitude circle ``alpha``, plus the optimal phase."""
    _, _, gap, psi0 = _latitude_terms(r2, t, alpha)
    return gap, psi0


def boundary_distance(q, n_grid: int = 96, iters: int = 64):
    """Vectorized ``d(q, dS)`` for arbitrary points (inside or outside the ball).

    The minimization over the relative angle is done in closed form, the one
    over the latitude by a grid followed by golden-section refinement.
    Returns ``(value, alpha_argmin, phi_argmin)``.
    """
    q = np.asarray(q, dtype=float)
    shape = q.shape[:-1]
    flat = q.reshape(-1, 3)
    r2 = flat[:, 0] ** 2 + flat[:, 1] ** 2
    t = flat[:, 2]
    phase = np.arctan2(flat[:, 1], flat[:, 0])
    grid = np.linspace(-HALF_PI, HALF_PI, n_grid + 1)
    vals, _ = _sphere_gap(r2[:, None], t[:, None], grid[None, :])
    k = np.argmin(vals, axis=1)
    lo = grid[np.maximum(k - 1, 0)]
    hi = grid[np.minimum(k + 1, n_grid)]
    x1 = hi - INVGOLD * (hi - lo)
    x2 = lo + INVGOLD * (hi - lo)
    f1, _ = _sphere_gap(r2, t, x1)
    f2, _ = _sphere_gap(r2, t, x2)
    for _ in range(iters):
        left = f1 < f2
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        x_new = np.where(left, hi - INVGOLD * (hi - lo), lo + INVGOLD * (hi - lo))
        f_new, _ = _sphere_gap(r2, t, x_new)
        x1, x2 = np.where(left, x_new, x2), np.where(left, x1, x_new)
        f1, f2 = np.where(left, f_new, f2), np.where(left, f1, f_new)
    # compare the refined point with the best grid node and the two poles
    cand = np.stack([0.5 * (lo + hi), grid[k], np.full_like(lo, -HALF_PI), np.full_like(lo, HALF_PI)], axis=1)
    cv, cpsi = _sphere_gap(r2[:, None], t[:, None], cand)
    j = np.argmin(cv, axis=1)
    rows = np.arange(len(j))
    best = np.clip(cv[rows, j], 0.0, None)
    alpha = cand[rows, j]
    phi = np.mod(phase + cpsi[rows, j], 2.0 * math.pi)
    return np.sqrt(best).reshape(shape), alpha.reshape(shape), phi.reshape(shape)


def dist_to_boundary(q, quad: QuadSpec | None = None, n_grid: int = 96, iters: int = 64) -> BoundaryDistanceResult:
    """Distance from an interior point to the unit sphere, with a nearest boundary point."""
    q = np.asarray(q, dtype=float)
    if koranyi_norm(q) >= 1.0:
        raise ValueError("point must lie inside the unit ball")
    if quad is not None:
        n_grid = max(n_grid, quad.n_alpha // 2)
    value, alpha, phi = boundary_distance(q, n_grid=n_grid, iters=iters)
    edge = HALF_PI - 1e-12
    return BoundaryDistanceResult(float(value), SpherePoint(float(np.clip(alpha, -edge, edge)), float(phi)), iters)


def closed_form_dist(s, alpha, alpha_t, phi) -> np.ndarray:
    """Distance between ``(s sqrt(cos a) e^{i phi0}, s^2 sin a)`` and the boundary point
    ``(alpha_t, phi0 + phi)``, evaluated from the expanded quartic expression."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise ValueError("s must be positive")
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(alpha_t), np.sin(alpha_t)
    quartic = (1.0 + s ** 4 + s * s * (6.0 * ca * cb - 2.0 * sa * sb)
               - 4.0 * s * np.sqrt(ca * cb) * (np.cos(alpha_t + phi) + s * s * np.cos(alpha - phi)))
    if np.any(quartic < -1e-12):
        raise ValueError("negative radicand: formula used outside its domain")
    return np.sqrt(np.sqrt(np.clip(quartic, 0.0, None)))


def radial_gap(s, omega: SpherePoint) -> np.ndarray:
    """``d(gamma(s, omega), omega)``."""
    return dist(radial_point(s, omega), embed(omega))


def hitting_param(omega: SpherePoint, rho: float, n_scan: int = 64) -> float:
    """Largest ``s`` with ``d(gamma(s, omega), omega) = rho``."""
    if not 0.0 < rho < 1.0:
        raise ValueError("rho must lie in (0, 1)")

    def g(s):
        return float(radial_gap(s, omega)) - rho

    grid = np.linspace(1.0, max(1.0 - 2.0 * rho, 1e-12), n_scan + 1)
    vals = radial_gap(grid, omega) - rho
    above = np.nonzero(vals >= 0)[0]
    if len(above) == 0:
        raise RuntimeError("hitting parameter not bracketed")
    k = int(above[0])
    if vals[k] == 0:
        return float(grid[k])
    return float(brentq(g, grid[k], grid[k - 1], xtol=1e-15, rtol=1e-15, maxiter=200))


def nt_ratio(s, omega: SpherePoint, n_grid: int = 96) -> np.ndarray:
    """``d(gamma, omega) / d(gamma, dS)`` along the radial curve."""
    q = radial_point(s, omega)
    to_boundary, _, _ = boundary_distance(q, n_grid=n_grid)
    return radial_gap(s, omega) / to_boundary


def kappa_grid(quad: QuadSpec):
    alphas = np.linspace(-HALF_PI + 1e-3, HALF_PI - 1e-3, max(3, quad.n_alpha // 2))
    gaps = np.geomspace(1e-6, 1.0 - 1e-4, quad.n_s)
    return alphas, 1.0 - gaps


def kappa_scan(quad: QuadSpec) -> ScanReport:
    """Sup over a (latitude, s) grid of the cone ratio; the cone aperture is ``sup - 1``."""
    alphas, svals = kappa_grid(quad)
    a, s = np.meshgrid(alphas, svals, indexing="ij")
    ratios = nt_ratio(s, SpherePoint(a, np.zeros_like(a)))
    k = np.unravel_index(np.argmax(ratios), ratios.shape)
    report = ScanReport("kappa-scan", params={"n_alpha": len(alphas), "n_s": len(svals)})
    for i in range(len(alphas)):
        j = int(np.argmax(ratios[i]))
        report.add(alpha=float(alphas[i]), s=float(svals[j]), ratio=float(ratios[i, j]))
    report.summary = {
        "kappa_hat": float(ratios[k] - 1.0),
        "argmax_alpha": float(a[k]),
        "argmax_s": float(s[k]),
        "min_ratio": float(ratios.min()),
        "grid_spec": {"alpha_clamp": 1e-3, "s_min": float(svals.min()), "s_max": float(svals.max()),
                      "n_alpha": len(alphas), "n_s": len(svals)},
    }
    return report


def refined_kappa(quad: QuadSpec) -> tuple[float, ScanReport, ScanReport]:
    """Cone aperture from the scans at ``quad`` and at doubled resolution.

    The sup is approached from below by the grids, so the larger of the two
    values is kept; with it every node of the coarser grid lies strictly
    inside the cone.
    """
    base = kappa_scan(quad)
    fine = kappa_scan(quad.doubled())
    kappa = max(base.summary["kappa_hat"], fine.summary["kappa_hat"])
    return float(kappa), base, fine


def appendix_bounds_scan(quad: QuadSpec, s0: float = 0.9, alpha_min: float = 0.3) -> ScanReport:
    """Fitted constants for the two-sided radial-curve distance bounds.

    ``C_hat`` is the largest ratio ``d(gamma, omega) / min{(1-s)/sqrt(cos a),
    sqrt(1-s) + (1-s)^{1/4} cos(a)^{1/4}}``; ``c_hat`` is the smallest ratio of
    ``d(gamma, dS)^4`` to ``(1-s)^2`` (when ``1-s >= cos a``) or
    ``(1-s)^4 / cos^2 a`` (otherwise), restricted to ``s >= s0``, ``|a| >= alpha_min``.
    """
    alphas, svals = kappa_grid(quad)
    a, s = np.meshgrid(alphas, svals, indexing="ij")
    omega = SpherePoint(a, np.zeros_like(a))
    gap = 1.0 - s
    ca = np.cos(a)
    upper = np.minimum(gap / np.sqrt(ca), np.sqrt(gap) + gap ** 0.25 * ca ** 0.25)
    d_omega = radial_gap(s, omega)
    ratio_up = d_omega / upper
    d_bdry, _, _ = boundary_distance(radial_point(s, omega))
    lower = np.where(gap >= ca, gap ** 2, gap ** 4 / ca ** 2)
    mask = (s >= s0) & (np.abs(a) >= alpha_min)
    ratio_low = np.where(mask, d_bdry ** 4 / lower, np.inf)
    report = ScanReport("appendix-bounds", params={"s0": s0, "alpha_min": alpha_min})
    for i in range(len(alphas)):
        report.add(alpha=float(alphas[i]), upper_ratio_max=float(ratio_up[i].max()),
                   lower_ratio_min=float(ratio_low[i].min()))
    report.summary = {"C_hat": float(ratio_up.max()), "c_hat": float(ratio_low.min())}
    return report


# ---------------------------------------------------------------------------
# Inner level sets of the boundary distance


def level_set_radius(r, t, iters: int = 60) -> np.ndarray:
    """Radius ``rho`` with ``d((rho, 0, t), dS) = 1 - r`` (vectorized over ``r`` and ``t``)."""
    r, t = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(t, dtype=float))
    if np.any((r <= 0) | (r >= 1)):
        raise ValueError("r must lie in (0, 1)")
    slab = 1.0 - (1.0 - r) ** 2
    if np.any(np.abs(t) > slab * (1 + 1e-12)):
        raise ValueError("t outside the admissible slab")
    t = np.clip(t, -slab, slab)
    target = 1.0 - r
    lo = np.zeros_like(t)
    hi = (1.0 - t * t) ** 0.25
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        d, _, _ = boundary_distance(point(mid, 0.0 * mid, t))
        outside = d >= target
        lo = np.where(outside, mid, lo)
        hi = np.where(outside, hi, mid)
    on_axis = np.abs(t) >= slab
    return np.where(on_axis, 0.0, 0.5 * (lo + hi))


def level_set_points(r, n_t: int, n_rot: int) -> np.ndarray:
    """Sample of the level set ``{d(q, dS) = 1 - r}`` on a (height, rotation) grid."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    slab = 1.0 - (1.0 - r) ** 2
    u = np.cos(np.linspace(0.0, math.pi, n_t))
    t = slab[:, None] * u[None, :]
    rho = level_set_radius(np.broadcast_to(r[:, None], t.shape), t)
    theta = (np.arange(n_rot) + 0.5) * (2.0 * math.pi / n_rot)
    rho3 = rho[..., None]
    return point(rho3 * np.cos(theta), rho3 * np.sin(theta), np.broadcast_to(t[..., None], rho3.shape[:-1] + (n_rot,)))


def big_M(r, f, quad: QuadSpec | None = None) -> np.ndarray:
    """``sup |f|`` over the level set ``{d(q, dS) = 1 - r}``, sampled on a grid."""
    quad = quad or QuadSpec()
    fn = getattr(f, "eval", f)
    pts = level_set_points(r, max(9, quad.n_alpha // 4), max(8, quad.n_phi // 2))
    vals = koranyi_norm(fn(pts))
    out = vals.reshape(vals.shape[0], -1).max(axis=1)
    return out if np.ndim(r) else float(out[0])
