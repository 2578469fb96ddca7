"""Model quasiconformal maps and their distortion, Jacobian and growth estimators.

The radial stretch is built in gauge-polar coordinates
``q = (s sqrt(cos a) e^{i phi}, s^2 sin a)``:

    s -> s^beta,   tan a -> tan(a) / beta,   phi -> phi + (a - a') / 2,

which keeps the map contact (horizontal curves go to horizontal curves),
maps ``dB(0, r)`` onto ``dB(0, r^beta)`` and carries the radial curve
``gamma(s, omega)`` onto another radial curve.  The plain gauge dilation
``q -> delta_{|q|^{beta-1}}(q)`` has the same sphere mapping but is not
contact; it is available as ``dilation_stretch`` for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal_maps import horizontal_normal, inversion
from .handles import MapHandle
from .heis_core import (dilate, dist, group_mul, horiz_derivative, inverse, koranyi_norm, point, rotate)
from .radial_polar import boundary_distance, level_set_radius, radial_point, radial_speed
from .report import ScanReport
from .sphere_measures import HALF_PI, QuadSpec, SpherePoint, embed

# ---------------------------------------------------------------------------
# Model maps


def identity() -> MapHandle:
    return MapHandle("identity", lambda q: np.array(q, dtype=float),
                     analytic_dh=lambda q: _eye(q), claimed_conformal=True)


def dilation(rho: float = 2.0) -> MapHandle:
    if rho <= 0:
        raise ValueError("rho must be positive")
    return MapHandle("dilation", lambda q: dilate(rho, q),
                     analytic_dh=lambda q: rho * _eye(q), claimed_conformal=True, meta={"rho": rho})


def rotation(theta: float = 0.7) -> MapHandle:
    c, s = math.cos(theta), math.sin(theta)
    rot = np.array([[c, -s], [s, c]])
    return MapHandle("rotation", lambda q: rotate(theta, q),
                     analytic_dh=lambda q: np.broadcast_to(rot, np.shape(q)[:-1] + (2, 2)).copy(),
                     claimed_conformal=True, meta={"theta": theta})


def translation(by=(0.3, -0.2, 0.5)) -> MapHandle:
    p = np.asarray(by, dtype=float)
    return MapHandle("translation", lambda q: group_mul(p, q), analytic_dh=lambda q: _eye(q),
                     claimed_conformal=True, inverse=lambda w: group_mul(inverse(p), w), meta={"by": p})


def inversion_composite(center=(2.0, 0.0, 0.0), rho: float = 1.0) -> MapHandle:
    """``q -> delta_rho(I(c^{-1} q))``: conformal on B when ``c`` lies outside the closed ball."""
    c = np.asarray(center, dtype=float)
    return MapHandle("inversion", lambda q: dilate(rho, inversion(group_mul(inverse(c), q))),
                     claimed_conformal=True,
                     inverse=lambda w: group_mul(c, inversion(dilate(1.0 / rho, w))),
                     jacobian=lambda q: rho ** 4 / dist(c, q) ** 8, meta={"center": c, "rho": rho})


def _eye(q):
    return np.broadcast_to(np.eye(2), np.shape(q)[:-1] + (2, 2)).copy()


def _stretch_eval(beta: float):
    def fn(q):
        q = np.asarray(q, dtype=float)
        x, y, t = q[..., 0], q[..., 1], q[..., 2]
        r2 = x * x + y * y
        s = koranyi_norm(q)
        alpha = np.arctan2(t, r2)
        alpha_new = np.arctan2(t, beta * r2)
        turn = 0.5 * (alpha - alpha_new)
        with np.errstate(divide="ignore", invalid="ignore"):
            scale = np.where(r2 > 0, s ** beta * np.sqrt(np.cos(alpha_new)) / np.sqrt(np.where(r2 > 0, r2, 1.0)), 0.0)
        c, sn = np.cos(turn), np.sin(turn)
        return point(scale * (c * x - sn * y), scale * (sn * x + c * y), s ** (2 * beta) * np.sin(alpha_new))

    return fn


def stretch(beta: float = 2.0) -> MapHandle:
    """Contact radial stretch with ``|f(q)| = |q|^beta``; ``beta = 1`` is the identity."""
    if beta <= 0:
        raise ValueError("beta must be positive")
    return MapHandle("stretch", _stretch_eval(beta), beta=float(beta),
                     claimed_conformal=(beta == 1.0), meta={"beta_below_one": beta < 1.0})


def dilation_stretch(beta: float = 2.0) -> MapHandle:
    """``q -> delta_{|q|^{beta-1}}(q)``: same sphere mapping as ``stretch`` but not contact."""
    if beta <= 0:
        raise ValueError("beta must be positive")

    def fn(q):
        q = np.asarray(q, dtype=float)
        n = koranyi_norm(q)
        with np.errstate(divide="ignore"):
            lam = np.where(n > 0, n ** (beta - 1.0), 0.0)
        return dilate(np.where(n > 0, lam, 1.0), q) * (n > 0)[..., None]

    return MapHandle("dilation_stretch", fn, beta=float(beta), meta={"contact": False})


def boundary_singular_map(a, beta: float = 2.0) -> MapHandle:
    """``f(y) = stretch_beta(I(a^{-1} y))`` with ``|f(y)| = d(y, a)^{-beta}``."""
    a = np.asarray(a, dtype=float)
    if koranyi_norm(a) < 1.0 - 1e-12:
        raise ValueError("pole must lie outside the open unit ball")
    inner = _stretch_eval(beta)

    def fn(y):
        w = group_mul(inverse(a), y)
        if np.any(koranyi_norm(w) == 0):
            raise ValueError("map evaluated at its pole")
        return inner(inversion(w))

    _, fa, fp = boundary_distance(a)
    focus = SpherePoint(float(np.clip(fa, -HALF_PI + 1e-9, HALF_PI - 1e-9)), float(fp))
    return MapHandle("boundary_singular", fn, beta=None, focus=focus,
                     meta={"pole": a, "exponent": float(beta), "pole_gap": float(boundary_distance(a)[0])})


def pole_near(omega: SpherePoint, r: float) -> np.ndarray:
    """``delta_{1+r}(embed(omega))``: an exterior pole at distance about ``r`` from the sphere."""
    return dilate(1.0 + r, embed(omega))


def shifted_stretch(beta: float = 2.0, by=(1.5, 0.0, 0.0)) -> MapHandle:
    """Stretch followed by a left translation, so the map omits 0 on the closed ball."""
    p = np.asarray(by, dtype=float)
    inner = _stretch_eval(beta)
    return MapHandle("shifted_stretch", lambda q: group_mul(p, inner(q)), meta={"beta": beta, "by": p})


def compose(outer: MapHandle, inner: MapHandle, name: str | None = None) -> MapHandle:
    return MapHandle(name or f"{outer.name}*{inner.name}", lambda q: outer(inner(q)),
                     claimed_conformal=outer.claimed_conformal and inner.claimed_conformal,
                     focus=inner.focus if inner.focus is not None else outer.focus)


MODEL_MAPS = {
    "identity": identity,
    "dilation": dilation,
    "rotation": rotation,
    "translation": translation,
    "inversion": inversion_composite,
    "stretch": stretch,
    "dilation_stretch": dilation_stretch,
    "shifted_stretch": shifted_stretch,
    "boundary_singular": lambda beta=2.0, r=0.0, alpha=0.0, phi=0.0: boundary_singular_map(
        pole_near(SpherePoint(alpha, phi), r), beta),
}


def model_map(name: str, **params) -> MapHandle:
    if name not in MODEL_MAPS:
        raise KeyError(f"unknown map {name!r}; known: {', '.join(sorted(MODEL_MAPS))}")
    return MODEL_MAPS[name](**params)


# ---------------------------------------------------------------------------
# Distortion


def sphere_directions(n_horizontal: int = 32, n_phi: int = 8, tilts=(-math.pi / 3, -math.pi / 6, math.pi / 6, math.pi / 3)):
    """Unit gauge-sphere directions: a horizontal ring plus tilted rings (64 by default)."""
    phi_h = 2.0 * math.pi * np.arange(n_horizontal) / n_horizontal
    alpha = [np.zeros(n_horizontal)]
    phi = [phi_h]
    for tilt in tilts:
        alpha.append(np.full(n_phi, tilt))
        phi.append(2.0 * math.pi * np.arange(n_phi) / n_phi)
    return embed(SpherePoint(np.concatenate(alpha), np.concatenate(phi)))


@dataclass(frozen=True)
class DistortionProfile:
    radii: np.ndarray
    ratios: np.ndarray
    value: float
    stable: bool


def distortion_profile(f: MapHandle, q, radii=(1e-2, 3e-3, 1e-3), directions=None,
                       stability: float = 2e-2) -> DistortionProfile:
    """Max/min of ``d(f(q), f(q'))`` over ``d(q, q') = r`` for each radius (vectorized over q)."""
    q = np.asarray(q, dtype=float)
    dirs = sphere_directions() if directions is None else directions
    fq = f(q)
    out = []
    for r in radii:
        nb = group_mul(q[..., None, :], dilate(r, dirs))
        d = dist(fq[..., None, :], f(nb))
        out.append(d.max(axis=-1) / d.min(axis=-1))
    ratios = np.stack(out, axis=-1)
    value = ratios[..., -1]
    stable = np.all(np.abs(ratios[..., -1] / ratios[..., -2] - 1.0) <= stability) if len(radii) > 1 else True
    return DistortionProfile(np.asarray(radii, dtype=float), ratios, value, bool(stable))


def distortion_estimate(f: MapHandle, q, radii=(1e-2, 3e-3, 1e-3), directions=None):
    """Smallest-radius sphere eccentricity ``H_f(q)``; see ``distortion_profile`` for stability."""
    value = distortion_profile(f, q, radii, directions).value
    return float(value) if np.ndim(value) == 0 else value


def distortion_inequality_scan(f: MapHandle, samples: int = 200, seed: int = 7, h: float = 1e-5,
                               radius: float = 0.95) -> ScanReport:
    """``K_hat = max |D_H f|^4 / J_f`` over random points of ``B(0, radius)``, at step h and h/2."""
    qs = random_ball_points(samples, seed, radius)
    report = ScanReport("distortion-inequality", params={"map": f.name, "samples": samples, "h": h})
    ks = []
    for step in (h, h / 2):
        dh = horiz_derivative(f, qs, step)
        ratio = dh.operator_norm ** 4 / dh.jacobian
        ks.append(float(ratio.max()))
        report.add(h=step, K_hat=ks[-1], contact_residual=float(dh.contact_residual.max()))
    report.summary = {"K_hat": ks[0], "K_hat_half_step": ks[1], "relative_change": abs(ks[1] / ks[0] - 1.0)}
    return report


def random_ball_points(n: int, seed: int, radius: float = 1.0) -> np.ndarray:
    """Uniform (Lebesgue) samples of ``B(0, radius)`` by rejection from the bounding box."""
    rng = np.random.default_rng(seed)
    out = []
    have = 0
    while have < n:
        e = rng.uniform(-1.0, 1.0, size=(2 * n + 16, 3))
        e = e[koranyi_norm(e) < 1.0]
        out.append(e)
        have += len(e)
    return dilate(radius, np.concatenate(out)[:n])


def dense_directions() -> np.ndarray:
    """1536 gauge-sphere directions for comparisons where the sampling must not alias."""
    return sphere_directions(512, 64, tuple(np.linspace(-1.4, 1.4, 16)))


def composition_closure_check(f: MapHandle, T: MapHandle, qs, radii=(1e-2, 3e-3, 1e-3),
                              tol: float = 2e-2, directions=None) -> ScanReport:
    """``H_{f o T}(q) <= H_f(T q) (1 + tol)`` for a conformal ``T``.

    ``T`` turns the sampled directions, so both sides use a dense direction set
    by default; with the coarse one the discrete max/min aliases by several percent.
    """
    qs = np.asarray(qs, dtype=float)
    dirs = dense_directions() if directions is None else directions
    composed = distortion_estimate(compose(f, T), qs, radii, dirs)
    direct = distortion_estimate(f, T(qs), radii, dirs)
    ratio = np.atleast_1d(composed / direct)
    report = ScanReport("composition-closure", params={"map": f.name, "conformal": T.name, "tol": tol})
    for k in range(len(ratio)):
        report.add(point=qs.reshape(-1, 3)[k].tolist(), composed=float(np.atleast_1d(composed)[k]),
                   direct=float(np.atleast_1d(direct)[k]), ratio=float(ratio[k]))
    report.summary = {"ratio_max": float(ratio.max())}
    report.passed = bool(ratio.max() <= 1.0 + tol)
    return report


# ---------------------------------------------------------------------------
# Radial derivative bound


def radial_derivative_bound_check(f: MapHandle, omega: SpherePoint, s, h: float = 1e-6,
                                  dh_step: float = 1e-5) -> ScanReport:
    """Compare ``|d/ds |f(gamma(s, omega))||`` with ``(|f_z| / |f|) |D_H f| / sqrt(cos alpha)``.

    ``omega`` and ``s`` broadcast together; slack is right side minus left side.
    """
    s = np.asarray(s, dtype=float)
    a = np.asarray(omega.alpha, dtype=float)
    s, a, ph = np.broadcast_arrays(s, a, np.asarray(omega.phi, dtype=float))
    om = SpherePoint(a, ph)
    up = koranyi_norm(f(radial_point(s + h, om)))
    down = koranyi_norm(f(radial_point(s - h, om)))
    lhs = np.abs(up - down) / (2.0 * h)
    q = radial_point(s, om)
    fq = f(q)
    norm = koranyi_norm(fq)
    if np.any(norm == 0):
        raise ValueError("|f| vanishes on the curve")
    fz = np.hypot(fq[..., 0], fq[..., 1])
    rhs = fz / norm * horiz_derivative(f, q, dh_step).operator_norm * radial_speed(s, om)
    slack = rhs - lhs
    report = ScanReport("radial-derivative-bound", params={"map": f.name, "h": h})
    for k in np.ndindex(s.shape):
        report.add(s=float(s[k]), alpha=float(a[k]), phi=float(ph[k]), lhs=float(lhs[k]), rhs=float(rhs[k]),
                   slack=float(slack[k]))
    report.summary = {"min_slack": float(slack.min()), "min_relative_slack": float((slack / np.maximum(rhs, 1e-300)).min())}
    return report


# ---------------------------------------------------------------------------
# Growth near the boundary


def level_set_sup(f: MapHandle, r, n_t: int = 33, n_rot: int = 32, zoom: int = 10, k: int = 5,
                  n_focus: int = 9):
    """``sup |f|`` over ``{d(q, dS) = 1 - r}`` for each ``r``: grid search then patch zooming.

    The level set is rotation invariant, so it is parametrized by height
    ``t = slab cos(u)`` and rotation angle ``theta``.  When ``f.focus`` is set a
    patch of width comparable to ``1 - r`` is seeded where the radial curve
    through the focus crosses the level set.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    slab = 1.0 - (1.0 - r) ** 2

    def values(u, theta):
        t = slab[:, None] * np.cos(u)
        rho = level_set_radius(np.broadcast_to(r[:, None], t.shape), t, iters=48)
        pts = point(rho * np.cos(theta), rho * np.sin(theta), t)
        return koranyi_norm(f(pts))

    u0 = np.linspace(0.0, math.pi, n_t)
    th0 = 2.0 * math.pi * np.arange(n_rot) / n_rot
    U, TH = (m.ravel() for m in np.meshgrid(u0, th0, indexing="ij"))
    U = np.broadcast_to(U, (len(r), U.size))
    TH = np.broadcast_to(TH, U.shape)
    step_u = np.full(U.shape, math.pi / (n_t - 1))
    step_t = np.full(U.shape, 2.0 * math.pi / n_rot)
    if f.focus is not None:
        # seed where the inward horizontal normal from the focus reaches depth 1 - r
        delta = 1.0 - r
        w = embed(f.focus)
        n = horizontal_normal(w)
        q0 = group_mul(w, dilate(delta, np.broadcast_to(point(-n[0], -n[1], 0.0), delta.shape + (3,))))
        uf = np.arccos(np.clip(q0[:, 2] / slab, -1.0, 1.0))
        tf = np.arctan2(q0[:, 1], q0[:, 0])
        wu = np.minimum(math.pi / 2, 4.0 * delta / np.maximum(np.sin(uf), delta))
        wt = np.minimum(math.pi, 4.0 * delta / np.maximum(np.hypot(q0[:, 0], q0[:, 1]), 1e-3))
        g = np.linspace(-1.0, 1.0, n_focus)
        GU, GT = (m.ravel() for m in np.meshgrid(g, g, indexing="ij"))
        FU = np.clip(uf[:, None] + wu[:, None] * GU, 0.0, math.pi)
        FT = tf[:, None] + wt[:, None] * GT
        U = np.concatenate([U, FU], axis=1)
        TH = np.concatenate([TH, FT], axis=1)
        spacing = 2.0 / (n_focus - 1)
        step_u = np.concatenate([step_u, np.broadcast_to((wu * spacing)[:, None], FU.shape)], axis=1)
        step_t = np.concatenate([step_t, np.broadcast_to((wt * spacing)[:, None], FT.shape)], axis=1)
    vals = values(U, TH)
    j = np.argmax(vals, axis=1)
    rows = np.arange(len(r))
    best, bu, bt = vals[rows, j], U[rows, j], TH[rows, j]
    du, dt = step_u[rows, j], step_t[rows, j]
    g = np.linspace(-1.0, 1.0, k)
    GU, GT = (m.ravel() for m in np.meshgrid(g, g, indexing="ij"))
    for _ in range(zoom):
        pu = np.clip(bu[:, None] + du[:, None] * GU, 0.0, math.pi)
        pt = bt[:, None] + dt[:, None] * GT
        pv = values(pu, pt)
        jj = np.argmax(pv, axis=1)
        better = pv[rows, jj] > best
        bu = np.where(better, pu[rows, jj], bu)
        bt = np.where(better, pt[rows, jj], bt)
        best = np.maximum(best, pv[rows, jj])
        du, dt = du / 2.0, dt / 2.0
    return best


def growth_estimate_check(f: MapHandle, quad: QuadSpec | None = None, deltas=None, fresh: int = 2000,
                          fit_below: float = 0.25) -> ScanReport:
    """Log-log regression of ``sup_{d(q,dB) = delta} |f(q)| / |f(0)|`` against ``delta``.

    Returns the fitted exponent (slope) and verifies ``|f(q)| <= C1 + C2 d(q, dB)^{-alpha}``
    with ``alpha = max(0, -slope)`` on fresh random points.
    """
    quad = quad or QuadSpec()
    deltas = np.asarray(deltas if deltas is not None else 2.0 ** -np.arange(1, 11), dtype=float)
    f0 = float(koranyi_norm(f(np.zeros(3))))
    if f0 == 0:
        raise ValueError("map must omit 0")
    sups = level_set_sup(f, 1.0 - deltas) / f0
    fit = deltas <= fit_below
    if fit.sum() < 3 or deltas[fit].max() / deltas[fit].min() < 8:
        raise ValueError("insufficient dynamic range for the fit")
    slope, intercept = np.polyfit(np.log(deltas[fit]), np.log(sups[fit]), 1)
    alpha = max(0.0, -float(slope))
    C1 = f0
    C2 = float(np.max(sups * f0 * deltas ** alpha))
    qs = random_ball_points(fresh, quad.seed, 1.0)
    d_q, _, _ = boundary_distance(qs)
    keep = d_q >= deltas.min()
    bound = C1 + C2 * d_q[keep] ** (-alpha)
    excess = koranyi_norm(f(qs[keep])) / bound
    report = ScanReport("growth", params={"map": f.name, "fit_below": fit_below, "fresh": int(keep.sum())})
    for d, v in zip(deltas, sups):
        report.add(delta=float(d), sup_ratio=float(v))
    report.summary = {"slope": float(slope), "constant": float(math.exp(intercept)), "alpha": alpha,
                      "C1": C1, "C2": C2, "max_fresh_ratio": float(excess.max())}
    report.passed = bool(excess.max() <= 1.0 + 1e-3)
    return report
