"""Hardy and Bergman-type functionals, nontangential regions and Carleson measures.

Conventions.  ``I_s = int |f(gamma(s, w))|^p dS3(w)`` is the Hardy slice; the
Hardy norm is ``sup_s I_s^{1/p}``.  The nontangential region of aperture
``kappa`` at ``w`` is ``{q : d(q, w) < (1 + kappa) d(q, dB)}`` and its dual
shadow of ``x`` is ``dB cap B(x, (1 + kappa) d(x, dB))``.  Suprema over
continua are approximated on grids and therefore from below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.stats import qmc

from .handles import MapHandle
from .heis_core import (dilate, dist, group_mul, horiz_derivative, inverse, koranyi_norm, point)
from .radial_polar import big_M, boundary_distance, radial_point
from .report import ScanReport
from .sphere_measures import (HALF_PI, MeasureKind, QuadSpec, SphereGrid, SpherePoint, ball_nodes,
                              density, embed, hl_maximal_many, integrate_ball, integrate_sphere,
                              integrate_sphere_focused)

# ---------------------------------------------------------------------------
# Boundary values and Hardy slices


def boundary_values(f: MapHandle, omega: SpherePoint) -> np.ndarray:
    """``f*`` for maps continuous up to the boundary (away from their poles): ``f(embed(w))``."""
    return f(embed(omega))


def _sphere_integral(g, focus, kind: MeasureKind, quad: QuadSpec, r_min: float) -> float:
    if focus is None:
        return integrate_sphere(g, kind, quad)
    return integrate_sphere_focused(g, focus, kind, quad, r_min)


def focus_radius(s: float) -> float:
    """Innermost shell radius for slices at ``s``; floored where gauge distances lose precision."""
    return max(0.25 * (1.0 - s), 1e-7)


def hardy_slice(f: MapHandle, p: float, s: float, quad: QuadSpec | None = None,
                r_min: float | None = None) -> float:
    """``I_s``; focused shells around ``f.focus`` resolve peaks of width about ``1 - s``."""
    quad = quad or QuadSpec()
    if r_min is None:
        r_min = focus_radius(s)

    def g(w):
        return koranyi_norm(f(radial_point(s, w))) ** p

    return _sphere_integral(g, f.focus, MeasureKind.S3, quad, r_min)


def boundary_integral(f: MapHandle, p: float, quad: QuadSpec | None = None, r_min: float = 1e-7) -> float:
    """``int |f*|^p dS3`` with the same focused quadrature as the slices."""
    quad = quad or QuadSpec()
    return _sphere_integral(lambda w: koranyi_norm(boundary_values(f, w)) ** p, f.focus, MeasureKind.S3,
                            quad, r_min)


@dataclass
class HardyProfile:
    p: float
    s_grid: np.ndarray
    values: np.ndarray
    sup: float
    divergence_slope: Optional[float] = None

    @property
    def norm(self) -> float:
        return self.sup ** (1.0 / self.p)


def default_s_grid(n: int = 24, closest: float = 1e-10) -> np.ndarray:
    return np.sort(1.0 - np.geomspace(closest, 0.5, n))


def hardy_norm(f: MapHandle, p: float, s_grid=None, quad: QuadSpec | None = None,
               tail: int = 6, growth_tol: float = 1e-3, slope_floor: float = 1e-6) -> HardyProfile:
    """Profile ``s -> I_s`` with its sup and, if it grows, the log-log slope against ``1 - s``.

    All slices share one focus resolution (the finest needed by the grid) so
    the profile and the boundary integral use the same nodes.  Gauge distances
    below about 1e-7 are not resolved in double precision, so the slope is
    fitted (and growth detected) on the ``tail`` slices closest to the sphere with
    ``1 - s >= slope_floor``.
    """
    quad = quad or QuadSpec()
    s_grid = np.sort(np.asarray(default_s_grid() if s_grid is None else s_grid, dtype=float))
    r_min = focus_radius(s_grid.max())
    values = np.array([hardy_slice(f, p, float(s), quad, r_min) for s in s_grid])
    slope = None
    # growth is judged on the resolved slices only; closer in the values are rounding noise
    usable = np.nonzero(1.0 - s_grid >= slope_floor)[0][-tail:]
    if len(usable) >= 3 and values[usable[-1]] > values[usable[-2]] * (1.0 + growth_tol):
        slope = float(np.polyfit(np.log(1.0 - s_grid[usable]), np.log(values[usable]), 1)[0])
    return HardyProfile(float(p), s_grid, values, float(values.max()), slope)


# ---------------------------------------------------------------------------
# Radial limits


@dataclass(frozen=True)
class RadialLimit:
    value: np.ndarray
    converged: bool
    contraction: float
    differences: np.ndarray


def radial_limit(f: MapHandle, omega: SpherePoint, eps_list=None, factor: float = 0.75,
                 floor: float = 1e-13) -> RadialLimit:
    """``f(gamma(1 - eps, w))`` along halving ``eps`` with a Cauchy diagnostic.

    Convergent when the last three successive differences contract by at most
    ``factor`` each, or when they have fallen below ``floor`` relative to the value.
    Differences are Euclidean: the gauge distance of nearby points carries the
    square root of the rounding error in ``t`` and would stall near 1e-8.
    """
    eps = np.asarray(eps_list if eps_list is not None else 2.0 ** -np.arange(3, 31), dtype=float)
    om = SpherePoint(np.full(len(eps), float(omega.alpha)), np.full(len(eps), float(omega.phi)))
    vals = f(radial_point(1.0 - eps, om))
    diffs = np.linalg.norm(vals[1:] - vals[:-1], axis=-1)
    scale = 1.0 + float(np.linalg.norm(vals[-1]))
    tiny = diffs[-3:] <= floor * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = diffs[-3:] / diffs[-4:-1]
    ratios = np.where(tiny, 0.0, ratios)
    contraction = float(np.max(ratios)) if np.all(np.isfinite(ratios)) else math.inf
    converged = bool(np.all(tiny) or contraction <= factor)
    return RadialLimit(vals[-1], converged, contraction, diffs)


# ---------------------------------------------------------------------------
# Nontangential regions and maximal functions


def in_nt_region(q, omega: SpherePoint, kappa: float) -> np.ndarray:
    d_b, _, _ = boundary_distance(q)
    return dist(q, embed(omega)) < (1.0 + kappa) * d_b


def shadow_contains(x, omega: SpherePoint, kappa: float) -> np.ndarray:
    d_b, _, _ = boundary_distance(x)
    return dist(embed(omega), x) < (1.0 + kappa) * d_b


def _nt_sup(magnitude: Callable, omega: SpherePoint, kappa: float, quad: QuadSpec,
            n_s: int | None = None, n_local: int = 8, closest: float = 1e-7,
            curve_closest: float = 1e-10) -> float:
    n_s = n_s or max(8, quad.n_s // 2)
    gaps = np.geomspace(closest, 0.5, n_s)
    s = 1.0 - gaps
    w = embed(omega)
    radius = np.minimum(2.0 * (1.0 + kappa) * np.sqrt(2.0 * gaps), 2.0)
    alpha, phi, weight = ball_nodes(np.broadcast_to(w, (n_s, 3)), radius, n_local, n_local)
    alpha = np.clip(alpha, -HALF_PI + 1e-12, HALF_PI - 1e-12)
    q = radial_point(s[:, None, None], SpherePoint(alpha, phi))
    keep = (weight > 0) & in_nt_region(q, omega, kappa)
    vals = np.where(keep, magnitude(q), 0.0)
    # the radial curve through omega lies in the region by the choice of kappa, so it
    # needs no membership test and can be followed past the precision floor
    s_curve = 1.0 - np.geomspace(curve_closest, 0.5, n_s)
    on_curve = magnitude(radial_point(s_curve, SpherePoint(np.full(n_s, float(omega.alpha)),
                                                           np.full(n_s, float(omega.phi)))))
    return float(max(vals.max(), on_curve.max()))


def nt_maximal(f: MapHandle, omega: SpherePoint, kappa: float, quad: QuadSpec | None = None, **kw) -> float:
    """Grid lower bound of ``sup |f(q)|`` over the nontangential region at ``omega``."""
    quad = quad or QuadSpec()
    return _nt_sup(lambda q: koranyi_norm(f(q)), omega, kappa, quad, **kw)


def boundary_grid(n_alpha: int = 12, n_phi: int = 12) -> tuple[SpherePoint, np.ndarray]:
    """Coarse boundary grid with ``S3`` quadrature weights."""
    grid = SphereGrid.from_quad(QuadSpec(n_alpha=n_alpha, n_phi=n_phi))
    return grid.mesh(), grid.weights(MeasureKind.S3)


# ---------------------------------------------------------------------------
# Carleson measures


@dataclass
class CarlesonEstimate:
    alpha: float
    cells: list = field(default_factory=list)
    gamma_hat: float = 0.0

    def coarse_gamma(self, n_coarse: int) -> float:
        """Largest ratio over the ``n_coarse`` largest radii."""
        radii = sorted({c["r"] for c in self.cells}, reverse=True)[:n_coarse]
        return max(c["ratio"] for c in self.cells if c["r"] in radii)


def _cell_seed(seed: int, i: int, j: int) -> int:
    return int(np.random.SeedSequence([seed, i, j]).generate_state(1)[0])


def ball_mass(mu_density: Callable, omega: SpherePoint, r: float, samples: int, seed: int) -> float:
    """``mu(B cap B(w, r))`` by scrambled Sobol sampling of ``B(w, r) = w * delta_r(unit ball)``.

    The map ``e -> w * delta_r(e)`` has Jacobian ``r^4``; samples fill the
    bounding box of the unit gauge ball and are restricted to it.
    """
    m = int(2 ** math.ceil(math.log2(max(samples, 2))))
    e = qmc.Sobol(3, scramble=True, seed=seed).random(m) * 2.0 - 1.0
    e = e[koranyi_norm(e) < 1.0]
    q = group_mul(embed(omega), dilate(r, e))
    inside = koranyi_norm(q) < 1.0
    vals = np.zeros(len(q))
    if np.any(inside):
        vals[inside] = mu_density(q[inside])
    if not np.all(np.isfinite(vals)):
        raise ValueError("density is not finite in a Carleson cell")
    return float(r ** 4 * 8.0 * np.sum(vals) / m)


def carleson_constant(mu_density: Callable, alpha: float, scales, centers, quad: QuadSpec | None = None,
                      samples: int | None = None) -> CarlesonEstimate:
    """Ratios ``mu(B cap B(w, r)) / r^{3 alpha}`` over boundary centres and radii."""
    quad = quad or QuadSpec()
    samples = samples or max(256, quad.mc_samples // 100)
    ca = np.atleast_1d(np.asarray(centers.alpha, dtype=float))
    cp = np.broadcast_to(np.asarray(centers.phi, dtype=float), ca.shape)
    est = CarlesonEstimate(float(alpha))
    for i, (a, ph) in enumerate(zip(ca, cp)):
        omega = SpherePoint(float(a), float(ph))
        for j, r in enumerate(scales):
            mass = ball_mass(mu_density, omega, float(r), samples, _cell_seed(quad.seed, i, j))
            est.cells.append({"alpha": float(a), "phi": float(ph), "r": float(r), "mass": mass,
                              "ratio": mass / float(r) ** (3.0 * alpha)})
    est.gamma_hat = max(c["ratio"] for c in est.cells)
    return est


def lebesgue_density(q) -> np.ndarray:
    return np.ones(np.shape(q)[:-1])


def qc_carleson_density(f: MapHandle, p: float, h: float = 1e-5) -> Callable:
    """``|D_H f|^p / |f|^p * d(q, dB)^{p - 1}`` for ``0 < p < 4``."""
    if not 0.0 < p < 4.0:
        raise ValueError("p must lie in (0, 4)")

    def fn(q):
        dh = horiz_derivative(f, q, h).operator_norm
        d_b, _, _ = boundary_distance(q)
        return (dh / koranyi_norm(f(q))) ** p * d_b ** (p - 1.0)

    return fn


def horizontal_gradient(g: Callable, q, h: float = 1e-5) -> np.ndarray:
    """``(X g, Y g)`` of a scalar function by central differences along the flows, with Richardson."""
    q = np.asarray(q, dtype=float)

    def central(step):
        ex = point(step, 0.0, 0.0)
        ey = point(0.0, step, 0.0)
        gx = (g(group_mul(q, ex)) - g(group_mul(q, -ex))) / (2.0 * step)
        gy = (g(group_mul(q, ey)) - g(group_mul(q, -ey))) / (2.0 * step)
        return np.stack([gx, gy], axis=-1)

    return (4.0 * central(h) - central(2.0 * h)) / 3.0


def grad_log_norm_density(f: MapHandle, h: float = 1e-5) -> Callable:
    """``q -> |grad_H log |f(q)||``."""
    def log_norm(q):
        n = koranyi_norm(f(q))
        if np.any(n == 0):
            raise ValueError("|f| vanishes")
        return np.log(n)

    def fn(q):
        return np.linalg.norm(horizontal_gradient(log_norm, q, h), axis=-1)

    return fn


def carleson_stability(est: CarlesonEstimate, factor: float = 2.0) -> tuple[float, bool]:
    """Compare ``gamma_hat`` with its value on the coarse half of the radii."""
    n = len({c["r"] for c in est.cells})
    coarse = est.coarse_gamma(max(1, n // 2))
    return coarse, bool(est.gamma_hat <= factor * coarse)


# ---------------------------------------------------------------------------
# Volume integrals


GAP_FLOOR = 1e-7


def _gap_rule(n: int, closest: float = GAP_FLOOR):
    """Nodes ``s`` and weights for ``ds`` on ``(1 - 1, 1 - closest)``: Gauss-Legendre in ``log(1 - s)``."""
    x, w = leggauss(n)
    lo, hi = math.log(closest), 0.0
    u = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
    gap = np.exp(u)
    return 1.0 - gap, 0.5 * (hi - lo) * w * gap


def volume_integral(f: MapHandle, integrand: Callable, quad: QuadSpec | None = None,
                    n_s: int | None = None, tail_ratio: float = 0.1) -> tuple[float, bool]:
    """``int_B integrand(q, f(q)) dq`` in polar coordinates; returns (value, divergent).

    Radial nodes are graded towards the sphere down to ``1 - s = GAP_FLOOR``
    (gauge distances lose precision beyond it).  With ``F(u) = shell(s) s^3 (1 - s)``
    the integrand in ``u = log(1 - s)``, the integral is flagged divergent (or
    unresolved at this floor) when ``F`` at the floor exceeds ``tail_ratio``
    times its value three decades further in.
    """
    quad = quad or QuadSpec()
    n_s = n_s or quad.n_s
    s, ws = _gap_rule(n_s)
    coarse = quad.scaled(0.5)

    def shell(sk):
        def g(w):
            q = radial_point(sk, w)
            return integrand(q, f(q))
        return _sphere_integral(g, f.focus, MeasureKind.Sigma0, coarse, focus_radius(sk))

    shells = np.array([shell(float(sk)) for sk in s]) * s ** 3
    total = float(np.sum(shells * ws))
    probe = np.array([GAP_FLOOR, 1e3 * GAP_FLOOR])
    F = np.array([shell(1.0 - g_) * (1.0 - g_) ** 3 * g_ for g_ in probe])
    divergent = bool(not np.isfinite(total) or F[0] > tail_ratio * F[1])
    # thin outer shell beyond the floor, by the rectangle rule
    return total + float(F[0]), divergent


def ap_norm(f: MapHandle, p: float, quad: QuadSpec | None = None) -> float:
    """``(int_B |f|^p dq)^{1/p}``; ``inf`` when the volume integral is flagged divergent."""
    value, divergent = volume_integral(f, lambda q, fq: koranyi_norm(fq) ** p, quad)
    return math.inf if divergent else value ** (1.0 / p)


def embedding_check(f: MapHandle, mu_density: Callable, p: float, alpha: float,
                    quad: QuadSpec | None = None) -> tuple[float, float, float]:
    """``lhs = int_B |f|^{alpha p} d mu``, ``rhs = (int |f*|^p dS3)^alpha`` and their ratio."""
    quad = quad or QuadSpec()
    lhs, divergent = volume_integral(f, lambda q, fq: koranyi_norm(fq) ** (alpha * p) * mu_density(q), quad)
    rhs = boundary_integral(f, p, quad) ** alpha
    if divergent:
        lhs = math.inf
    return lhs, rhs, lhs / rhs


# ---------------------------------------------------------------------------
# Maximal-modulus criterion and central smallness


def pretranslated(f: MapHandle) -> MapHandle:
    """``f(0)^{-1} * f`` so that the new map vanishes at the origin."""
    c = inverse(f(np.zeros(3)))
    return MapHandle(f.name + "-centred", lambda q: group_mul(c, f(q)), focus=f.focus)


def max_criterion_check(f: MapHandle, p: float, quad: QuadSpec | None = None, n_r: int = 16) -> ScanReport:
    """``lhs = int |g*|^p dS3`` and ``rhs = int_0^1 (1 - r)^2 M(r, g)^p dr`` for the centred map g."""
    quad = quad or QuadSpec()
    g = pretranslated(f)
    lhs = boundary_integral(g, p, quad)
    x, w = leggauss(n_r)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w
    M = big_M(r, g, quad.scaled(0.5))
    rhs = float(np.sum(wr * (1.0 - r) ** 2 * M ** p))
    report = ScanReport("max-criterion", params={"map": f.name, "p": p, "n_r": n_r})
    for ri, Mi in zip(r, M):
        report.add(r=float(ri), M=float(Mi))
    report.summary = {"lhs": lhs, "rhs": rhs, "C_hat": lhs / rhs}
    report.passed = bool(np.isfinite(lhs) and np.isfinite(rhs) and rhs > 0)
    return report


def central_smallness(f: MapHandle, Ns=(1, 2, 4, 8, 16, 32, 64), quad: QuadSpec | None = None) -> ScanReport:
    """``S3{w : |f*(w)| <= |f(0)| / N}`` for increasing ``N``; must be nonincreasing."""
    quad = quad or QuadSpec()
    f0 = float(koranyi_norm(f(np.zeros(3))))
    grid = SphereGrid.from_quad(quad)
    vals = koranyi_norm(boundary_values(f, grid.mesh()))
    w = grid.weights(MeasureKind.S3)
    report = ScanReport("central-smallness", params={"map": f.name})
    measures = []
    for N in Ns:
        m = float(np.sum(w * (vals <= f0 / N)))
        measures.append(m)
        report.add(N=N, measure=m, rate=math.log(N) ** -0.75 if N > 1 else math.inf)
    report.summary = {"measures": measures}
    report.passed = bool(np.all(np.diff(measures) <= 0))
    return report


# ---------------------------------------------------------------------------
# Boundary inequalities


def fatou_check(f: MapHandle, p: float, quad: QuadSpec | None = None, s_grid=None) -> ScanReport:
    """Slack ``sup_s I_s - int |f*|^p dS3`` (lower bound on the sup, so the test is conservative)."""
    quad = quad or QuadSpec()
    prof = hardy_norm(f, p, s_grid, quad)
    boundary = boundary_integral(f, p, quad, focus_radius(prof.s_grid.max()))
    report = ScanReport("fatou", params={"map": f.name, "p": p})
    for s, v in zip(prof.s_grid, prof.values):
        report.add(s=float(s), I_s=float(v))
    report.summary = {"sup": prof.sup, "boundary": boundary, "slack": prof.sup - boundary}
    return report


def maximal_on_grid(f: MapHandle, kappa: float, quad: QuadSpec | None = None,
                    n_alpha: int = 10, n_phi: int = 8) -> np.ndarray:
    """``nt_maximal`` at the nodes of ``boundary_grid(n_alpha, n_phi)``."""
    quad = quad or QuadSpec()
    mesh, w = boundary_grid(n_alpha, n_phi)
    vals = [nt_maximal(f, SpherePoint(float(a), float(ph)), kappa, quad)
            for a, ph in zip(np.ravel(mesh.alpha), np.ravel(mesh.phi))]
    return np.array(vals).reshape(w.shape)


def pointwise_maximal_check(f: MapHandle, kappa: float, quad: QuadSpec | None = None,
                            n_alpha: int = 10, n_phi: int = 8, tol: float = 1e-6,
                            maximal=None) -> ScanReport:
    """``M(f)(w) >= |f*(w)| - tol`` wherever the radial-limit diagnostic converges."""
    quad = quad or QuadSpec()
    mesh, _ = boundary_grid(n_alpha, n_phi)
    if maximal is None:
        maximal = maximal_on_grid(f, kappa, quad, n_alpha, n_phi)
    report = ScanReport("pointwise-maximal", params={"map": f.name, "kappa": kappa})
    worst = math.inf
    skipped = 0
    for a, ph, M in zip(np.ravel(mesh.alpha), np.ravel(mesh.phi), np.ravel(maximal)):
        lim = radial_limit(f, SpherePoint(float(a), float(ph)))
        star = float(koranyi_norm(lim.value))
        if not lim.converged:
            skipped += 1
        else:
            worst = min(worst, (M - star) / max(1.0, star))
        report.add(alpha=float(a), phi=float(ph), M=float(M), f_star=star, converged=lim.converged,
                   contraction=lim.contraction)
    report.summary = {"min_relative_margin": worst, "skipped": skipped}
    report.passed = bool(worst >= -tol)
    return report


def hl_on_grid(f: MapHandle, ps, n_alpha: int = 10, n_phi: int = 8) -> dict:
    """``HL(|f*|^{p/2})^{2/p}`` at the nodes of ``boundary_grid`` for each ``p`` in ``ps``."""
    mesh, w = boundary_grid(n_alpha, n_phi)
    hl_quad = QuadSpec(n_alpha=16, n_phi=16)
    gs = [lambda v, q=p / 2.0: koranyi_norm(boundary_values(f, v)) ** q for p in ps]
    rows = [hl_maximal_many(gs, SpherePoint(float(a), float(ph)), hl_quad, n_local=8)
            for a, ph in zip(np.ravel(mesh.alpha), np.ravel(mesh.phi))]
    rows = np.array(rows)
    return {p: (rows[:, k] ** (2.0 / p)).reshape(w.shape) for k, p in enumerate(ps)}


def chain_check(f: MapHandle, p: float, kappa: float, quad: QuadSpec | None = None,
                n_alpha: int = 10, n_phi: int = 8, maximal=None, hl=None) -> ScanReport:
    """Grid ``L^p`` norms of ``M(f)``, ``HL(|f*|^{p/2})^2`` and ``|f*|`` with fitted ratios.

    ``C_hat`` is the single constant in ``||M(f)||_p <= C_hat ||f*||_p`` on this grid.
    ``maximal`` and ``hl`` may carry precomputed grid values.
    """
    quad = quad or QuadSpec()
    mesh, w = boundary_grid(n_alpha, n_phi)
    if maximal is None:
        maximal = maximal_on_grid(f, kappa, quad, n_alpha, n_phi)
    if hl is None:
        hl = hl_on_grid(f, [p], n_alpha, n_phi)[p]
    Ms = np.asarray(maximal, dtype=float).reshape(w.shape)
    HLs = np.asarray(hl, dtype=float).reshape(w.shape)
    stars = koranyi_norm(boundary_values(f, mesh))
    norm_M = float(np.sum(w * Ms ** p)) ** (1 / p)
    norm_HL = float(np.sum(w * HLs ** p)) ** (1 / p)
    norm_star = float(np.sum(w * stars ** p)) ** (1 / p)
    report = ScanReport("chain", params={"map": f.name, "p": p, "kappa": kappa, "grid": [n_alpha, n_phi]})
    for k in range(w.size):
        report.add(alpha=float(np.ravel(mesh.alpha)[k]), phi=float(np.ravel(mesh.phi)[k]),
                   M=float(Ms.ravel()[k]), HL=float(HLs.ravel()[k]), f_star=float(stars.ravel()[k]))
    report.summary = {"norm_M": norm_M, "norm_HL": norm_HL, "norm_f_star": norm_star,
                      "C_maximal_to_HL": norm_M / norm_HL, "C_HL_to_boundary": norm_HL / norm_star,
                      "C_hat": norm_M / norm_star}
    return report


def mean_value_check(f: MapHandle, q_exp: float, kappa: float, points, n_local: int = 24) -> ScanReport:
    """``|f(x)|^q / avg_{S(x)} |f*|^q`` over interior points; ``C_hat`` is the largest ratio."""
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    d_b, _, _ = boundary_distance(points)
    g = lambda v: koranyi_norm(boundary_values(f, v)) ** q_exp
    num, mass = integrate_ball(g, points, (1.0 + kappa) * d_b, MeasureKind.S3, n_local, n_local)
    ratio = koranyi_norm(f(points)) ** q_exp / (num / mass)
    report = ScanReport("mean-value", params={"map": f.name, "q": q_exp, "kappa": kappa})
    for k in range(len(points)):
        report.add(x=float(points[k, 0]), y=float(points[k, 1]), t=float(points[k, 2]), ratio=float(ratio[k]))
    report.summary = {"C_hat": float(ratio.max())}
    return report


def metric_carleson_check(tests: dict, mu_density: Callable, p: float, alpha: float, kappa: float,
                          quad: QuadSpec | None = None, n_alpha: int = 10, n_phi: int = 8) -> ScanReport:
    """``int_B h^{alpha p} d mu / (int (N_kappa h)^p dS3)^alpha`` for scalar test functions h."""
    quad = quad or QuadSpec()
    mesh, w = boundary_grid(n_alpha, n_phi)
    report = ScanReport("metric-carleson", params={"p": p, "alpha": alpha, "kappa": kappa})
    ratios = []
    ident = MapHandle("identity", lambda q: np.asarray(q, dtype=float))
    for name, h in tests.items():
        lhs, _ = volume_integral(ident, lambda q, fq, h=h: h(q) ** (alpha * p) * mu_density(q), quad)
        nt = np.array([_nt_sup(h, SpherePoint(float(a), float(ph)), kappa, quad)
                       for a, ph in zip(np.ravel(mesh.alpha), np.ravel(mesh.phi))]).reshape(w.shape)
        rhs = float(np.sum(w * nt ** p)) ** alpha
        ratios.append(lhs / rhs)
        report.add(test=name, lhs=lhs, rhs=rhs, ratio=ratios[-1])
    report.summary = {"C_hat": float(max(ratios))}
    return report


def singular_boundary_integral(r: float, exponent: float, omega0: SpherePoint, quad: QuadSpec | None = None) -> float:
    """``int d(w, a)^{-exponent} dS3(w)`` for the exterior pole ``a = delta_{1+r}(embed(omega0))``."""
    quad = quad or QuadSpec()
    a = dilate(1.0 + r, embed(omega0))
    g = lambda w: dist(embed(w), a) ** (-exponent)
    return integrate_sphere_focused(g, omega0, MeasureKind.S3, quad, 0.25 * r)


def necessity_slope(exponent: float, radii=None, omega0: SpherePoint | None = None,
                    quad: QuadSpec | None = None) -> ScanReport:
    """Log-log slope of the singular boundary integral against ``r = d(a, dB)``; expected ``3 - exponent``."""
    quad = quad or QuadSpec()
    omega0 = omega0 or SpherePoint(0.0, 0.0)
    radii = np.asarray(radii if radii is not None else 2.0 ** -np.arange(3, 8), dtype=float)
    a_pts = dilate(1.0 + radii, np.broadcast_to(embed(omega0), (len(radii), 3)))
    gaps, _, _ = boundary_distance(a_pts)
    values = np.array([singular_boundary_integral(float(r), exponent, omega0, quad) for r in radii])
    slope = float(np.polyfit(np.log(gaps), np.log(values), 1)[0])
    report = ScanReport("necessity-slope", params={"exponent": exponent, "alpha0": float(omega0.alpha)})
    for r, g_, v in zip(radii, gaps, values):
        report.add(r=float(r), gap=float(g_), integral=float(v))
    report.summary = {"slope": slope, "expected": 3.0 - exponent, "error": abs(slope - (3.0 - exponent))}
    return report
