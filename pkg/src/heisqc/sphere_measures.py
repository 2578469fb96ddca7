"""The Korányi unit sphere: parametrization, boundary measures and quadrature.

The sphere minus its two characteristic points is parametrized by
``(alpha, phi) -> (sqrt(cos alpha) e^{i phi}, sin alpha)``.  Three measures are
used, all with densities against ``d alpha d phi``: ``Sigma0`` (1),
``Sigma`` (cos^2 alpha) and ``S3`` (sqrt(cos alpha)), the last one being the
spherical Hausdorff measure up to normalization.

Metric balls on the sphere are handled exactly in the phi direction: for a
fixed latitude the set of ``phi`` within Korányi distance ``R`` of a point is
a single arc whose centre and half-width have closed forms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .heis_core import koranyi_norm, point
from .report import ScanReport

HALF_PI = 0.5 * math.pi
SPHERE_DIAMETER = 2.0


@dataclass(frozen=True)
class SpherePoint:
    """Boundary coordinates; ``alpha`` and ``phi`` may be arrays of equal shape."""

    alpha: np.ndarray | float
    phi: np.ndarray | float

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if np.any(np.abs(a) >= HALF_PI):
            raise ValueError("alpha must lie in the open interval (-pi/2, pi/2)")


class MeasureKind(enum.Enum):
    Sigma0 = "Sigma0"
    Sigma = "Sigma"
    S3 = "S3"


@dataclass(frozen=True)
class QuadSpec:
    """Resolution bundle shared by quadratures, scans and Monte Carlo runs."""

    n_alpha: int = 160
    n_phi: int = 64
    n_s: int = 48
    mc_samples: int = 200_000
    seed: int = 20240601
    rel_tol: float = 1e-3

    def __post_init__(self):
        for name in ("n_alpha", "n_phi", "n_s", "mc_samples"):
            if int(getattr(self, name)) < 2:
                raise ValueError(f"{name} must be at least 2")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")

    def doubled(self) -> "QuadSpec":
        return replace(self, n_alpha=2 * self.n_alpha, n_phi=2 * self.n_phi, n_s=2 * self.n_s)

    def scaled(self, factor: float) -> "QuadSpec":
        return replace(self, n_alpha=max(2, int(round(self.n_alpha * factor))),
                       n_phi=max(2, int(round(self.n_phi * factor))),
                       n_s=max(2, int(round(self.n_s * factor))))


def embed(omega: SpherePoint) -> np.ndarray:
    a = np.asarray(omega.alpha, dtype=float)
    f = np.asarray(omega.phi, dtype=float)
    r = np.sqrt(np.cos(a))
    return point(r * np.cos(f), r * np.sin(f), np.sin(a))


def project(p, tol: float = 1e-9) -> SpherePoint:
    p = np.asarray(p, dtype=float)
    if np.any(np.abs(koranyi_norm(p) - 1.0) >= tol):
        raise ValueError("point is not on the unit sphere")
    r2 = p[..., 0] ** 2 + p[..., 1] ** 2
    if np.any(r2 == 0):
        raise ValueError("characteristic point has no (alpha, phi) coordinates")
    alpha = np.arctan2(p[..., 2], r2)
    phi = np.mod(np.arctan2(p[..., 1], p[..., 0]), 2.0 * math.pi)
    return SpherePoint(alpha, phi)


def density(kind: MeasureKind, alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float)
    if np.any(np.abs(a) > HALF_PI):
        raise ValueError("alpha out of range")
    c = np.clip(np.cos(a), 0.0, None)
    if kind is MeasureKind.Sigma0:
        return np.ones_like(c)
    if kind is MeasureKind.Sigma:
        return c * c
    if kind is MeasureKind.S3:
        return np.sqrt(c)
    raise ValueError(f"unknown measure {kind!r}")


def area_form_product(alpha, phi) -> np.ndarray:
    """``|C n| * |Phi_alpha x Phi_phi|`` from Cartesian derivatives of the parametrization.

    ``C n`` is the horizontal part of the Euclidean unit normal of the gauge
    sphere; the product is the ``S3`` density and should equal ``sqrt(cos alpha)``.
    """
    alpha, phi = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(phi, dtype=float))
    p = embed(SpherePoint(alpha, phi))
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    r2 = x * x + y * y
    grad = np.stack([4.0 * r2 * x, 4.0 * r2 * y, 2.0 * t], axis=-1)
    horiz = np.stack([grad[..., 0] + 2.0 * y * grad[..., 2], grad[..., 1] - 2.0 * x * grad[..., 2]], axis=-1)
    normal_part = np.linalg.norm(horiz, axis=-1) / np.linalg.norm(grad, axis=-1)
    root = np.sqrt(np.cos(alpha))
    d_alpha = np.stack([-np.sin(alpha) / (2.0 * root) * np.cos(phi), -np.sin(alpha) / (2.0 * root) * np.sin(phi),
                        np.cos(alpha)], axis=-1)
    d_phi = np.stack([-root * np.sin(phi), root * np.cos(phi), np.zeros_like(alpha)], axis=-1)
    area = np.linalg.norm(np.cross(d_alpha, d_phi), axis=-1)
    return normal_part * area


# Smoothing map v -> (1 + P(v))/2 on (-1, 1) with P' proportional to (1 - v^2)^5.
# Midpoint nodes in v give an open rule whose error for sqrt-type endpoint
# behaviour in alpha decays like the sixth power of the step.
_SMOOTH_NORM = 693.0 / 256.0


def _smooth_map(v):
    v2 = v * v
    poly = v * (1 - 5 * v2 / 3 + 2 * v2 ** 2 - 10 * v2 ** 3 / 7 + 5 * v2 ** 4 / 9 - v2 ** 5 / 11)
    dpoly = (1 - v2) ** 5
    return _SMOOTH_NORM * poly, _SMOOTH_NORM * dpoly


def smoothed_rule(lo, hi, n: int):
    """Open midpoint rule on ``[lo, hi]`` after the endpoint-smoothing substitution.

    ``lo`` and ``hi`` may be arrays; nodes and weights get a trailing axis of
    length ``n``.
    """
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    v = -1.0 + (np.arange(n) + 0.5) * (2.0 / n)
    pv, dpv = _smooth_map(v)
    half = 0.5 * (hi - lo)
    nodes = lo + half * (1.0 + pv)
    weights = half * dpv * (2.0 / n)
    return nodes, weights


def alpha_rule(n: int):
    nodes, weights = smoothed_rule(-HALF_PI, HALF_PI, n)
    return nodes[..., :], weights


def phi_rule(n: int):
    nodes = (np.arange(n) + 0.5) * (2.0 * math.pi / n)
    return nodes, np.full(n, 2.0 * math.pi / n)


@dataclass(frozen=True)
class SphereGrid:
    alpha: np.ndarray
    phi: np.ndarray
    w_alpha: np.ndarray
    w_phi: np.ndarray

    @classmethod
    def from_quad(cls, quad: QuadSpec) -> "SphereGrid":
        a, wa = alpha_rule(quad.n_alpha)
        f, wf = phi_rule(quad.n_phi)
        return cls(a, f, wa, wf)

    def mesh(self) -> SpherePoint:
        a, f = np.meshgrid(self.alpha, self.phi, indexing="ij")
        return SpherePoint(a, f)

    def weights(self, kind: MeasureKind) -> np.ndarray:
        return (self.w_alpha * density(kind, self.alpha))[:, None] * self.w_phi[None, :]


def integrate_sphere(g, kind: MeasureKind, quad: QuadSpec) -> float:
    """Tensor-product quadrature of ``g(SpherePoint)`` against the chosen measure."""
    grid = SphereGrid.from_quad(quad)
    values = np.broadcast_to(np.asarray(g(grid.mesh()), dtype=float), (len(grid.alpha), len(grid.phi)))
    if not np.all(np.isfinite(values)):
        raise ValueError("integrand is not finite on the quadrature grid")
    return float(np.sum(values * grid.weights(kind)))


def total_measure(kind: MeasureKind, quad: QuadSpec) -> float:
    return integrate_sphere(lambda w: 1.0, kind, quad)


# ---------------------------------------------------------------------------
# Metric balls on the sphere


def _center_data(center):
    """Return (|z|^2, t, arg z) for a SpherePoint or a Cartesian point."""
    if isinstance(center, SpherePoint):
        a = np.asarray(center.alpha, dtype=float)
        return np.cos(a), np.sin(a), np.asarray(center.phi, dtype=float)
    p = np.asarray(center, dtype=float)
    r2 = p[..., 0] ** 2 + p[..., 1] ** 2
    return r2, p[..., 2], np.arctan2(p[..., 1], p[..., 0])


def _latitude_terms(r2c, tc, alpha):
    ca = np.clip(np.cos(alpha), 0.0, None)
    a = r2c + ca
    b = 2.0 * np.sqrt(r2c * ca)
    c = tc - np.sin(alpha)
    root = np.hypot(a, c)
    gap = ((r2c - ca) ** 2 + c * c) / (root + b)
    return b, root, gap, np.arctan2(c, a)


def circle_min_dist(r2c, tc, alpha):
    """Smallest distance from the point (|z|^2 = r2c, t = tc) to the latitude circle ``alpha``."""
    _, _, gap, _ = _latitude_terms(r2c, tc, alpha)
    return np.sqrt(gap)


def latitude_arc(center, radius, alpha):
    """Arc of ``phi`` at latitude ``alpha`` inside the Korányi ball ``B(center, radius)``.

    Returns ``(phi_mid, half_width)``; the arc is ``|phi - phi_mid| < half_width``
    (modulo 2 pi), empty when ``half_width == 0`` and the full circle when it is pi.
    """
    r2c, tc, phic = _center_data(center)
    return _arc(r2c, tc, phic, radius, alpha)


def _arc(r2c, tc, phic, radius, alpha):
    b, root, gap, psi0 = _latitude_terms(r2c, tc, alpha)
    r4 = np.asarray(radius, dtype=float) ** 4
    denom = 2.0 * b * root
    with np.errstate(divide="ignore", invalid="ignore"):
        m = (r4 - gap * gap) / denom
    inside_all = gap * gap < r4
    m = np.where(denom > 0, m, np.where(inside_all, 4.0, -1.0))
    half = np.where(m <= 0, 0.0, np.where(m >= 2, math.pi, 2.0 * np.arcsin(np.sqrt(np.clip(m, 0, 2) / 2.0))))
    return phic + psi0, half


def _support(r2c, tc, radius, n_pre: int = 129, iters: int = 60):
    """Latitude interval where the ball meets the sphere, located by bracketing then bisection."""
    r2c, tc, radius = np.broadcast_arrays(np.asarray(r2c, float), np.asarray(tc, float), np.asarray(radius, float))
    reach = radius * radius + 2.0 * radius * np.sqrt(r2c)
    lo0 = np.arcsin(np.clip(tc - reach, -1.0, 1.0))
    hi0 = np.arcsin(np.clip(tc + reach, -1.0, 1.0))
    grid = lo0[..., None] + (hi0 - lo0)[..., None] * np.linspace(0.0, 1.0, n_pre)
    r2 = radius * radius
    inside = circle_min_dist(r2c[..., None], tc[..., None], grid) ** 2 < r2[..., None]
    any_in = inside.any(axis=-1)
    first = np.argmax(inside, axis=-1)
    last = n_pre - 1 - np.argmax(inside[..., ::-1], axis=-1)

    def edge(inner_idx, step):
        outer_idx = np.clip(inner_idx + step, 0, n_pre - 1)
        x_in = np.take_along_axis(grid, inner_idx[..., None], -1)[..., 0]
        x_out = np.take_along_axis(grid, outer_idx[..., None], -1)[..., 0]
        for _ in range(iters):
            mid = 0.5 * (x_in + x_out)
            g = circle_min_dist(r2c, tc, mid) ** 2 < r2
            x_in = np.where(g, mid, x_in)
            x_out = np.where(g, x_out, mid)
            if np.all(np.abs(x_out - x_in) <= 4e-16):
                break
        return np.where(outer_idx == inner_idx, x_in, x_out)

    lo = np.where(any_in, edge(first, -1), lo0)
    hi = np.where(any_in, edge(last, 1), lo0)
    return lo, hi, any_in


def ball_nodes(center, radius, n_alpha: int, n_phi: int, inner_radius=None):
    """Quadrature nodes for ``(B(center, radius) minus B(center, inner_radius))`` on the sphere.

    ``center`` may hold many points (batched).  Returns ``(alpha, phi, weight)``
    arrays of shape ``batch + (n_alpha, 2 * n_phi)``; weights are against
    ``d alpha d phi`` (multiply by a density for a specific measure).
    """
    r2c, tc, phic = _center_data(center)
    r2c, tc, phic = np.broadcast_arrays(np.asarray(r2c, float), np.asarray(tc, float), np.asarray(phic, float))
    radius = np.broadcast_to(np.asarray(radius, float), r2c.shape)
    lo, hi, nonempty = _support(r2c, tc, radius)
    a_nodes, a_w = smoothed_rule(lo, hi, n_alpha)
    a_w = np.where(nonempty[..., None], a_w, 0.0)
    mid, outer = _arc(r2c[..., None], tc[..., None], phic[..., None], radius[..., None], a_nodes)
    if inner_radius is None:
        inner = np.zeros_like(outer)
    else:
        inner_r = np.broadcast_to(np.asarray(inner_radius, float), r2c.shape)[..., None]
        _, inner = _arc(r2c[..., None], tc[..., None], phic[..., None], inner_r, a_nodes)
        inner = np.minimum(inner, outer)
    u = (np.arange(n_phi) + 0.5) / n_phi
    span = (outer - inner)[..., None]
    offsets = inner[..., None] + span * u
    phi = np.concatenate([mid[..., None] - offsets, mid[..., None] + offsets], axis=-1)
    w_phi = np.broadcast_to(span / n_phi, phi.shape[:-1] + (n_phi,))
    w_phi = np.concatenate([w_phi, w_phi], axis=-1)
    alpha = np.broadcast_to(a_nodes[..., None], phi.shape)
    weight = a_w[..., None] * w_phi
    return alpha, phi, weight


def integrate_ball(g, center, radius, kind: MeasureKind, n_alpha: int = 64, n_phi: int = 32,
                   inner_radius=None):
    """Integral of ``g`` over a ball (or shell) of the sphere together with its measure."""
    alpha, phi, w = ball_nodes(center, radius, n_alpha, n_phi, inner_radius)
    w = w * density(kind, alpha)
    mass = np.sum(w, axis=(-2, -1))
    if g is None:
        return mass, mass
    values = np.broadcast_to(np.asarray(g(SpherePoint(alpha, phi)), dtype=float), w.shape)
    if not np.all(np.isfinite(values[w > 0])):
        raise ValueError("integrand is not finite on the ball nodes")
    return np.sum(np.where(w > 0, values, 0.0) * w, axis=(-2, -1)), mass


def sphere_ball_measure(omega, r: float, kind: MeasureKind, quad: QuadSpec) -> float:
    """Measure of ``B(omega, r)`` intersected with the sphere (membership by Korányi distance)."""
    if r <= 0:
        return 0.0
    radius = min(float(r), SPHERE_DIAMETER + 0.01)
    _, mass = integrate_ball(None, omega, radius, kind, quad.n_alpha, quad.n_phi)
    return float(mass)


def integrate_sphere_focused(g, focus, kind: MeasureKind, quad: QuadSpec, r_min: float,
                             growth: float = 2.0) -> float:
    """Integral over the whole sphere using concentric shells around ``focus``.

    The innermost ball has radius ``r_min``; radii grow geometrically until the
    ball covers the sphere.  Intended for integrands that peak at ``focus``.
    """
    radii = [r_min]
    while radii[-1] <= SPHERE_DIAMETER:
        radii.append(radii[-1] * growth)
    n_a, n_p = max(8, quad.n_alpha // 4), max(8, quad.n_phi // 2)
    total, _ = integrate_ball(g, focus, radii[0], kind, n_a, n_p)
    for inner, outer in zip(radii[:-1], radii[1:]):
        part, _ = integrate_ball(g, focus, outer, kind, n_a, n_p, inner_radius=inner)
        total = total + part
    return float(total)


# ---------------------------------------------------------------------------
# Hardy-Littlewood maximal operator and regularity scan


def hl_maximal(g, omega: SpherePoint, quad: QuadSpec, radii=None, n_local: int = 16) -> float:
    """Non-centred maximal average of ``g`` at ``omega`` (an approximation from below).

    Candidate balls have dyadic radii and centres on the sphere grid of
    ``quad`` (plus ``omega`` itself).  Averages are taken against ``S3``.
    """
    return float(hl_maximal_many([g], omega, quad, radii, n_local)[0])


def hl_maximal_many(gs, omega: SpherePoint, quad: QuadSpec, radii=None, n_local: int = 16) -> np.ndarray:
    """``hl_maximal`` for several functions sharing the same candidate balls."""
    from .heis_core import dist

    if radii is None:
        radii = [2.0 ** -k for k in range(1, 8)]
    grid = SphereGrid.from_quad(quad)
    mesh = grid.mesh()
    ca = np.concatenate([np.ravel(mesh.alpha), [float(omega.alpha)]])
    cf = np.concatenate([np.ravel(mesh.phi), [float(omega.phi)]])
    centers = embed(SpherePoint(ca, cf))
    gaps = dist(centers, embed(omega))
    best = np.zeros(len(gs))
    for r in radii:
        chosen = gaps < r
        if not np.any(chosen):
            continue
        sel = SpherePoint(ca[chosen], cf[chosen])
        alpha, phi, w = ball_nodes(sel, r, n_local, n_local)
        w = w * density(MeasureKind.S3, alpha)
        mass = np.sum(w, axis=(-2, -1))
        ok = mass > 0
        if not np.any(ok):
            continue
        nodes = SpherePoint(alpha, phi)
        for k, g in enumerate(gs):
            values = np.broadcast_to(np.asarray(g(nodes), dtype=float), w.shape)
            if not np.all(np.isfinite(values[w > 0])):
                raise ValueError("integrand is not finite on the ball nodes")
            num = np.sum(np.where(w > 0, values, 0.0) * w, axis=(-2, -1))
            best[k] = max(best[k], float(np.max(num[ok] / mass[ok])))
    return best


def regularity_scan(quad: QuadSpec, alphas=None, radii=None) -> ScanReport:
    """Ratios ``S3(B(p, r) on the sphere) / r^3`` over latitudes and dyadic radii.

    By rotation invariance only ``phi = 0`` is scanned.  The bracket constant
    is ``C = max(max ratio, 1 / min ratio)``.
    """
    if alphas is None:
        edge = HALF_PI - np.array([0.001, 0.005, 0.01])
        inner = np.linspace(-HALF_PI + 0.02, HALF_PI - 0.02, max(5, quad.n_alpha // 8))
        alphas = np.unique(np.concatenate([-edge, inner, edge]))
    if radii is None:
        radii = [2.0 ** -k for k in range(1, 11)]
    report = ScanReport("regularity", params={"n_alpha": quad.n_alpha, "n_phi": quad.n_phi})
    ratios = []
    for a in alphas:
        omega = SpherePoint(float(a), 0.0)
        for r in radii:
            value = sphere_ball_measure(omega, r, MeasureKind.S3, quad)
            ratio = value / r ** 3
            ratios.append(ratio)
            report.add(alpha=float(a), phi=0.0, r=float(r), value=value, ratio=ratio)
    ratios = np.array(ratios)
    report.summary = {"ratio_min": float(ratios.min()), "ratio_max": float(ratios.max()),
                      "C": float(max(ratios.max(), 1.0 / ratios.min()))}
    return report
