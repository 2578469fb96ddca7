"""Conformal 4-modulus of ring and radial curve families through their extremal densities.

For the annulus ``a < |q| < b`` the extremal density is
``|z| / (|q|^2 log(b/a))``.  Along a radial curve its value times the
horizontal speed ``1/sqrt(cos alpha)`` is ``1/(s log(b/a))``, so every radial
curve has unit length, and its 4-energy is ``sigma(dB) (log b/a)^{-3}``.
Restricting the density to the cone over a boundary set E gives
``sigma(E) (log 1/r)^{-3}`` for the radial curves from ``dB(0, r)`` to E.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq

from .heis_core import group_mul, koranyi_norm, point
from .radial_polar import radial_coordinates, radial_point, radial_speed
from .report import ScanReport
from .sphere_measures import (HALF_PI, MeasureKind, QuadSpec, SpherePoint, density, phi_rule,
                              smoothed_rule)


@dataclass(frozen=True)
class BoundarySet:
    """Indicator of a set ``E`` of boundary points with optional coordinate breakpoints.

    Breakpoints mark the latitudes and angles where the indicator jumps, so the
    quadrature can split there and integrate the indicator exactly.
    """

    indicator: Callable[[SpherePoint], np.ndarray]
    alpha_breaks: tuple = ()
    phi_breaks: tuple = ()
    name: str = "E"

    def __call__(self, omega: SpherePoint) -> np.ndarray:
        return np.asarray(self.indicator(omega), dtype=float)


def whole_sphere() -> BoundarySet:
    return BoundarySet(lambda w: np.ones(np.shape(w.alpha)), name="sphere")


def phi_band(half_width: float = HALF_PI) -> BoundarySet:
    """``{|phi| < half_width}`` (angles taken modulo 2 pi)."""
    def ind(w):
        ph = np.mod(np.asarray(w.phi, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
        return np.abs(ph) < half_width
    return BoundarySet(ind, phi_breaks=(half_width, 2.0 * math.pi - half_width), name=f"band({half_width:g})")


def polar_cap(alpha0: float, north: bool = True) -> BoundarySet:
    """``{alpha > alpha0}`` (north) or ``{alpha < alpha0}`` (south)."""
    if north:
        ind = lambda w: np.asarray(w.alpha) > alpha0
    else:
        ind = lambda w: np.asarray(w.alpha) < alpha0
    return BoundarySet(ind, alpha_breaks=(alpha0,), name=f"cap({'>' if north else '<'}{alpha0:g})")


def cap_measure(alpha0: float, north: bool = True) -> float:
    """Closed-form ``sigma`` measure of a polar cap (density ``cos^2 alpha``)."""
    def prim(a):
        return 0.5 * a + 0.25 * math.sin(2.0 * a)
    part = prim(HALF_PI) - prim(alpha0) if north else prim(alpha0) - prim(-HALF_PI)
    return 2.0 * math.pi * part


def _piecewise(lo: float, hi: float, breaks, n: int, rule):
    cuts = [lo] + sorted(b for b in breaks if lo < b < hi) + [hi]
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(4, int(round(n * (b - a) / (hi - lo))))
        x, w = rule(a, b, m)
        nodes.append(np.ravel(x))
        weights.append(np.ravel(w))
    return np.concatenate(nodes), np.concatenate(weights)


def _midpoint(a, b, m):
    h = (b - a) / m
    return a + (np.arange(m) + 0.5) * h, np.full(m, h)


def set_grid(E: BoundarySet, quad: QuadSpec):
    """Tensor grid on the sphere aligned with the breakpoints of ``E``."""
    alpha, w_alpha = _piecewise(-HALF_PI, HALF_PI, E.alpha_breaks, quad.n_alpha, smoothed_rule)
    if E.phi_breaks:
        phi, w_phi = _piecewise(0.0, 2.0 * math.pi, E.phi_breaks, quad.n_phi, _midpoint)
    else:
        phi, w_phi = phi_rule(quad.n_phi)
    return alpha, w_alpha, phi, w_phi


def set_measure(E: BoundarySet, quad: QuadSpec, kind: MeasureKind = MeasureKind.Sigma) -> float:
    alpha, wa, phi, wp = set_grid(E, quad)
    A, P = np.meshgrid(alpha, phi, indexing="ij")
    vals = E(SpherePoint(A, P))
    return float(np.sum(vals * (wa * density(kind, alpha))[:, None] * wp[None, :]))


# ---------------------------------------------------------------------------
# Densities


@dataclass(frozen=True)
class DensityField:
    """A nonnegative Borel function on the Heisenberg group with a described support.

    ``support`` holds ``inner`` and ``outer`` radii of the annulus and, for a
    cone density, the boundary set under ``"set"``.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    support: dict = field(default_factory=dict)

    def __call__(self, q) -> np.ndarray:
        return np.asarray(self.eval(np.asarray(q, dtype=float)), dtype=float)

    def scaled(self, c: float) -> "DensityField":
        return DensityField(lambda q: c * self.eval(q), dict(self.support))


def _ring_profile(q, a, b):
    q = np.asarray(q, dtype=float)
    n = koranyi_norm(q)
    z = np.hypot(q[..., 0], q[..., 1])
    inside = (n >= a * (1.0 - 1e-12)) & (n <= b * (1.0 + 1e-12))
    with np.errstate(divide="ignore", invalid="ignore"):
        val = z / (n * n * math.log(b / a))
    return np.where(inside, val, 0.0)


def ring_extremal_density(a: float, b: float) -> DensityField:
    if not 0.0 < a < b:
        raise ValueError("need 0 < a < b")
    return DensityField(lambda q: _ring_profile(q, a, b), {"kind": "annulus", "inner": a, "outer": b})


def cone_extremal_density(E: BoundarySet, r: float) -> DensityField:
    """Extremal density of the radial curves joining ``dB(0, r)`` to ``E``."""
    if not 0.0 < r < 1.0:
        raise ValueError("r must lie in (0, 1)")

    def fn(q):
        _, omega = radial_coordinates(q)
        return _ring_profile(q, r, 1.0) * E(omega)

    return DensityField(fn, {"kind": "cone", "inner": r, "outer": 1.0, "set": E})


def zero_density() -> DensityField:
    return DensityField(lambda q: np.zeros(np.shape(q)[:-1]), {"kind": "annulus", "inner": 0.5, "outer": 1.0})


# ---------------------------------------------------------------------------
# Curves and admissibility


@dataclass(frozen=True)
class Curve:
    """Discretized horizontal curve: samples, horizontal speed and parameter values."""

    points: np.ndarray
    speed: np.ndarray
    params: np.ndarray
    label: str = ""


def radial_curve(omega: SpherePoint, a: float, b: float, n: int = 20001) -> Curve:
    s = np.linspace(a, b, n)
    om = SpherePoint(np.full(n, float(omega.alpha)), np.full(n, float(omega.phi)))
    return Curve(radial_point(s, om), radial_speed(s, om), s, f"radial({float(omega.alpha):.3g},{float(omega.phi):.3g})")


def horizontal_chord(base, theta: float, a: float, b: float, n: int = 20001) -> Curve:
    """Horizontal line ``base * (tau cos theta, tau sin theta, 0)`` between its last exit from
    ``B(0, a)`` and its first exit from ``B(0, b)`` (``base`` must lie inside ``B(0, a)``)."""
    base = np.asarray(base, dtype=float)
    if koranyi_norm(base) >= a:
        raise ValueError("base point must lie inside the inner ball")
    c, s = math.cos(theta), math.sin(theta)

    def at(tau):
        tau = np.asarray(tau, dtype=float)
        return group_mul(base, point(tau * c, tau * s, 0.0 * tau))

    def norm_at(tau):
        return float(koranyi_norm(at(tau)))

    scan = np.linspace(0.0, 4.0 * b, 4001)
    norms = koranyi_norm(at(scan))
    k_out = int(np.argmax(norms >= b))
    tau_out = brentq(lambda x: norm_at(x) - b, scan[k_out - 1], scan[k_out], xtol=1e-15)
    below = np.nonzero(norms[:k_out] < a)[0]
    k_in = int(below[-1])
    tau_in = brentq(lambda x: norm_at(x) - a, scan[k_in], scan[k_in + 1], xtol=1e-15)
    tau = np.linspace(tau_in, tau_out, n)
    return Curve(at(tau), np.ones(n), tau, f"chord({theta:.3g})")


def line_integral(rho: DensityField, curve: Curve) -> float:
    vals = rho(curve.points) * curve.speed
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"density is not finite on curve {curve.label}")
    return float(np.trapezoid(vals, curve.params))


def admissibility_check(rho: DensityField, curves, threshold: float = 1.0 - 1e-6) -> ScanReport:
    report = ScanReport("admissibility", params={"curves": len(curves), "threshold": threshold})
    values = []
    for c in curves:
        values.append(line_integral(rho, c))
        report.add(curve=c.label, integral=values[-1])
    report.summary = {"min_integral": float(min(values)), "max_integral": float(max(values))}
    report.passed = bool(min(values) >= threshold)
    return report


# ---------------------------------------------------------------------------
# Energy


@dataclass(frozen=True)
class EnergyResult:
    value: float
    divergent: bool


def _log_s_rule(a: float, b: float, n: int):
    """Gauss-Legendre in ``log s``: nodes and weights for ``ds`` on ``[a, b]``."""
    x, w = leggauss(n)
    la, lb = math.log(a), math.log(b)
    u = 0.5 * (lb - la) * x + 0.5 * (lb + la)
    s = np.exp(u)
    return s, 0.5 * (lb - la) * w * s


def energy_details(rho: DensityField, quad: QuadSpec | None = None) -> EnergyResult:
    """``int rho^4 dq`` in polar coordinates ``dq = s^3 ds d sigma_0``.

    When the support reaches the origin the radial integrand is tested near
    ``s = 0``; growth of ``s * I(s)`` marks a divergent energy.
    """
    quad = quad or QuadSpec()
    inner = float(rho.support.get("inner", 0.0))
    outer = float(rho.support.get("outer", 1.0))
    E = rho.support.get("set") or whole_sphere()
    alpha, wa, phi, wp = set_grid(E, quad)
    A, P = np.meshgrid(alpha, phi, indexing="ij")
    omega = SpherePoint(A[..., None], P[..., None])
    w_sphere = (wa * density(MeasureKind.Sigma0, alpha))[:, None] * wp[None, :]

    def radial_integrand(s):
        vals = rho(radial_point(s, omega)) ** 4
        if not np.all(np.isfinite(vals)):
            raise ValueError("density is not finite on the polar grid")
        return np.einsum("ij,ijk->k", w_sphere, vals) * s ** 3

    divergent = False
    if inner > 0.0:
        s, ws = _log_s_rule(inner, outer, quad.n_s)
    else:
        probe = np.array([1e-3, 1e-4, 1e-5]) * outer
        tail = radial_integrand(probe) * probe
        divergent = bool(tail[-1] >= tail[0] * 0.5 and tail[-1] > 0)
        s, ws = _log_s_rule(1e-12 * outer, outer, 4 * quad.n_s)
    total = float(np.sum(radial_integrand(s) * ws))
    return EnergyResult(math.inf if divergent else total, divergent)


def energy(rho: DensityField, quad: QuadSpec | None = None) -> float:
    return energy_details(rho, quad).value


def ring_modulus_formula(a: float, b: float) -> float:
    return math.pi ** 2 * math.log(b / a) ** -3


def radial_family_modulus(E: BoundarySet, r: float, quad: QuadSpec | None = None) -> float:
    """4-energy of the cone-restricted extremal density for the curves from ``dB(0, r)`` to ``E``."""
    quad = quad or QuadSpec()
    if set_measure(E, quad) == 0.0:
        raise ValueError("boundary set has zero measure")
    return energy(cone_extremal_density(E, r), quad)


def radial_family_formula(E: BoundarySet, r: float, quad: QuadSpec | None = None, sigma: float | None = None) -> float:
    sigma = set_measure(E, quad or QuadSpec()) if sigma is None else sigma
    return sigma * math.log(1.0 / r) ** -3


def r_scaling(E: BoundarySet, radii=(0.9, 0.8, 0.5, 0.25), quad: QuadSpec | None = None) -> ScanReport:
    """Fitted exponent of the modulus against ``log(1/r)``; exactly -3 for extremal densities."""
    quad = quad or QuadSpec()
    values = np.array([radial_family_modulus(E, r, quad) for r in radii])
    logs = np.log(np.log(1.0 / np.asarray(radii)))
    slope, _ = np.polyfit(logs, np.log(values), 1)
    report = ScanReport("modulus-r-scaling", params={"set": E.name, "radii": list(radii)})
    for r, v in zip(radii, values):
        report.add(r=r, modulus=float(v))
    report.summary = {"exponent": float(slope)}
    return report
