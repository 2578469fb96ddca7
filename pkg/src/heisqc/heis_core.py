"""Group law, Korányi gauge and horizontal calculus on the first Heisenberg group.

Points are stored as float arrays whose last axis holds ``(x, y, t)``; every
function broadcasts over leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_STEP = 1e-5


def point(x, y, t) -> np.ndarray:
    return np.stack(np.broadcast_arrays(*(np.asarray(c, dtype=float) for c in (x, y, t))), axis=-1)


def _parts(p):
    p = np.asarray(p, dtype=float)
    return p[..., 0], p[..., 1], p[..., 2]


def group_mul(p, q) -> np.ndarray:
    """Product ``p * q`` with the twisted third coordinate."""
    x, y, t = _parts(p)
    u, v, s = _parts(q)
    return point(x + u, y + v, t + s - 2.0 * x * v + 2.0 * y * u)


def inverse(p) -> np.ndarray:
    return -np.asarray(p, dtype=float)


def koranyi_norm(p) -> np.ndarray:
    x, y, t = _parts(p)
    r2 = x * x + y * y
    return np.sqrt(np.sqrt(r2 * r2 + t * t))


def dist(p, q) -> np.ndarray:
    """Left-invariant Korányi distance ``|q^{-1} p|``."""
    return koranyi_norm(group_mul(inverse(q), p))


def dilate(rho, p) -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("dilation factor must be positive")
    x, y, t = _parts(p)
    return point(rho * x, rho * y, rho * rho * t)


def rotate(theta, p) -> np.ndarray:
    """Rotation about the vertical axis; fixes the t coordinate."""
    x, y, t = _parts(p)
    c, s = np.cos(theta), np.sin(theta)
    return point(c * x - s * y, s * x + c * y, t)


@dataclass(frozen=True)
class HorizontalVector:
    """Coefficients ``a X + b Y`` of a horizontal vector at ``base``."""

    base: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def norm(self) -> np.ndarray:
        return np.hypot(self.a, self.b)

    def cartesian(self) -> np.ndarray:
        x, y, _ = _parts(self.base)
        return point(self.a, self.b, 2.0 * y * self.a - 2.0 * x * self.b)


def horizontal_frame(p) -> tuple[HorizontalVector, HorizontalVector]:
    p = np.asarray(p, dtype=float)
    one = np.ones(p.shape[:-1])
    zero = np.zeros(p.shape[:-1])
    return HorizontalVector(p, one, zero), HorizontalVector(p, zero, one)


@dataclass(frozen=True)
class HorizMatrix:
    """Horizontal derivative ``[[X f1, Y f1], [X f2, Y f2]]`` (trailing 2x2 axes).

    ``contact_residual`` is the larger of the two contact defects
    ``|V f3 - 2 (f2 V f1 - f1 V f2)|`` for ``V`` in ``{X, Y}``.
    ``richardson_gap`` is the max entry change between steps ``h`` and ``h/2``.
    """

    matrix: np.ndarray
    contact_residual: np.ndarray
    richardson_gap: np.ndarray | float = 0.0

    @property
    def det(self) -> np.ndarray:
        m = self.matrix
        return m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]

    @property
    def jacobian(self) -> np.ndarray:
        return self.det ** 2

    @property
    def operator_norm(self) -> np.ndarray:
        return _singular_values(self.matrix)[0]

    @property
    def min_stretch(self) -> np.ndarray:
        return _singular_values(self.matrix)[1]


def _singular_values(m):
    sq = np.sum(m * m, axis=(-2, -1))
    det = m[..., 0, 0] * m[..., 1, 1] - m[..., 0, 1] * m[..., 1, 0]
    disc = np.sqrt(np.maximum(sq * sq - 4.0 * det * det, 0.0))
    big = np.sqrt(0.5 * (sq + disc))
    small = np.where(big > 0, np.abs(det) / np.where(big > 0, big, 1.0), 0.0)
    return big, small


def _as_callable(f):
    return getattr(f, "eval", f)


def _flow_differences(fn, q, h):
    q = np.asarray(q, dtype=float)
    zeros = np.zeros(q.shape[:-1])
    steps = {
        "X": point(zeros + h, zeros, zeros),
        "Y": point(zeros, zeros + h, zeros),
    }
    out = {}
    for key, step in steps.items():
        plus = np.asarray(fn(group_mul(q, step)), dtype=float)
        minus = np.asarray(fn(group_mul(q, -step)), dtype=float)
        out[key] = (plus - minus) / (2.0 * h)
    return out


def _matrix_and_residual(diff, fq):
    xf, yf = diff["X"], diff["Y"]
    m = np.stack(
        [np.stack([xf[..., 0], yf[..., 0]], axis=-1), np.stack([xf[..., 1], yf[..., 1]], axis=-1)],
        axis=-2,
    )
    f1, f2 = fq[..., 0], fq[..., 1]
    res = [np.abs(d[..., 2] - 2.0 * (f2 * d[..., 0] - f1 * d[..., 1])) for d in (xf, yf)]
    return m, np.maximum(res[0], res[1])


def horiz_derivative(f, q, h: float = DEFAULT_STEP, richardson: bool = True) -> HorizMatrix:
    """Central differences of ``f`` along the flows ``q*(±h,0,0)`` and ``q*(0,±h,0)``.

    With ``richardson`` the steps ``h`` and ``h/2`` are combined to cancel the
    leading truncation term and their discrepancy is kept as a diagnostic.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    fn = _as_callable(f)
    q = np.asarray(q, dtype=float)
    fq = np.asarray(fn(q), dtype=float)
    coarse = _flow_differences(fn, q, h)
    if not richardson:
        m, res = _matrix_and_residual(coarse, fq)
        return HorizMatrix(m, res, 0.0)
    fine = _flow_differences(fn, q, h / 2.0)
    combined = {k: (4.0 * fine[k] - coarse[k]) / 3.0 for k in coarse}
    m, res = _matrix_and_residual(combined, fq)
    m_coarse, _ = _matrix_and_residual(coarse, fq)
    gap = np.max(np.abs(m - m_coarse), axis=(-2, -1))
    return HorizMatrix(m, res, gap)


def grad_koranyi_norm(q, h: float = DEFAULT_STEP) -> HorizontalVector:
    """Finite-difference horizontal gradient of the gauge; magnitude ``|z|/|q|``."""
    q = np.asarray(q, dtype=float)
    if np.any(koranyi_norm(q) == 0):
        raise ValueError("gauge gradient is undefined at the origin")
    diff = _flow_differences(lambda p: koranyi_norm(p)[..., None], q, h)
    return HorizontalVector(q, diff["X"][..., 0], diff["Y"][..., 0])
