"""Named maps of the Heisenberg group used throughout the checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class MapHandle:
    """A vectorized map ``Point -> Point`` plus what is known about it.

    ``beta`` marks gauge-sphere stretching (``|f(q)| = |q|^beta``),
    ``claimed_conformal`` marks maps whose distortion should be one, and
    ``focus`` optionally names a boundary point near which ``|f|`` peaks
    (quadratures refine around it).
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray]
    analytic_dh: Optional[Callable[[np.ndarray], np.ndarray]] = None
    beta: Optional[float] = None
    claimed_conformal: bool = False
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    focus: Optional[object] = None
    meta: dict = field(default_factory=dict)

    def __call__(self, q):
        return self.eval(np.asarray(q, dtype=float))
