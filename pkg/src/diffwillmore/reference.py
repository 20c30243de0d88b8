"""Radius law of a sphere under the sharp-interface Willmore/mean-curvature flow.

For a sphere of radius ``r`` in ``R^n`` the mean curvature is ``(n-1)/r``, the
squared second fundamental form is ``(n-1)/r^2`` and the surface Laplacian of
``H`` vanishes, so the normal velocity reduces to an ODE for ``r``::

    dr/dt = lambda1_o [(n-1)^2 - (n-1)^3/2] / r^3 - lambda2_o (n-1) / r

Shrinking corresponds to ``dr/dt < 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import RadiusCollapse


@dataclass(frozen=True)
class RadiusState:
    r: float
    n: int = 2
    t: float = 0.0

    def __post_init__(self):
        if self.n not in (2, 3):
            raise ValueError(f"ambient dimension must be 2 or 3, got {self.n}")
        if not self.r > 0:
            raise ValueError(f"radius must be positive, got {self.r}")


@dataclass(frozen=True)
class RadiusCurve:
    """Samples ``(t, r)`` of an integrated radius; ``halted`` marks an early stop."""

    t: np.ndarray
    r: np.ndarray
    halted: bool = False

    def at(self, t):
        """Linear interpolation of the sampled radius."""
        return np.interp(t, self.t, self.r)


def _rate(r, n, lambda1_o, lambda2_o):
    k = n - 1
    return lambda1_o * (k ** 2 - 0.5 * k ** 3) / r ** 3 - lambda2_o * k / r


def radius_rhs(s, lambda1_o, lambda2_o):
    """``dr/dt`` for the sphere in ``s``."""
    return _rate(s.r, s.n, lambda1_o, lambda2_o)


def stationary_radius(lambda1_o, lambda2_o, n=2):
    """Radius where ``dr/dt = 0``, or ``None`` if there is none."""
    k = n - 1
    a = lambda1_o * (k ** 2 - 0.5 * k ** 3)
    if lambda2_o <= 0 or a <= 0:
        return None
    return float(np.sqrt(a / (lambda2_o * k)))


def integrate_radius(s0, lambda1_o, lambda2_o, t_end, dt, min_radius=0.0):
    """Classical RK4 from ``s0`` to ``t_end`` with step ``dt``.

    Every step is sampled.  The last step is shortened to land on ``t_end``.
    If the radius drops below ``min_radius`` the integration stops early and
    the returned curve has ``halted=True``.  A stage that would make the
    radius nonpositive raises :class:`RadiusCollapse`.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if t_end < s0.t:
        raise ValueError("t_end precedes the initial time")
    n = s0.n

    def f(r):
        if not r > 0:
            raise RadiusCollapse(f"radius reached {r:.3e} near t = {t:.6g}")
        return _rate(r, n, lambda1_o, lambda2_o)

    t, r = s0.t, s0.r
    ts, rs = [t], [r]
    n_steps = int(np.ceil((t_end - s0.t) / dt - 1e-12))
    for i in range(n_steps):
        h = min(dt, t_end - t)
        k1 = f(r)
        k2 = f(r + 0.5 * h * k1)
        k3 = f(r + 0.5 * h * k2)
        k4 = f(r + h * k3)
        r_new = r + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not r_new > 0:
            raise RadiusCollapse(f"radius would cross zero in the step from t = {t:.6g}")
        t = s0.t + (i + 1) * dt if i + 1 < n_steps else t_end
        r = r_new
        ts.append(t)
        rs.append(r)
        if r < min_radius:
            return RadiusCurve(np.array(ts), np.array(rs), halted=True)
    return RadiusCurve(np.array(ts), np.array(rs))
