"""Time steppers for the diffuse Willmore/mean-curvature flows and constraint projections.

Gradient-free model (``w = eps H``)::

    u_{n+1} = u_n - dt [ (lambda1/eps^4) (B + W''(u)/2) + lambda2/eps^2 ] w,
    w       = B u_{n+1} + W'(u_{n+1}) / 2,

which is the fixed point ``(u, w) = phi(u, w)`` of the block map built from
the resolvent ``(Id + (lambda1 dt/eps^4) B^2)^{-1}``.  Plain Picard iteration
of ``phi`` only contracts for small ``dt`` (for mean curvature flow roughly
``dt < eps^2 sigma``), so by default the fixed point is found by an inexact
Newton method whose GMRES inner solves are preconditioned with the Fourier
symbol of the Jacobian at the wells.

Standard model: semi-implicit stabilised spectral scheme, implicit in the
constant-coefficient operator ``lambda1 (-Lap + a/eps^2)^2 + lambda2 (-Lap + a/eps^2)``
with ``a = W_o''(1)/4`` and explicit in the remainder.  Larger ``a`` damps
more but adds a first-order time lag proportional to ``dt a^2 / eps^4``.
"""
from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import spectral
from .energies import energy_report, perimeter_ag
from .exceptions import FixedPointDiverged, ProjectionStalled
from .profile import W_CURVATURE, WO_CURVATURE, potential_table, profile_model

log = logging.getLogger(__name__)

# GMRES relative tolerance per unit fixed-point residual (inexact Newton forcing)
FORCING = 1e-3
LINE_SEARCH_STEPS = 8


def dt_guidance(eps, lambda1_o):
    """Largest time step the experiments use: ``eps^2`` for MCF, ``16 eps^4`` otherwise."""
    return eps ** 2 if lambda1_o == 0 else 16.0 * eps ** 4


@dataclass(frozen=True)
class FlowParams:
    eps: float
    lambda1_o: float
    lambda2_o: float
    dt: float
    fp_tol: float = 1e-9
    fp_max_iters: int = 200
    conserve_volume: bool = False
    conserve_perimeter: bool = False
    sigma: Optional[float] = None
    solver: str = "newton"
    auto_halve: bool = False
    dealias: bool = False

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.lambda1_o < 0 or self.lambda2_o < 0:
            raise ValueError("lambda1_o and lambda2_o must be nonnegative")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.solver not in ("newton", "picard"):
            raise ValueError(f"unknown fixed-point solver {self.solver!r}")
        if self.sigma is None:
            object.__setattr__(self, "sigma", profile_model().sigma)
        if self.dt > dt_guidance(self.eps, self.lambda1_o):
            log.warning("dt = %g exceeds the step-size guidance %g for eps = %g",
                        self.dt, dt_guidance(self.eps, self.lambda1_o), self.eps)

    @property
    def lambda1(self):
        return self.lambda1_o / self.sigma ** 2

    @property
    def lambda2(self):
        return self.lambda2_o / self.sigma

    def with_dt(self, dt):
        return FlowParams(**{**self.__dict__, "dt": dt})


@dataclass
class StepDiagnostics:
    fp_iterations: int = 0
    fp_residual: float = 0.0
    perimeter_projection_time: float = 0.0
    perimeter_projection_sign: int = 0


# --------------------------------------------------------------------------
# gradient-free implicit step
# --------------------------------------------------------------------------

class GradientFreeStepper:
    """Implicit step of the gradient-free flow on a fixed grid."""

    def __init__(self, grid, params):
        if not np.isclose(grid.eps, params.eps, rtol=1e-14):
            raise ValueError("grid.eps and params.eps differ")
        self.grid = grid
        self.params = params
        eps, dt = params.eps, params.dt
        self.c = params.lambda1 * dt / eps ** 4
        self.d = params.lambda2 * dt / eps ** 2
        self.B = spectral.symbol_B(grid)
        self.R = spectral.resolvent_symbol(grid, params.lambda1, dt)
        self.mask = spectral.dealias_symbol(grid) if params.dealias else None
        # Jacobian symbol at the wells, where W'' = 2/3
        b = self.B + 0.5 * W_CURVATURE
        self.precond = 1.0 / (1.0 + (self.c * b + self.d) * b)
        self.table = potential_table("W")

    def _nonlinear(self, u, third=False):
        dw, d2w, d3w = self.table.derivatives(u)
        if self.mask is not None:
            dw, d2w = (spectral.apply_multiplier(a, self.mask) for a in (dw, d2w))
        if third:
            return 0.5 * dw, d2w, d3w
        return 0.5 * dw, d2w

    def phi(self, u, w, u_n):
        """The block fixed-point map; returns the new ``(u, eps H)``."""
        f_half, d2w = self._nonlinear(u)
        e = u_n - (0.5 * self.c * d2w + self.d) * w
        e_hat = spectral.forward(e)
        f_hat = spectral.forward(f_half)
        shape = u.shape
        u_new = spectral.inverse(self.R * (e_hat - self.c * self.B * f_hat), shape)
        w_new = spectral.inverse(self.R * (f_hat + self.B * e_hat), shape)
        return u_new, w_new

    def _residual(self, u, w, u_n):
        u_phi, w_phi = self.phi(u, w, u_n)
        scale = max(np.abs(u).max(), np.abs(w).max(), 1.0)
        res = max(np.abs(u - u_phi).max(), np.abs(w - w_phi).max()) / scale
        return res, u_phi, w_phi

    def _w_of(self, u):
        f_half, _ = self._nonlinear(u)
        return spectral.apply_multiplier(u, self.B) + f_half

    def step(self, u_n, guess=None):
        """Return ``(u_next, H_next, diagnostics)``.

        ``guess`` is the initial iterate for ``u``; ``u_n`` is used if omitted.
        """
        guess = u_n if guess is None else guess
        if self.params.solver == "picard":
            u, w, diag = self._picard(u_n, guess)
        else:
            u, w, diag = self._newton(u_n, guess)
        return u, w / self.params.eps, diag

    def _check(self, res, first, it):
        if not np.isfinite(res) or res > 10.0 * max(first, self.params.fp_tol):
            raise FixedPointDiverged(
                f"fixed-point residual grew from {first:.3e} to {res:.3e} after {it} iterations")

    def _picard(self, u_n, guess):
        p = self.params
        u = guess.copy()
        w = self._w_of(u)
        res, u_phi, w_phi = self._residual(u, w, u_n)
        first, it = res, 1
        while res > p.fp_tol:
            if it >= p.fp_max_iters:
                raise FixedPointDiverged(f"no convergence in {it} Picard iterations (residual {res:.3e})")
            u, w = u_phi, w_phi
            res, u_phi, w_phi = self._residual(u, w, u_n)
            it += 1
            self._check(res, first, it)
        return u, w, StepDiagnostics(fp_iterations=it, fp_residual=res)

    def _newton(self, u_n, guess):
        p = self.params
        shape = u_n.shape
        n = u_n.size
        u = guess.copy()
        w = self._w_of(u)
        res, _, _ = self._residual(u, w, u_n)
        first, it = res, 1
        while res > p.fp_tol:
            if it >= p.fp_max_iters:
                raise FixedPointDiverged(f"no convergence in {it} Newton iterations (residual {res:.3e})")
            f_half, d2w, d3w = self._nonlinear(u, third=True)
            coef = 0.5 * self.c * d2w + self.d
            g = u - u_n + coef * w + self.c * spectral.apply_multiplier(w, self.B)

            def jac(v):
                v = v.reshape(shape)
                dv = spectral.apply_multiplier(v, self.B) + 0.5 * d2w * v
                out = v + coef * dv + self.c * spectral.apply_multiplier(dv, self.B)
                out += 0.5 * self.c * d3w * w * v
                return out.ravel()

            def prec(v):
                return spectral.apply_multiplier(v.reshape(shape), self.precond).ravel()

            A = LinearOperator((n, n), matvec=jac, dtype=float)
            M = LinearOperator((n, n), matvec=prec, dtype=float)
            delta, info = gmres(A, -g.ravel(), rtol=FORCING * min(1.0, res) + 1e-12,
                                atol=0.0, restart=60, maxiter=10, M=M)
            delta = delta.reshape(shape)
            # backtrack when the full Newton step increases the residual
            for _ in range(LINE_SEARCH_STEPS):
                u_try = u + delta
                w_try = self._w_of(u_try)
                res_try, _, _ = self._residual(u_try, w_try, u_n)
                if res_try < res:
                    break
                delta = 0.5 * delta
            u, w, res = u_try, w_try, res_try
            it += 1
            self._check(res, first, it)
        return u, w, StepDiagnostics(fp_iterations=it, fp_residual=res)


@functools.lru_cache(maxsize=16)
def _gradient_free_stepper(grid, params):
    return GradientFreeStepper(grid, params)


MAX_HALVINGS = 6


def step_gradient_free(u_n, grid, params, _depth=0):
    """One implicit step; returns ``(u_next, H_next, StepDiagnostics)``.

    With ``params.auto_halve`` a diverging fixed-point solve is retried as
    two steps of half the size, recursively up to ``MAX_HALVINGS`` times.
    """
    u_n = np.asarray(u_n, dtype=float)
    try:
        return _gradient_free_stepper(grid, params).step(u_n)
    except FixedPointDiverged:
        if not params.auto_halve or _depth >= MAX_HALVINGS:
            raise
    half = params.with_dt(0.5 * params.dt)
    log.info("fixed-point solve diverged; retrying with dt = %g", half.dt)
    u_mid, _, first = step_gradient_free(u_n, grid, half, _depth + 1)
    u_new, h_new, diag = step_gradient_free(u_mid, grid, half, _depth + 1)
    diag.fp_iterations += first.fp_iterations
    return u_new, h_new, diag


# --------------------------------------------------------------------------
# standard (Cahn-Hilliard / De Giorgi) step
# --------------------------------------------------------------------------

class StandardStepper:
    """Stabilised semi-implicit spectral step of the standard diffuse flow."""

    def __init__(self, grid, params, stabilization=0.25 * WO_CURVATURE):
        self.grid = grid
        self.params = params
        eps = params.eps
        self.k2 = spectral.symbol_neg_laplacian(grid)
        shifted = self.k2 + stabilization / eps ** 2
        self.lin = params.lambda1_o * shifted ** 2 + params.lambda2_o * shifted
        self.denom = 1.0 + params.dt * self.lin
        self.mask = spectral.dealias_symbol(grid) if params.dealias else None
        self.table = potential_table("Wo")

    def rhs_hat(self, u, u_hat=None):
        """Fourier coefficients of the right-hand side of ``du/dt``."""
        p = self.params
        eps2 = p.eps ** 2
        u_hat = spectral.forward(u) if u_hat is None else u_hat
        lap = spectral.inverse(-self.k2 * u_hat, u.shape)
        dw, d2w, _ = self.table.derivatives(u)
        dw_hat = spectral.forward(dw)
        mixed_hat = spectral.forward(d2w * (dw / eps2 - lap))
        if self.mask is not None:
            dw_hat = dw_hat * self.mask
            mixed_hat = mixed_hat * self.mask
        k2 = self.k2
        return (-p.lambda1_o * (k2 * k2 * u_hat + k2 * dw_hat / eps2 + mixed_hat / eps2)
                - p.lambda2_o * (k2 * u_hat + dw_hat / eps2))

    def step(self, u_n):
        u_hat = spectral.forward(u_n)
        dt = self.params.dt
        new_hat = (u_hat * (1.0 + dt * self.lin) + dt * self.rhs_hat(u_n, u_hat)) / self.denom
        u = spectral.inverse(new_hat, u_n.shape)
        if not np.all(np.isfinite(u)):
            raise FixedPointDiverged("standard step produced non-finite values")
        return u


@functools.lru_cache(maxsize=16)
def _standard_stepper(grid, params):
    return StandardStepper(grid, params)


def step_standard(u_n, grid, params):
    return _standard_stepper(grid, params).step(np.asarray(u_n, dtype=float))


# --------------------------------------------------------------------------
# constraints
# --------------------------------------------------------------------------

def project_volume(u, target_mean):
    """Replace the zero Fourier mode (the mean) of ``u`` by ``target_mean``."""
    u = np.asarray(u, dtype=float)
    return u + (target_mean - np.mean(u))


PERIMETER_TOL = 1e-7


def project_perimeter(u, c, grid, params, tol=PERIMETER_TOL, max_steps=1000):
    """Move ``u`` along signed diffuse MCF until its perimeter equals ``c``.

    The auxiliary flow ``s eps du/dtau = -H(u) / sigma`` (``s`` the sign of
    ``P(u) - c``) is integrated semi-implicitly with ``dtau = eps^2/4`` until
    the perimeter crosses ``c``; the stopping time inside the last step is
    then found by bisection.  With ``params.conserve_volume`` the update is
    projected onto mean-zero fields so the volume is kept as well.

    Returns the projected field and a :class:`StepDiagnostics` carrying the
    pseudo-time and the sign.
    """
    if not c > 0:
        raise ValueError("target perimeter must be positive")
    u = np.asarray(u, dtype=float)
    p0 = perimeter_ag(u, grid)
    if abs(p0 - c) < tol:
        return u, StepDiagnostics(perimeter_projection_time=0.0, perimeter_projection_sign=0)
    sign = 1 if p0 > c else -1
    eps = grid.eps
    dtau = eps ** 2 / 4.0
    rate = sign / (params.sigma * eps ** 2)
    B = spectral.symbol_B(grid)
    keep_mean = params.conserve_volume
    table = potential_table("W")

    def advance(v, tau):
        dw, _, _ = table.derivatives(v)
        v_hat = spectral.forward(v)
        rhs_hat = v_hat - 0.5 * tau * rate * spectral.forward(dw)
        new_hat = rhs_hat / (1.0 + tau * rate * B)
        if keep_mean:
            new_hat.flat[0] = v_hat.flat[0]
        return spectral.inverse(new_hat, v.shape)

    def gap(v):
        return sign * (perimeter_ag(v, grid) - c)

    v, tau = u, 0.0
    for _ in range(max_steps):
        nxt = advance(v, dtau)
        g = gap(nxt)
        if abs(g) < tol:
            return nxt, StepDiagnostics(perimeter_projection_time=tau + dtau,
                                        perimeter_projection_sign=sign)
        if g < 0:
            break
        v, tau = nxt, tau + dtau
    else:
        raise ProjectionStalled(
            f"perimeter did not reach {c:.9g} within pseudo-time {max_steps * dtau:.3g}")

    lo, hi = 0.0, dtau
    best = nxt
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        best = advance(v, mid)
        g = gap(best)
        if abs(g) < tol:
            break
        if g > 0:
            lo = mid
        else:
            hi = mid
    else:
        raise ProjectionStalled("bisection on the projection time did not reach the tolerance")
    return best, StepDiagnostics(perimeter_projection_time=tau + mid,
                                 perimeter_projection_sign=sign)


# --------------------------------------------------------------------------
# driver
# --------------------------------------------------------------------------

@dataclass
class TrajectoryPoint:
    step: int
    time: float
    report: object
    diagnostics: StepDiagnostics = field(default_factory=StepDiagnostics)


class SimulationError(RuntimeError):
    def __init__(self, step, cause):
        super().__init__(f"step {step}: {type(cause).__name__}: {cause}")
        self.step = step
        self.cause = cause


def run_simulation(u0, grid, params, t_end, model="gradient_free",
                   observers: Iterable[Callable] = (), stride=1):
    """Advance ``u0`` to ``t_end`` and return the list of :class:`TrajectoryPoint`.

    After every step the volume projection (target: the initial mean) and
    then the perimeter projection (target: the initial gradient-free
    perimeter) are applied when enabled.  Every ``stride`` steps, and at the
    final step, the energies are recorded and each observer is called as
    ``observer(point, u)``.
    """
    if t_end < 0:
        raise ValueError("t_end must be nonnegative")
    if model == "gradient_free":
        advance = lambda u: step_gradient_free(u, grid, params)[::2]  # noqa: E731
    elif model == "standard":
        stepper = _standard_stepper(grid, params)
        advance = lambda u: (stepper.step(u), StepDiagnostics())  # noqa: E731
    else:
        raise ValueError(f"unknown model {model!r}")

    u = np.asarray(u0, dtype=float).copy()
    mass0 = float(np.mean(u))
    perim0 = perimeter_ag(u, grid)
    first = TrajectoryPoint(0, 0.0, energy_report(u, grid, 0.0))
    trajectory = [first]
    for obs in observers:
        obs(first, u)

    n_steps = int(np.ceil(t_end / params.dt - 1e-9)) if t_end > 0 else 0
    for n in range(1, n_steps + 1):
        try:
            u, diag = advance(u)
            if params.conserve_volume:
                u = project_volume(u, mass0)
            if params.conserve_perimeter:
                u, pdiag = project_perimeter(u, perim0, grid, params)
                diag.perimeter_projection_time = pdiag.perimeter_projection_time
                diag.perimeter_projection_sign = pdiag.perimeter_projection_sign
        except (FixedPointDiverged, ProjectionStalled) as exc:
            raise SimulationError(n, exc) from exc
        if n % stride == 0 or n == n_steps:
            t = n * params.dt
            point = TrajectoryPoint(n, t, energy_report(u, grid, t), diag)
            trajectory.append(point)
            for obs in observers:
                obs(point, u)
    return trajectory
