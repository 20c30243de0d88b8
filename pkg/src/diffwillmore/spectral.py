"""Periodic grids on the unit torus and Fourier multipliers.

Fields are plain ``numpy`` arrays of shape ``(m,) * dim`` holding samples at
``x_j = -1/2 + j/m`` along every axis.  Symbols are stored either in the full
FFT layout (same shape as the field) or in the half layout of ``rfftn``
(last axis ``m//2 + 1``); the half layout is the fast path and is real-valued
by construction.  The Nyquist index is ``-m/2`` so even symbols take the same
value on the aliased pair.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .exceptions import NonRealOutput

TWO_PI_SQ = 4.0 * np.pi ** 2


@dataclass(frozen=True)
class TorusGrid:
    """Uniform grid with ``m`` samples per axis on ``[-1/2, 1/2)^dim``."""

    dim: int
    m: int
    eps: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.m < 2 or self.m & (self.m - 1):
            raise ValueError(f"m must be a power of two, got {self.m}")
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")

    @property
    def shape(self):
        return (self.m,) * self.dim

    @property
    def h(self):
        return 1.0 / self.m

    @cached_property
    def nodes(self):
        return -0.5 + np.arange(self.m) / self.m

    @cached_property
    def coords(self):
        """Coordinate arrays, one per axis, each of the field shape."""
        return np.meshgrid(*([self.nodes] * self.dim), indexing="ij")

    @cached_property
    def wavenumbers(self):
        """Integer wavenumbers ``{0, .., m/2-1, -m/2, .., -1}`` in FFT order."""
        return np.fft.fftfreq(self.m, d=1.0 / self.m).round().astype(int)

    @cached_property
    def ksq(self):
        """``|k|^2`` in the full layout."""
        k2 = self.wavenumbers.astype(float) ** 2
        return sum(np.meshgrid(*([k2] * self.dim), indexing="ij", sparse=True))

    @cached_property
    def ksq_half(self):
        """``|k|^2`` in the ``rfftn`` layout."""
        k2 = self.wavenumbers.astype(float) ** 2
        # rfft keeps 0..m/2 on the last axis; the Nyquist value is the same
        last = np.arange(self.m // 2 + 1, dtype=float) ** 2
        axes = [k2] * (self.dim - 1) + [last]
        return sum(np.meshgrid(*axes, indexing="ij", sparse=True))

    def plane_wave(self, k):
        """Real part of ``exp(2 pi i k.x)`` sampled on the grid."""
        phase = sum(2.0 * np.pi * kj * xj for kj, xj in zip(k, self.coords))
        return np.cos(phase)


ScalarField = np.ndarray


# --------------------------------------------------------------------------
# symbols
# --------------------------------------------------------------------------

def multiplier_A(grid, k):
    """Symbol of ``(Id - eps^2 Laplacian)^{-1}`` at the integer wavevector ``k``."""
    k2 = float(np.sum(np.asarray(k, dtype=float) ** 2))
    return 1.0 / (1.0 + TWO_PI_SQ * grid.eps ** 2 * k2)


def multiplier_B(grid, k):
    """Symbol of ``B = Id - A``."""
    k2 = float(np.sum(np.asarray(k, dtype=float) ** 2))
    a = TWO_PI_SQ * grid.eps ** 2 * k2
    return a / (1.0 + a)


def _ksq(grid, half):
    return grid.ksq_half if half else grid.ksq


def symbol_A(grid, half=True):
    return 1.0 / (1.0 + TWO_PI_SQ * grid.eps ** 2 * _ksq(grid, half))


def symbol_B(grid, half=True):
    a = TWO_PI_SQ * grid.eps ** 2 * _ksq(grid, half)
    return a / (1.0 + a)


def symbol_neg_laplacian(grid, half=True):
    return TWO_PI_SQ * _ksq(grid, half)


def resolvent_symbol(grid, lambda1, dt, half=True):
    """Symbol of ``(Id + (lambda1 dt / eps^4) B^2)^{-1}``.

    Written out this is ``1 / (1 + 16 pi^4 lambda1 dt |k|^4 / (1 + 4 pi^2 eps^2 |k|^2)^2)``.
    """
    if lambda1 < 0 or not dt > 0:
        raise ValueError("resolvent_symbol needs lambda1 >= 0 and dt > 0")
    k2 = _ksq(grid, half)
    num = 16.0 * np.pi ** 4 * lambda1 * dt * k2 ** 2
    return 1.0 / (1.0 + num / (1.0 + TWO_PI_SQ * grid.eps ** 2 * k2) ** 2)


def dealias_symbol(grid, half=True):
    """Indicator of the modes kept by the 2/3 truncation rule."""
    kmax = grid.m / 3.0
    k = np.abs(grid.wavenumbers)
    axes = [k] * grid.dim
    if half:
        axes[-1] = np.arange(grid.m // 2 + 1)
    grids = np.meshgrid(*axes, indexing="ij", sparse=True)
    mask = np.ones(np.broadcast_shapes(*[g.shape for g in grids]), dtype=bool)
    for g in grids:
        mask = mask & (g < kmax)
    return mask.astype(float)


# --------------------------------------------------------------------------
# transforms
# --------------------------------------------------------------------------

def forward(u):
    """Half-layout Fourier coefficients, normalised so ``u_hat[0] = mean(u)``."""
    return sfft.rfftn(u, norm="forward")


def inverse(u_hat, shape):
    return sfft.irfftn(u_hat, s=shape, norm="forward")


def fourier_coefficients(u):
    """Full-layout coefficients ``u_hat_k`` of ``u = sum_k u_hat_k e_k``."""
    return sfft.fftn(u, norm="forward")


def apply_multiplier(u, symbol):
    """Return the field whose coefficients are ``symbol * u_hat``.

    ``symbol`` may be a scalar, a half-layout array (fast path) or a
    full-layout array.  For the full layout the result is checked to be
    real, which fails for symbols that are not even in ``k``.
    """
    u = np.asarray(u, dtype=float)
    symbol = np.asarray(symbol)
    if symbol.ndim == 0:
        return float(symbol) * u
    if symbol.shape == u.shape:
        w = sfft.ifftn(symbol * sfft.fftn(u))
        scale = max(np.linalg.norm(u), np.finfo(float).tiny)
        if np.linalg.norm(w.imag) > 1e-10 * scale:
            raise NonRealOutput("symbol is not even in k: imaginary residue in output")
        return np.ascontiguousarray(w.real)
    return inverse(symbol * forward(u), u.shape)


def apply_multipliers(u, *symbols):
    """Apply several half-layout symbols with a single forward transform."""
    u_hat = forward(u)
    return [inverse(s * u_hat, u.shape) for s in symbols]


# --------------------------------------------------------------------------
# snapshot files
# --------------------------------------------------------------------------

def write_snapshot(path, u, grid, time):
    """Write ``u`` as a JSON header line followed by little-endian float64 data."""
    header = {"dim": grid.dim, "m": grid.m, "eps": grid.eps, "time": time}
    data = np.ascontiguousarray(u, dtype="<f8")
    if data.shape != grid.shape:
        raise ValueError(f"field shape {data.shape} does not match grid {grid.shape}")
    path = Path(path)
    with path.open("wb") as fh:
        fh.write(json.dumps(header).encode("ascii") + b"\n")
        fh.write(data.tobytes(order="C"))


def read_snapshot(path):
    """Inverse of :func:`write_snapshot`; returns ``(u, grid, time)``."""
    with Path(path).open("rb") as fh:
        header = json.loads(fh.readline().decode("ascii"))
        raw = fh.read()
    grid = TorusGrid(int(header["dim"]), int(header["m"]), float(header["eps"]))
    u = np.frombuffer(raw, dtype="<f8")
    if u.size != grid.m ** grid.dim:
        raise ValueError(f"snapshot holds {u.size} values, expected {grid.m ** grid.dim}")
    return u.reshape(grid.shape).astype(float), grid, float(header["time"])
