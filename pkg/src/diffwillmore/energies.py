"""Discrete diffuse energies for the gradient-free and the standard model.

All integrals over the unit torus are plain grid means, which are spectrally
accurate for smooth periodic integrands.
"""
from __future__ import annotations

from dataclasses import astuple, dataclass, fields

import numpy as np

from . import spectral
from .profile import potential_W, potential_Wo, profile_model


@dataclass(frozen=True)
class EnergyReport:
    time: float
    perimeter_ag: float
    willmore_ag: float
    perimeter_ch: float
    willmore_ch: float
    mass: float

    @classmethod
    def columns(cls):
        return [f.name for f in fields(cls)]

    def as_row(self):
        return astuple(self)


def scaled_curvature(u, grid):
    """``f(u) - A u = B u + W'(u)/2``, i.e. ``eps * H``."""
    _, dw, _ = potential_W(u)
    bu = spectral.apply_multiplier(u, spectral.symbol_B(grid))
    return bu + 0.5 * dw


def diffuse_curvature(u, grid):
    """Diffuse mean curvature ``H = (B u + W'(u)/2) / eps``."""
    return scaled_curvature(u, grid) / grid.eps


def perimeter_ag(u, grid):
    """Gradient-free perimeter ``int (u (u - A u) + W(u)) / (2 eps)``."""
    w, _, _ = potential_W(u)
    bu = spectral.apply_multiplier(u, spectral.symbol_B(grid))
    return float(np.mean(u * bu + w) / (2.0 * grid.eps))


def willmore_ag(u, grid):
    """Gradient-free Willmore energy ``int (f(u) - A u)^2 / eps^3``."""
    return float(np.mean(scaled_curvature(u, grid) ** 2) / grid.eps ** 3)


def willmore_from_curvature(h, grid):
    """``(1/eps) int H^2``; equals :func:`willmore_ag` for ``h = diffuse_curvature(u)``."""
    return float(np.mean(h * h) / grid.eps)


def perimeter_ch(u, grid):
    """Cahn-Hilliard perimeter ``int eps |grad u|^2 / 2 + W_o(u) / eps``."""
    w, _, _ = potential_Wo(u)
    # int |grad u|^2 = int u (-Laplacian u) by Parseval
    lap = spectral.apply_multiplier(u, spectral.symbol_neg_laplacian(grid))
    return float(np.mean(0.5 * grid.eps * u * lap + w / grid.eps))


def chemical_potential(u, grid):
    """``-eps Laplacian u + W_o'(u) / eps``."""
    _, dw, _ = potential_Wo(u)
    lap = spectral.apply_multiplier(u, spectral.symbol_neg_laplacian(grid))
    return grid.eps * lap + dw / grid.eps


def willmore_ch(u, grid):
    """Standard diffuse Willmore energy ``int (-eps Lap u + W_o'(u)/eps)^2 / (2 eps)``."""
    return float(np.mean(chemical_potential(u, grid) ** 2) / (2.0 * grid.eps))


def radius_from_perimeter(perimeter, dim):
    """Radius of the circle (2D) or sphere (3D) with the given diffuse perimeter."""
    c0 = profile_model().c0
    if dim == 2:
        return perimeter / (2.0 * np.pi * c0)
    if dim == 3:
        return np.sqrt(perimeter / (4.0 * np.pi * c0))
    raise ValueError("radius extraction needs dim 2 or 3")


def energy_report(u, grid, time=0.0):
    return EnergyReport(
        time=float(time),
        perimeter_ag=perimeter_ag(u, grid),
        willmore_ag=willmore_ag(u, grid),
        perimeter_ch=perimeter_ch(u, grid),
        willmore_ch=willmore_ch(u, grid),
        mass=float(np.mean(u)),
    )
