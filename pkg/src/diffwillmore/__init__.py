"""Spectral phase-field simulation of diffuse perimeter and Willmore flows.

The gradient-free diffuse interface model replaces the gradient term of the
Cahn-Hilliard energy by a nonlocal resolvent term.  Modules:

``profile``    optimal 1D profile, the two double-well potentials, constants
``spectral``   periodic grids, Fourier multipliers, snapshot files
``energies``   diffuse perimeters, Willmore energies and curvature
``flows``      time steppers and the volume/perimeter projections
``geometry``   signed distances and initial data
``reference``  radius ODE for spheres, the benchmark oracle
``cli``        batch command line
"""
from .energies import EnergyReport, energy_report
from .flows import FlowParams, run_simulation, step_gradient_free, step_standard
from .geometry import initialize
from .profile import compute_constants, profile_model
from .spectral import TorusGrid

__all__ = [
    "EnergyReport", "FlowParams", "TorusGrid", "compute_constants", "energy_report",
    "initialize", "profile_model", "run_simulation", "step_gradient_free", "step_standard",
]
