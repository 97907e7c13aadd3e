"""Spectral Galerkin simulator for two coupled thin fluid layers in a porous medium."""

from .basis import QuadratureGrid, SpectralCoeffs, analyze, eval_basis, make_grid, synthesize
from .dynamics import PhysParams, State, assemble_jacobian, assemble_rhs
from .integrator import StepControls, integrate, step
from .regularization import RegEps, a_eps, phi, phi_eps

__version__ = "0.1.0"

__all__ = [
    "PhysParams",
    "QuadratureGrid",
    "RegEps",
    "SpectralCoeffs",
    "State",
    "StepControls",
    "a_eps",
    "analyze",
    "assemble_jacobian",
    "assemble_rhs",
    "eval_basis",
    "integrate",
    "make_grid",
    "phi",
    "phi_eps",
    "step",
    "synthesize",
]
