"""Simulation and bifurcation-analysis toolkit for a dissipative
mean-field model of cooperative behavior.

Subsystems: the finite-N interacting particle system (`particles`), the
noiseless macroscopic flow and its phase structure (`macro`), the
small-noise Gaussian closure (`gaussian`), the nonlinear Fokker-Planck
solver (`fokker_planck`), the limit-equation solver and convergence
experiments (`mckean`), and the reproducibility-oriented CLI (`cli`).
The hot kernels run in a compiled extension when available, with a
bitwise-identical numpy fallback (`kernels.active_backend()` tells which).
"""

__version__ = "0.1.0"

from .core import ModelParams, Trajectory, validate
from .errors import (CflError, DivergedRunError, ExperimentInconclusiveError,
                     InconclusiveError, NumericalError, ValidationError)
from .kernels import active_backend
from .rng import RngStream, gaussian_draw

__all__ = [
    "ModelParams", "Trajectory", "validate", "RngStream", "gaussian_draw",
    "active_backend", "ValidationError", "InconclusiveError",
    "ExperimentInconclusiveError", "NumericalError", "DivergedRunError",
    "CflError", "__version__",
]
