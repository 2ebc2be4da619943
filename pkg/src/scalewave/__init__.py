"""Finite-difference simulation of damped semilinear waves ``u_tt - lap u + mu/(1+t) u_t = f(u_t)``."""

from ._kernels import BACKEND
from .analysis import (DecayFit, SweepResult, fit_decay, glassey_exponent, predicted_existence_threshold,
                       run_sweep, shifted_glassey)
from .energy import EnergyRecord, compute_record, decay_law, lyapunov_monotone, lyapunov_residual
from .grid import DimMode, Field, Grid, State, auto_grid, make_grid
from .integrator import (RunClass, RunOutcome, duhamel_residual, evolve, initial_data,
                         propagate_homogeneous, step)
from .operators import NonlinearityKind, NonlinearitySpec
from .params import PhysParams, SolverConfig

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "DecayFit", "DimMode", "EnergyRecord", "Field", "Grid", "NonlinearityKind",
    "NonlinearitySpec", "PhysParams", "RunClass", "RunOutcome", "SolverConfig", "State", "SweepResult",
    "auto_grid", "compute_record", "decay_law", "duhamel_residual", "evolve", "fit_decay",
    "glassey_exponent", "initial_data", "lyapunov_monotone", "lyapunov_residual", "make_grid",
    "predicted_existence_threshold", "propagate_homogeneous", "run_sweep", "shifted_glassey", "step",
]
