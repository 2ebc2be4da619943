"""Physical and numerical run parameters."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .grid import DimMode
from .operators import NonlinearitySpec

MAX_CFL = 0.5
DEFAULT_CFL = 0.4
DEFAULT_BLOWUP_THRESHOLD = 1e8
DEFAULT_ETA = 0.5


@dataclass(frozen=True)
class PhysParams:
    """``mu`` damping strength, optional nonlinearity, and ``eta`` for the ``mu == 2`` functional."""

    mu: float
    nonlinearity: Optional[NonlinearitySpec] = None
    dim_mode: DimMode = DimMode.LINE1D
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        object.__setattr__(self, "dim_mode", DimMode(self.dim_mode))
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not 0 < self.eta < 2:
            raise ValueError(f"eta must lie in (0, 2), got {self.eta}")

    @property
    def homogeneous(self) -> bool:
        return self.nonlinearity is None

    def linear(self) -> "PhysParams":
        return PhysParams(self.mu, None, self.dim_mode, self.eta)


def nonlinear_eta(p: float, default: float = DEFAULT_ETA) -> float:
    """``eta`` for ``mu == 2`` nonlinear runs, kept strictly below ``2(p-2)/(p-1)`` when ``p > 2``."""
    if p > 2:
        return min(default, (p - 2.0) / (p - 1.0))
    return default


@dataclass(frozen=True)
class SolverConfig:
    """Time-stepping controls.

    ``sample_every`` is a step count. ``n_snapshots > 0`` stores full states at
    ``n_snapshots + 1`` equally spaced times (needed for Duhamel checks); the step
    count is rounded up so that both strides divide it.
    """

    cfl: float = DEFAULT_CFL
    t_max: float = 10.0
    sample_every: int = 10
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    confirm_refinement: bool = True
    n_snapshots: int = 0
    derivative_levels: bool = False

    def __post_init__(self):
        if not 0 < self.cfl <= MAX_CFL:
            raise ValueError(f"cfl must lie in (0, {MAX_CFL}], got {self.cfl}")
        if not self.t_max > 0:
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if self.sample_every < 1:
            raise ValueError(f"sample_every must be >= 1, got {self.sample_every}")
        if self.n_snapshots < 0:
            raise ValueError(f"n_snapshots must be >= 0, got {self.n_snapshots}")
        if not self.blowup_threshold > 0:
            raise ValueError(f"blowup_threshold must be positive, got {self.blowup_threshold}")
