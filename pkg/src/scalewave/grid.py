"""Uniform 1D / radial grids, sampled fields and trapezoidal quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

MIN_POINTS = 16

_SURFACE = {1: 1.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


class DimMode(str, Enum):
    LINE1D = "line1d"
    RADIAL2D = "radial2d"
    RADIAL3D = "radial3d"

    @property
    def dim(self) -> int:
        return {"line1d": 1, "radial2d": 2, "radial3d": 3}[self.value]

    @property
    def radial(self) -> bool:
        return self is not DimMode.LINE1D


class GridMismatchError(ValueError):
    pass


class NonFiniteError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform grid; ``[-extent, extent]`` for line1d, ``[0, extent]`` for radial modes."""

    dim_mode: DimMode
    n_points: int
    spacing: float
    extent: float
    boundary: str = "dirichlet_zero"

    @property
    def dim(self) -> int:
        return self.dim_mode.dim

    @cached_property
    def nodes(self) -> np.ndarray:
        idx = np.arange(self.n_points, dtype=np.float64)
        if self.dim_mode.radial:
            x = idx * self.spacing
        else:
            x = -self.extent + idx * self.spacing
        x.setflags(write=False)
        return x

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights including the radial measure ``S_n r^(n-1)``."""
        w = np.full(self.n_points, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        if self.dim_mode.radial:
            w *= _SURFACE[self.dim] * self.nodes ** (self.dim - 1)
        w.setflags(write=False)
        return w

    @cached_property
    def midpoint_weights(self) -> np.ndarray:
        """Face weights for the discrete Dirichlet energy.

        line1d has ``n_points + 1`` faces (both ends touch a zero ghost node);
        radial grids have ``n_points`` faces, face ``i`` between nodes ``i`` and
        ``i + 1``, the last one touching the outer ghost.
        """
        h = self.spacing
        if not self.dim_mode.radial:
            return np.full(self.n_points + 1, h)
        r_mid = (np.arange(self.n_points) + 0.5) * h
        return _SURFACE[self.dim] * r_mid ** (self.dim - 1) * h


def make_grid(dim_mode: DimMode | str, extent: float, n_points: int) -> Grid:
    dim_mode = DimMode(dim_mode)
    if not extent > 0:
        raise ValueError(f"extent must be positive, got {extent}")
    if n_points < MIN_POINTS:
        raise ValueError(f"n_points must be >= {MIN_POINTS}, got {n_points}")
    span = extent if dim_mode.radial else 2.0 * extent
    return Grid(dim_mode, int(n_points), span / (n_points - 1), float(extent))


def auto_grid(dim_mode: DimMode | str, spacing: float, support_radius: float, t_max: float) -> Grid:
    """Smallest grid at ``spacing`` whose extent covers ``support_radius + t_max + 2``."""
    dim_mode = DimMode(dim_mode)
    if not spacing > 0:
        raise ValueError(f"spacing must be positive, got {spacing}")
    need = support_radius + t_max + 2.0
    factor = 1 if dim_mode.radial else 2
    cells = max(math.ceil(need * factor / spacing - 1e-9), MIN_POINTS - 1)
    return Grid(dim_mode, cells + 1, float(spacing), cells * spacing / factor)


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(f"field has shape {vals.shape}, grid expects ({self.grid.n_points},)")
        object.__setattr__(self, "values", vals)

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros(grid.n_points))

    @property
    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def __mul__(self, c: float) -> "Field":
        return Field(self.grid, c * self.values)

    __rmul__ = __mul__

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(self.grid, self.values - other.values)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class State:
    t: float
    u: Field
    v: Field

    def __post_init__(self):
        _same_grid(self.u, self.v)
        if self.t < 0:
            raise ValueError(f"state time must be >= 0, got {self.t}")

    @property
    def grid(self) -> Grid:
        return self.u.grid

    @property
    def diverged(self) -> bool:
        return not (self.u.is_finite and self.v.is_finite)


def _same_grid(f: Field, g: Field) -> None:
    if f.grid != g.grid:
        raise GridMismatchError("fields live on different grids")


def _finite(f: Field) -> np.ndarray:
    if not f.is_finite:
        raise NonFiniteError("field contains NaN or Inf")
    return f.values


def l2_norm(f: Field) -> float:
    vals = _finite(f)
    return math.sqrt(float(np.dot(f.grid.weights, vals * vals)))


def linf_norm(f: Field) -> float:
    vals = _finite(f)
    return float(np.max(np.abs(vals)))


def inner_product(f: Field, g: Field) -> float:
    _same_grid(f, g)
    return float(np.dot(f.grid.weights, _finite(f) * _finite(g)))


def support_radius(*fields: Field, rel_tol: float = 1e-14) -> float:
    """Largest ``|x|`` where any field exceeds ``rel_tol`` times the joint maximum."""
    grid = fields[0].grid
    mags = np.max(np.abs(np.vstack([f.values for f in fields])), axis=0)
    peak = mags.max()
    if peak == 0:
        return 0.0
    live = np.nonzero(mags > rel_tol * peak)[0]
    return float(np.max(np.abs(grid.nodes[live])))
