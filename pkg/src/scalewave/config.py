"""JSON run configuration: parsing, validation and construction of run objects."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Optional

from .grid import MIN_POINTS, DimMode, Grid, auto_grid, make_grid
from .integrator import DataFamily, DataPlacement, data_support
from .operators import NonlinearityKind, NonlinearitySpec
from .params import (DEFAULT_BLOWUP_THRESHOLD, DEFAULT_CFL, DEFAULT_ETA, MAX_CFL,
                     PhysParams, SolverConfig)

class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class RunConfig:
    # physics
    mu: float = 1.0
    nonlinearity: Optional[str] = None
    p: Optional[float] = None
    dim_mode: str = "line1d"
    eta: float = DEFAULT_ETA
    # solver
    cfl: float = DEFAULT_CFL
    t_max: float = 20.0
    sample_every: int = 10
    blowup_threshold: float = DEFAULT_BLOWUP_THRESHOLD
    confirm_refinement: bool = True
    n_snapshots: int = 0
    derivative_levels: bool = False
    # grid: ``spacing`` with auto extent, or ``n_points`` (+ optional ``extent``)
    spacing: Optional[float] = 0.1
    n_points: Optional[int] = None
    extent: Optional[float] = None
    # initial data
    family: str = "compact_bump"
    amplitude: float = 1.0
    width: float = 1.0
    which: str = "both"
    # sweep
    mu_values: Optional[list] = None
    p_values: Optional[list] = None
    # misc
    output_dir: Optional[str] = None
    seed: int = 0

    def __post_init__(self):
        self.validate()

    # -- validation -------------------------------------------------------
    def validate(self) -> None:
        _num(self, "mu", positive=True)
        _choice(self, "dim_mode", [m.value for m in DimMode])
        _num(self, "eta")
        if not 0 < self.eta < 2:
            raise ConfigError("eta", f"must lie in (0, 2), got {self.eta}")
        if self.nonlinearity is not None:
            _choice(self, "nonlinearity", [k.value for k in NonlinearityKind])
            if self.p is None:
                raise ConfigError("p", "required when nonlinearity is set")
        if self.p is not None:
            _num(self, "p")
            if not self.p > 1:
                raise ConfigError("p", f"must be > 1, got {self.p}")
        _num(self, "cfl")
        if not 0 < self.cfl <= MAX_CFL:
            raise ConfigError("cfl", f"must lie in (0, {MAX_CFL}], got {self.cfl}")
        _num(self, "t_max", positive=True)
        _int(self, "sample_every", low=1)
        _num(self, "blowup_threshold", positive=True)
        _bool(self, "confirm_refinement")
        _int(self, "n_snapshots", low=0)
        _bool(self, "derivative_levels")
        if self.spacing is None and self.n_points is None:
            raise ConfigError("spacing", "either spacing or n_points must be given")
        if self.spacing is not None:
            _num(self, "spacing", positive=True)
        if self.n_points is not None:
            _int(self, "n_points", low=MIN_POINTS)
        if self.extent is not None:
            _num(self, "extent", positive=True)
            if self.n_points is None:
                raise ConfigError("extent", "an explicit extent needs n_points")
        _choice(self, "family", [f.value for f in DataFamily])
        _num(self, "amplitude")
        if self.amplitude < 0:
            raise ConfigError("amplitude", f"must be >= 0, got {self.amplitude}")
        _num(self, "width", positive=True)
        _choice(self, "which", [w.value for w in DataPlacement])
        for name in ("mu_values", "p_values"):
            vals = getattr(self, name)
            if vals is None:
                continue
            if not isinstance(vals, list) or not vals:
                raise ConfigError(name, "must be a non-empty list of numbers")
            for x in vals:
                if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
                    raise ConfigError(name, f"entry {x!r} is not a finite number")
        if self.mu_values is not None and any(m <= 0 for m in self.mu_values):
            raise ConfigError("mu_values", "entries must be positive")
        if self.p_values is not None:
            if any(p <= 1 for p in self.p_values):
                raise ConfigError("p_values", "entries must be > 1")
            if list(self.p_values) != sorted(set(self.p_values)):
                raise ConfigError("p_values", "must be strictly ascending")
        if self.output_dir is not None and not isinstance(self.output_dir, str):
            raise ConfigError("output_dir", "must be a string")
        _int(self, "seed", low=0)

    # -- construction -----------------------------------------------------
    def nonlinearity_spec(self, p: Optional[float] = None) -> Optional[NonlinearitySpec]:
        if self.nonlinearity is None:
            return None
        return NonlinearitySpec(NonlinearityKind(self.nonlinearity), self.p if p is None else p)

    def phys_params(self) -> PhysParams:
        return PhysParams(self.mu, self.nonlinearity_spec(), DimMode(self.dim_mode), self.eta)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.cfl, self.t_max, self.sample_every, self.blowup_threshold,
                            self.confirm_refinement, self.n_snapshots, self.derivative_levels)

    def data_support(self) -> float:
        return data_support(self.family, self.width)

    def grid(self, refine: int = 1) -> Grid:
        """Grid for this config; ``refine = 2`` halves the spacing."""
        if self.n_points is not None:
            extent = self.extent
            if extent is None:
                extent = self.data_support() + self.t_max + 2.0
            return make_grid(self.dim_mode, extent, refine * (self.n_points - 1) + 1)
        return auto_grid(self.dim_mode, self.spacing / refine, self.data_support(), self.t_max)

    # -- (de)serialisation ------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown config key")
        return cls(**data)


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError("--config", f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON in {path}: {exc}") from exc
    return RunConfig.from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True)


def _num(cfg, name, positive=False):
    x = getattr(cfg, name)
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(name, f"must be a number, got {x!r}")
    if not math.isfinite(x):
        raise ConfigError(name, f"must be finite, got {x!r}")
    if positive and not x > 0:
        raise ConfigError(name, f"must be positive, got {x!r}")


def _int(cfg, name, low):
    x = getattr(cfg, name)
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(name, f"must be an integer, got {x!r}")
    if x < low:
        raise ConfigError(name, f"must be >= {low}, got {x}")


def _bool(cfg, name):
    if not isinstance(getattr(cfg, name), bool):
        raise ConfigError(name, f"must be true or false, got {getattr(cfg, name)!r}")


def _choice(cfg, name, options):
    x = getattr(cfg, name)
    if x not in options:
        raise ConfigError(name, f"must be one of {options}, got {x!r}")
