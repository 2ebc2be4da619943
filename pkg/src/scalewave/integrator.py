"""RK4 method-of-lines time stepping, blow-up detection and Duhamel bookkeeping.

The first-order system is ``u' = v``, ``v' = lap u - mu/(1+t) v + f(v)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from . import _kernels
from .energy import EnergyRecord, compute_record, derivative_state
from .grid import Field, Grid, State, _same_grid, l2_norm, support_radius
from .operators import apply_nonlinearity
from .params import PhysParams, SolverConfig, DEFAULT_CFL

__all__ = [
    "DataFamily", "DataPlacement", "RunClass", "RunOutcome", "PhysParams", "SolverConfig",
    "data_support", "initial_data", "step", "evolve", "propagate_homogeneous", "duhamel_residual",
]

# relative agreement of t* between the run and its dt/2 confirmation
BLOWUP_AGREEMENT = 0.05
# light-cone margin beyond support + t_max
EXTENT_MARGIN = 2.0


class DataFamily(str, Enum):
    GAUSSIAN = "gaussian"
    COMPACT_BUMP = "compact_bump"


# Gaussian data counts as supported where it exceeds 1e-14 of its peak
_GAUSSIAN_SUPPORT = math.sqrt(14.0 * math.log(10.0))


def data_support(family: "DataFamily | str", width: float) -> float:
    """Support radius of :func:`initial_data` output, as measured by ``support_radius``."""
    if DataFamily(family) is DataFamily.GAUSSIAN:
        return _GAUSSIAN_SUPPORT * width
    return width


class DataPlacement(str, Enum):
    U0_ONLY = "u0_only"
    U1_ONLY = "u1_only"
    BOTH = "both"


class RunClass(str, Enum):
    GLOBAL = "global_to_horizon"
    BLOWUP = "blowup"
    INCONCLUSIVE = "inconclusive"


@dataclass
class RunOutcome:
    classification: RunClass
    records: list[EnergyRecord]
    final_state: Optional[State]
    t_star: Optional[float] = None
    t_star_refined: Optional[float] = None
    initial_state: Optional[State] = None
    snapshots: list[State] = field(default_factory=list)
    derivative_records: dict[str, list[EnergyRecord]] = field(default_factory=dict)
    dt: float = 0.0
    n_steps: int = 0


def initial_data(family: DataFamily | str, amplitude: float, width: float, grid: Grid,
                 which: DataPlacement | str = "both") -> tuple[Field, Field]:
    family, which = DataFamily(family), DataPlacement(which)
    if amplitude < 0:
        raise ValueError(f"amplitude must be >= 0, got {amplitude}")
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    if width > grid.extent:
        raise ValueError(f"width {width} exceeds grid extent {grid.extent}")
    y = grid.nodes / width
    if family is DataFamily.GAUSSIAN:
        prof = amplitude * np.exp(-y * y)
    else:
        prof = np.where(np.abs(y) < 1.0, amplitude * (1.0 - y * y) ** 4, 0.0)
    zero = np.zeros(grid.n_points)
    u0 = prof if which is not DataPlacement.U1_ONLY else zero
    u1 = prof if which is not DataPlacement.U0_ONLY else zero
    return Field(grid, u0.copy()), Field(grid, u1.copy())


def _kind(params: PhysParams) -> tuple[int, float]:
    nl = params.nonlinearity
    if nl is None:
        return _kernels.NONE, 1.0
    return nl.kind.code, float(nl.p)


def _march(u, v, n, dt, t_origin, params, h, threshold, i0=0):
    kind, p = _kind(params)
    return _kernels.advance_kernel(u, v, i0, n, dt, t_origin, float(params.mu), kind, p,
                                   params.dim_mode.dim, h, threshold)


def _check_grid(state_grid: Grid, params: PhysParams) -> None:
    if state_grid.dim_mode is not params.dim_mode:
        raise ValueError(f"grid is {state_grid.dim_mode.value} but params expect {params.dim_mode.value}")


def step(state: State, params: PhysParams, dt: float) -> State:
    """One RK4 step. A non-finite result is returned as is (``State.diverged``)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if state.diverged:
        raise ValueError("cannot step a non-finite state")
    _check_grid(state.grid, params)
    u, v = state.u.values.copy(), state.v.values.copy()
    with np.errstate(all="ignore"):
        _march(u, v, 1, dt, state.t, params, state.grid.spacing, math.inf)
    return State(state.t + dt, Field(state.grid, u), Field(state.grid, v))


def _step_count(t_span: float, cfl: float, h: float, stride: int) -> int:
    raw = math.ceil(t_span / (cfl * h) - 1e-9)
    return max(stride, math.ceil(raw / stride) * stride)


def evolve(u0: Field, u1: Field, params: PhysParams, config: SolverConfig) -> RunOutcome:
    _same_grid(u0, u1)
    grid = u0.grid
    _check_grid(grid, params)
    if not (u0.is_finite and u1.is_finite):
        raise ValueError("initial data must be finite")
    need = support_radius(u0, u1) + config.t_max + EXTENT_MARGIN
    if grid.extent < need - 1e-9:
        raise ValueError(f"grid extent {grid.extent} < support + t_max + {EXTENT_MARGIN} = {need}")

    h = grid.spacing
    snap = config.n_snapshots
    stride = math.lcm(config.sample_every, snap) if snap else config.sample_every
    n_steps = _step_count(config.t_max, config.cfl, h, stride)
    dt = config.t_max / n_steps
    snap_stride = n_steps // snap if snap else 0
    chunk = math.gcd(config.sample_every, snap_stride) if snap else config.sample_every
    levels = ()
    if config.derivative_levels:
        levels = ("laplacian",) if grid.dim_mode.radial else ("gradient", "laplacian")

    u, v = u0.values.copy(), u1.values.copy()
    initial = State(0.0, Field(grid, u.copy()), Field(grid, v.copy()))
    records = [compute_record(initial, params)]
    deriv = {lv: [compute_record(derivative_state(initial, lv), params)] for lv in levels}
    snapshots = [initial] if snap else []

    k = 0
    crossed = False
    with np.errstate(all="ignore"):
        while k < n_steps:
            taken, crossed = _march(u, v, chunk, dt, 0.0, params, h, config.blowup_threshold, i0=k)
            k += taken
            if crossed:
                break
            sample = k % config.sample_every == 0
            keep = bool(snap) and k % snap_stride == 0
            if not (sample or keep):
                continue
            st = State(k * dt, Field(grid, u.copy()), Field(grid, v.copy()))
            if sample:
                records.append(compute_record(st, params))
                for lv in levels:
                    deriv[lv].append(compute_record(derivative_state(st, lv), params))
            if keep:
                snapshots.append(st)

    out = RunOutcome(RunClass.GLOBAL, records, None, initial_state=initial, snapshots=snapshots,
                     derivative_records=deriv, dt=dt, n_steps=n_steps)
    if not crossed:
        out.final_state = State(config.t_max, Field(grid, u), Field(grid, v))
        return out

    out.t_star = k * dt
    if not config.confirm_refinement:
        out.classification = RunClass.BLOWUP
        return out
    ur, vr = u0.values.copy(), u1.values.copy()
    with np.errstate(all="ignore"):
        taken, crossed_r = _march(ur, vr, 2 * n_steps, 0.5 * dt, 0.0, params, h, config.blowup_threshold)
    if crossed_r:
        out.t_star_refined = taken * 0.5 * dt
        if abs(out.t_star_refined - out.t_star) <= BLOWUP_AGREEMENT * out.t_star:
            out.classification = RunClass.BLOWUP
            return out
    out.classification = RunClass.INCONCLUSIVE
    return out


def propagate_homogeneous(s: float, t: float, data: tuple[Field, Field], params: PhysParams,
                          dt: Optional[float] = None, cfl: float = DEFAULT_CFL) -> State:
    """Linear propagator ``R(t, s)``: solve the damped equation on ``[s, t]`` from data posed at ``s``.

    ``dt`` forces a step size (it must divide ``t - s``); otherwise the step is
    ``cfl * h`` shrunk to divide the interval.
    """
    if t < s:
        raise ValueError(f"t = {t} precedes s = {s}")
    if s < 0:
        raise ValueError(f"s must be >= 0, got {s}")
    if not params.homogeneous:
        raise ValueError("propagate_homogeneous requires params without nonlinearity")
    u0, u1 = data
    _same_grid(u0, u1)
    grid = u0.grid
    _check_grid(grid, params)
    u, v = u0.values.copy(), u1.values.copy()
    span = t - s
    if span == 0:
        return State(t, Field(grid, u), Field(grid, v))
    if dt is None:
        n = _step_count(span, cfl, grid.spacing, 1)
        dt = span / n
    else:
        n = round(span / dt)
        if n < 1 or abs(n * dt - span) > 1e-9 * max(1.0, t):
            raise ValueError(f"dt = {dt} does not divide the interval [{s}, {t}]")
    with np.errstate(all="ignore"):
        _march(u, v, n, dt, s, params, grid.spacing, math.inf)
    return State(t, Field(grid, u), Field(grid, v))


def duhamel_residual(outcome: RunOutcome, params: PhysParams, n_quad: int) -> float:
    """Relative L2 gap between ``u(T)`` and ``R(T,0)(u0,u1) + sum_j w_j S(T,s_j) f(v(s_j))``.

    Quadrature nodes are ``n_quad + 1`` equally spaced stored snapshots (trapezoid rule).
    """
    if n_quad < 4:
        raise ValueError(f"n_quad must be >= 4, got {n_quad}")
    final = outcome.final_state
    if final is None or outcome.initial_state is None:
        raise ValueError("outcome has no final state (run did not reach its horizon)")
    snaps = outcome.snapshots
    if len(snaps) < n_quad + 1 or (len(snaps) - 1) % n_quad:
        raise ValueError(f"{len(snaps)} stored snapshots cannot host {n_quad} quadrature intervals")
    every = (len(snaps) - 1) // n_quad
    nodes = snaps[::every]
    T = final.t
    lin = params.linear()
    init = outcome.initial_state
    total = propagate_homogeneous(0.0, T, (init.u, init.v), lin, dt=outcome.dt).u.values.copy()
    if params.nonlinearity is not None:
        ds = T / n_quad
        zero = Field.zeros(final.grid)
        # the node at s = T contributes S(T,T)g = 0 to u
        for j, snap in enumerate(nodes[:-1]):
            w = 0.5 * ds if j == 0 else ds
            g = apply_nonlinearity(snap.v, params.nonlinearity)
            total += w * propagate_homogeneous(snap.t, T, (zero, g), lin, dt=outcome.dt).u.values
    ref = l2_norm(final.u)
    gap = l2_norm(Field(final.grid, total) - final.u)
    if ref == 0:
        return gap
    return gap / ref
