"""Energy functionals, Lyapunov identities and decay bookkeeping for the homogeneous problem.

Notation used throughout: ``U = ||u||^2``, ``V = ||v||^2``, ``G = ||grad u||^2`` and
``X = <u, v>``. The three damping regimes each carry their own modified energy:

* ``mu < 2``:  E1 = X + U/(2(1+t)),        E2 = E0 + mu/(2(1+t)) E1
* ``mu > 2``:  E3 = X + (mu-1)U/(2(1+t)),  E4 = E0 + E3/(1+t)
* ``mu = 2``:  E5 = X + (1+eta)U/(2(1+t)), E6 = E0 + (2-eta)/(2(1+t)) E5

with ``E0 = (G + V)/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .grid import Field, State, inner_product, l2_norm, linf_norm
from .operators import grad_l2_norm, gradient, laplacian
from .params import PhysParams


class Regime(str, Enum):
    SUBCRITICAL = "mu<2"
    CRITICAL = "mu=2"
    SUPERCRITICAL = "mu>2"


def regime(mu: float) -> Regime:
    if mu < 2:
        return Regime.SUBCRITICAL
    if mu > 2:
        return Regime.SUPERCRITICAL
    return Regime.CRITICAL


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    l2_u: float
    l2_v: float
    l2_grad_u: float
    linf_v: float
    E0: float
    E1: Optional[float]
    E2: Optional[float]
    E3: Optional[float]
    E4: Optional[float]
    E5: Optional[float]
    E6: Optional[float]
    lyapunov: float
    bundle: float

    @property
    def energy_norm(self) -> float:
        """``||(grad u, v)||``."""
        return math.hypot(self.l2_grad_u, self.l2_v)


CSV_COLUMNS = tuple(f.name for f in fields(EnergyRecord))


@dataclass(frozen=True)
class DecayLaw:
    alpha: float
    alpha0: float

    @property
    def predicted_energy_exponent(self) -> float:
        return -self.alpha0

    @property
    def predicted_norm_exponent(self) -> float:
        return -self.alpha0 / 2.0


def decay_law(params: PhysParams) -> DecayLaw:
    mu = params.mu
    if mu < 2:
        alpha0 = mu
    elif mu == 2:
        alpha0 = 2.0 - params.eta
    else:
        alpha0 = 2.0
    return DecayLaw(alpha=min(mu, 2.0), alpha0=alpha0)


def compute_record(state: State, params: PhysParams) -> EnergyRecord:
    t1 = 1.0 + state.t
    mu, eta = params.mu, params.eta
    l2_u, l2_v = l2_norm(state.u), l2_norm(state.v)
    l2_g = grad_l2_norm(state.u)
    U, V, G = l2_u ** 2, l2_v ** 2, l2_g ** 2
    X = inner_product(state.u, state.v)
    E0 = 0.5 * (G + V)
    E = dict.fromkeys(("E1", "E2", "E3", "E4", "E5", "E6"))
    reg = regime(mu)
    if reg is Regime.SUBCRITICAL:
        E["E1"] = X + U / (2.0 * t1)
        E["E2"] = E0 + mu / (2.0 * t1) * E["E1"]
        lyap = t1 ** mu * E["E2"]
    elif reg is Regime.SUPERCRITICAL:
        E["E3"] = X + (mu - 1.0) * U / (2.0 * t1)
        E["E4"] = E0 + E["E3"] / t1
        lyap = t1 ** 2 * E["E4"]
    else:
        E["E5"] = X + (1.0 + eta) * U / (2.0 * t1)
        E["E6"] = E0 + (2.0 - eta) / (2.0 * t1) * E["E5"]
        lyap = t1 ** (2.0 - eta) * E["E6"]
    bundle = U / t1 ** 2 + V + G
    return EnergyRecord(state.t, l2_u, l2_v, l2_g, linf_norm(state.v), E0, lyapunov=lyap, bundle=bundle, **E)


def regime_functional(record: EnergyRecord, params: PhysParams) -> float:
    reg = regime(params.mu)
    if reg is Regime.SUBCRITICAL:
        return record.E2
    if reg is Regime.SUPERCRITICAL:
        return record.E4
    return record.E6


def derivative_state(state: State, level: str) -> State:
    """Pair ``(D u, D v)`` for ``level='gradient'`` or ``(lap u, lap v)`` for ``'laplacian'``.

    Both solve the same homogeneous equation as ``u`` (the operators commute
    with the 3-point Laplacian away from the boundary).
    """
    if level == "gradient":
        if state.grid.dim_mode.radial:
            raise ValueError("gradient-level records are only defined on line1d grids")
        op = gradient
    elif level == "laplacian":
        op = laplacian
    else:
        raise ValueError(f"unknown derivative level {level!r}")
    return State(state.t, op(state.u), op(state.v))


def _uniform_times(records: Sequence[EnergyRecord]) -> tuple[np.ndarray, float]:
    t = np.array([r.t for r in records])
    steps = np.diff(t)
    tau = float(np.mean(steps))
    if not tau > 0 or np.max(np.abs(steps - tau)) > 1e-9 * max(1.0, tau):
        raise ValueError("records must be uniformly spaced in time")
    return t, tau


def lyapunov_residual(records: Sequence[EnergyRecord], params: PhysParams) -> np.ndarray:
    """Residual of the regime's energy identity at interior records (central differences).

    Endpoints are skipped, so the result has ``len(records) - 2`` entries.
    """
    if len(records) < 3:
        raise ValueError("need at least 3 records")
    t, tau = _uniform_times(records)
    mu, eta = params.mu, params.eta
    E = np.array([regime_functional(r, params) for r in records])
    U = np.array([r.l2_u ** 2 for r in records])
    V = np.array([r.l2_v ** 2 for r in records])
    dE = (E[2:] - E[:-2]) / (2.0 * tau)
    t1 = 1.0 + t[1:-1]
    Ei, Ui, Vi = E[1:-1], U[1:-1], V[1:-1]
    reg = regime(mu)
    if reg is Regime.SUBCRITICAL:
        return dE + mu / t1 * Ei + mu * (2.0 - mu) / (4.0 * t1 ** 3) * Ui
    if reg is Regime.SUPERCRITICAL:
        return dE + 2.0 / t1 * Ei + (mu - 2.0) / t1 * Vi
    return (dE + (2.0 - eta) / t1 * Ei
            + eta * (1.0 + eta) * (2.0 - eta) / (4.0 * t1 ** 3) * Ui
            + eta / t1 * Vi)


def lyapunov_monotone(records: Sequence[EnergyRecord], params: PhysParams, slack: float = 1e-6) -> bool:
    """True iff the weighted energy never grows by more than ``slack`` (relative) between samples."""
    L = np.array([r.lyapunov for r in records])
    return bool(np.all(L[1:] <= L[:-1] + slack * np.abs(L[:-1])))


def equivalence_constants(records: Sequence[EnergyRecord], params: PhysParams) -> tuple[float, float]:
    """Range of ``bundle / regime functional`` over the records."""
    ratios = []
    for r in records:
        e = regime_functional(r, params)
        if e == 0:
            if r.bundle != 0:
                raise ValueError(f"regime functional vanishes at t={r.t} while the bundle does not")
            continue
        ratios.append(r.bundle / e)
    if not ratios:
        raise ValueError("all records are zero; equivalence constants are undefined")
    ratios = np.array(ratios)
    return float(ratios.min()), float(ratios.max())


def decay_constant(records: Sequence[EnergyRecord], alpha0: float, attr: str = "bundle") -> float:
    """Smallest ``C`` with ``q(t) <= C ((1+s)/(1+t))^alpha0 q(s)`` for all recorded ``s <= t``."""
    t = np.array([r.t for r in records])
    q = np.array([getattr(r, attr) for r in records])
    if np.any(q <= 0):
        raise ValueError(f"{attr} must be positive on every record")
    g = q * (1.0 + t) ** alpha0
    running_min = np.minimum.accumulate(g)
    return float(np.max(g / running_min))


def field_records(states: Sequence[State], params: PhysParams) -> list[EnergyRecord]:
    return [compute_record(s, params) for s in states]


def zero_state(grid) -> State:
    return State(0.0, Field.zeros(grid), Field.zeros(grid))
