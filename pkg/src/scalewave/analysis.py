"""Power-law decay fits, critical exponents and blow-up/global sweeps."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .energy import EnergyRecord, decay_law
from .grid import Grid, auto_grid
from .integrator import RunClass, RunOutcome, data_support, evolve, initial_data
from .operators import NonlinearityKind, NonlinearitySpec
from .params import PhysParams, SolverConfig, nonlinear_eta

MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class DecayFit:
    exponent: float
    intercept: float
    window: tuple[float, float]
    rms_residual: float
    n_samples: int


def default_window(horizon: float) -> tuple[float, float]:
    return (max(10.0, horizon / 20.0), horizon)


def fit_decay(series: Iterable[tuple[float, float]], window: Optional[tuple[float, float]] = None) -> DecayFit:
    """Least-squares slope of ``log value`` against ``log(1 + t)`` over ``window`` (inclusive)."""
    pts = np.asarray(list(series), dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] == 0:
        raise ValueError("empty series")
    if window is None:
        window = default_window(float(pts[:, 0].max()))
    lo, hi = window
    if lo < 1:
        raise ValueError(f"fit window must start at t >= 1, got {lo}")
    if hi <= lo:
        raise ValueError(f"empty fit window ({lo}, {hi})")
    sel = pts[(pts[:, 0] >= lo) & (pts[:, 0] <= hi)]
    if sel.shape[0] < MIN_FIT_SAMPLES:
        raise ValueError(f"fit window holds {sel.shape[0]} samples, need >= {MIN_FIT_SAMPLES}")
    if np.any(~(sel[:, 1] > 0)):
        raise ValueError("fit requires strictly positive values in the window")
    x = np.log1p(sel[:, 0])
    y = np.log(sel[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return DecayFit(float(slope), float(intercept), (float(lo), float(hi)),
                    float(np.sqrt(np.mean(resid ** 2))), int(sel.shape[0]))


def energy_norm_series(records: Sequence[EnergyRecord]) -> list[tuple[float, float]]:
    return [(r.t, r.energy_norm) for r in records]


def bundle_norm_series(records: Sequence[EnergyRecord]) -> list[tuple[float, float]]:
    return [(r.t, math.sqrt(r.bundle)) for r in records]


# ---------------------------------------------------------------------------
# critical exponents
# ---------------------------------------------------------------------------

def glassey_exponent(n: int) -> float:
    if n <= 1:
        raise ValueError(f"Glassey exponent needs n >= 2, got {n}")
    return 1.0 + 2.0 / (n - 1)


def shifted_glassey(n: int, mu: float) -> float:
    d = n - 1 + mu
    if not d > 0:
        raise ValueError(f"need n - 1 + mu > 0, got {d}")
    return 1.0 + 2.0 / d


@dataclass(frozen=True)
class Threshold:
    """Global existence holds for ``p > value`` (``strict``) or ``p >= value``."""

    value: float
    strict: bool

    def admits(self, p: float) -> bool:
        return p > self.value if self.strict else p >= self.value


def predicted_existence_threshold(n: int, mu: float) -> Threshold:
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu}")
    if n == 1:
        return Threshold(1.0 + 2.0 / min(2.0, mu), True)
    if n in (2, 3):
        if mu <= 1:
            return Threshold(1.0 + 2.0 / mu, True)
        return Threshold(3.0, False)
    raise ValueError(f"dimension must be 1, 2 or 3, got {n}")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

@dataclass
class SweepCell:
    mu: float
    p: float
    eps: float
    classification: RunClass
    t_star: Optional[float] = None
    fit: Optional[DecayFit] = None
    error: Optional[str] = None
    flagged: bool = False

    @property
    def label(self) -> str:
        return "error" if self.error else self.classification.value


@dataclass(frozen=True)
class Bracket:
    mu: float
    low: Optional[float]
    high: Optional[float]
    open: bool
    note: str = ""

    def contains(self, p: float) -> bool:
        return not self.open and self.low <= p <= self.high

    @property
    def width(self) -> float:
        return math.inf if self.open else self.high - self.low


@dataclass
class SweepResult:
    cells: dict[tuple[float, float], SweepCell] = field(default_factory=dict)
    brackets: dict[float, Bracket] = field(default_factory=dict)

    def rows(self) -> list[SweepCell]:
        return [self.cells[k] for k in sorted(self.cells)]


@dataclass(frozen=True)
class SweepSetup:
    """Everything but ``(mu, p)`` for one sweep cell."""

    family: str = "compact_bump"
    width: float = 1.0
    which: str = "both"
    spacing: float = 0.1
    dim_mode: str = "line1d"
    kind: NonlinearityKind = NonlinearityKind.UNSIGNED_POWER


def _cell_params(mu: float, p: float, setup: SweepSetup) -> PhysParams:
    eta = nonlinear_eta(p) if mu == 2 else 0.5
    return PhysParams(mu, NonlinearitySpec(setup.kind, p), setup.dim_mode, eta)


def _sweep_grid(setup: SweepSetup, config: SolverConfig) -> Grid:
    return auto_grid(setup.dim_mode, setup.spacing, data_support(setup.family, setup.width), config.t_max)


def run_cell(mu: float, p: float, eps: float, config: SolverConfig, setup: SweepSetup,
             grid: Optional[Grid] = None) -> tuple[SweepCell, RunOutcome | None]:
    try:
        params = _cell_params(mu, p, setup)
        if grid is None:
            grid = _sweep_grid(setup, config)
        u0, u1 = initial_data(setup.family, eps, setup.width, grid, setup.which)
        out = evolve(u0, u1, params, config)
    except (ValueError, ArithmeticError) as exc:
        return SweepCell(mu, p, eps, RunClass.INCONCLUSIVE, error=str(exc)), None
    cell = SweepCell(mu, p, eps, out.classification, t_star=out.t_star)
    if out.classification is RunClass.GLOBAL:
        try:
            cell.fit = fit_decay(energy_norm_series(out.records), default_window(config.t_max))
        except ValueError:
            cell.fit = None
    return cell, out


def _bracket(mu: float, row: list[SweepCell]) -> Bracket:
    classes = [c.classification for c in row]
    for a, b in zip(row, row[1:]):
        if a.classification is RunClass.BLOWUP and b.classification is RunClass.GLOBAL:
            return Bracket(mu, a.p, b.p, False)
    if all(c is RunClass.GLOBAL for c in classes):
        return Bracket(mu, None, row[0].p, True, "all global")
    if all(c is RunClass.BLOWUP for c in classes):
        return Bracket(mu, row[-1].p, None, True, "all blowup")
    # flip across inconclusive cells: bracket the last blowup and the first later global
    blow = [c.p for c in row if c.classification is RunClass.BLOWUP]
    glob = [c.p for c in row if c.classification is RunClass.GLOBAL and (not blow or c.p > blow[-1])]
    if blow and glob:
        return Bracket(mu, blow[-1], glob[0], False, "inconclusive cells inside bracket")
    return Bracket(mu, None, None, True, "no blowup-to-global flip")


def _flag_reversions(row: list[SweepCell]) -> None:
    """Relabel blowups that follow a global cell as inconclusive (non-monotone row)."""
    seen_global = False
    for c in row:
        if c.classification is RunClass.GLOBAL:
            seen_global = True
        elif seen_global and c.classification is RunClass.BLOWUP:
            c.classification = RunClass.INCONCLUSIVE
            c.flagged = True


def run_sweep(mu_values: Sequence[float], p_values: Sequence[float], eps: float,
              base_config: SolverConfig, setup: SweepSetup = SweepSetup(), threads: int = 1,
              progress: Optional[Callable[[SweepCell], None]] = None) -> SweepResult:
    if len(mu_values) == 0 or len(p_values) == 0:
        raise ValueError("mu_values and p_values must be non-empty")
    if list(p_values) != sorted(p_values):
        raise ValueError("p_values must be sorted ascending")
    if len(set(p_values)) != len(p_values):
        raise ValueError("p_values must be distinct")
    grid = _sweep_grid(setup, base_config)
    jobs = [(float(mu), float(p)) for mu in mu_values for p in p_values]

    def work(job):
        cell, _ = run_cell(job[0], job[1], eps, base_config, setup, grid)
        if progress is not None:
            progress(cell)
        return cell

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            cells = list(pool.map(work, jobs))
    else:
        cells = [work(j) for j in jobs]

    res = SweepResult()
    for c in cells:
        res.cells[(c.mu, c.p)] = c
    for mu in dict.fromkeys(float(m) for m in mu_values):
        row = [res.cells[(mu, float(p))] for p in p_values]
        _flag_reversions(row)
        res.brackets[mu] = _bracket(mu, row)
    return res


def predicted_norm_exponent(params: PhysParams) -> float:
    return decay_law(params).predicted_norm_exponent


def with_horizon(config: SolverConfig, t_max: float) -> SolverConfig:
    return replace(config, t_max=t_max)
