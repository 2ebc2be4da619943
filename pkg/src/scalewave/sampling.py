"""Random inputs for the inequality property suites (shared by tests and the constant oracle)."""

from __future__ import annotations

import numpy as np

from .grid import Field, Grid, make_grid

COMPOSITION_EXTENT = 10.0
COMPOSITION_POINTS = 401
MAX_TERMS = 5


def scalar_pairs(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairs ``(a, b)``: log-uniform magnitudes, near-diagonal, antipodal, one-zero and uniform on ``[-10, 10]^2``."""
    def mag(k):
        return 10.0 ** rng.uniform(-3.0, 3.0, k) * rng.choice([-1.0, 1.0], k)

    a = mag(n)
    b = mag(n)
    kind = rng.integers(0, 5, n)
    near = kind == 1
    b[near] = a[near] * (1.0 + rng.choice([-1.0, 1.0], near.sum()) * 10.0 ** rng.uniform(-8.0, 0.0, near.sum()))
    anti = kind == 2
    b[anti] = -a[anti] * (1.0 + 10.0 ** rng.uniform(-8.0, 0.0, anti.sum()))
    zero = kind == 3
    b[zero] = 0.0
    box = kind == 4
    a[box] = rng.uniform(-10.0, 10.0, box.sum())
    b[box] = rng.uniform(-10.0, 10.0, box.sum())
    return a, b


def composition_grid() -> Grid:
    return make_grid("line1d", COMPOSITION_EXTENT, COMPOSITION_POINTS)


def gaussian_sum(rng: np.random.Generator, grid: Grid, max_terms: int = MAX_TERMS) -> Field:
    """Sum of 1 to ``max_terms`` Gaussians with random signed amplitude, centre and width."""
    x = grid.nodes
    k = int(rng.integers(1, max_terms + 1))
    amp = rng.uniform(-1.0, 1.0, k)
    centre = rng.uniform(-5.0, 5.0, k)
    width = rng.uniform(0.5, 2.0, k)
    vals = np.zeros_like(x)
    for a, c, w in zip(amp, centre, width):
        vals += a * np.exp(-((x - c) / w) ** 2)
    return Field(grid, vals)


def field_pairs(rng: np.random.Generator, n: int, grid: Grid | None = None):
    grid = grid or composition_grid()
    for _ in range(n):
        yield gaussian_sum(rng, grid), gaussian_sum(rng, grid)
