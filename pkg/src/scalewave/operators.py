"""Discrete spatial operators, the power nonlinearity and pointwise inequality checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels
from .grid import Field, NonFiniteError, _same_grid


class NonlinearityKind(str, Enum):
    UNSIGNED_POWER = "unsigned_power"
    SIGNED_POWER = "signed_power"

    @property
    def code(self) -> int:
        return _kernels.UNSIGNED if self is NonlinearityKind.UNSIGNED_POWER else _kernels.SIGNED


@dataclass(frozen=True)
class NonlinearitySpec:
    kind: NonlinearityKind
    p: float

    def __post_init__(self):
        object.__setattr__(self, "kind", NonlinearityKind(self.kind))
        if not self.p > 1:
            raise ValueError(f"nonlinearity exponent must be > 1, got {self.p}")


# ---------------------------------------------------------------------------
# differential operators
# ---------------------------------------------------------------------------

def laplacian(f: Field) -> Field:
    """3-point Laplacian (line1d) or ``u_rr + (n-1)/r u_r`` with ``n u_rr`` at ``r = 0``.

    Zero Dirichlet ghost values beyond the outer boundary.
    """
    g = f.grid
    out = np.empty(g.n_points)
    _kernels.np_laplacian(f.values, g.spacing, g.dim, out)
    return Field(g, out)


def gradient(f: Field) -> Field:
    """Central differences, second-order one-sided stencils at both ends."""
    return Field(f.grid, np.gradient(f.values, f.grid.spacing, edge_order=2))


def grad_l2_norm(f: Field) -> float:
    """Discrete ``||grad u||`` from face differences against the zero ghost nodes.

    On line1d this is the exact summation-by-parts partner of :func:`laplacian`,
    so ``<laplacian(u), v> = -<Du, Dv>`` holds to round-off for Dirichlet data.
    """
    g = f.grid
    u = f.values
    if not np.all(np.isfinite(u)):
        raise NonFiniteError("field contains NaN or Inf")
    h = g.spacing
    if g.dim_mode.radial:
        d = np.diff(np.append(u, 0.0)) / h
    else:
        d = np.diff(np.concatenate(([0.0], u, [0.0]))) / h
    return math.sqrt(float(np.dot(g.midpoint_weights, d * d)))


def apply_nonlinearity(v: Field, spec: NonlinearitySpec) -> Field:
    x = v.values
    if spec.kind is NonlinearityKind.UNSIGNED_POWER:
        out = np.abs(x) ** spec.p
    else:
        out = np.abs(x) ** (spec.p - 1.0) * x
    return Field(v.grid, out)


# ---------------------------------------------------------------------------
# elementary power inequalities
# ---------------------------------------------------------------------------

class PowerVariant(str, Enum):
    ABS_POWER = "abs_power"
    SIGNED_POWER = "signed_power"


def _power(x, p, variant: PowerVariant):
    if variant is PowerVariant.ABS_POWER:
        return np.abs(x) ** p
    return np.abs(x) ** (p - 1.0) * x


def difference_inequality_ratio(a, b, p: float, variant: PowerVariant | str = "abs_power"):
    """``|P(a) - P(b)| / ((|a|^(p-1) + |b|^(p-1)) |a - b|)`` elementwise, 0 where ``a == b``."""
    variant = PowerVariant(variant)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lhs = np.abs(_power(a, p, variant) - _power(b, p, variant))
    rhs = (np.abs(a) ** (p - 1.0) + np.abs(b) ** (p - 1.0)) * np.abs(a - b)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(rhs > 0, lhs / np.where(rhs > 0, rhs, 1.0), 0.0)


def check_difference_inequality(a, b, p: float, C: float, variant: PowerVariant | str = "abs_power") -> bool:
    """Whether ``|P(a) - P(b)| <= C (|a|^(p-1) + |b|^(p-1)) |a - b|`` for every pair given."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    variant = PowerVariant(variant)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    lhs = np.abs(_power(a, p, variant) - _power(b, p, variant))
    rhs = (np.abs(a) ** (p - 1.0) + np.abs(b) ** (p - 1.0)) * np.abs(a - b)
    # relative slack absorbs rounding in equality cases such as b = 0, p = 2
    return bool(np.all(lhs <= C * rhs * (1.0 + 1e-12)))


# ---------------------------------------------------------------------------
# composition bounds for F(u) = |u|^p and G(u) = |u|^(p-1) u
# ---------------------------------------------------------------------------

# max/min magnitude ratio allowed across a stencil for a node to be checked
DEFAULT_CONTRAST = 1.5


class CompositionVariant(str, Enum):
    F = "F"
    G = "G"


def _compose(x, p, variant: CompositionVariant):
    if variant is CompositionVariant.F:
        return np.abs(x) ** p
    return np.abs(x) ** (p - 1.0) * x


def _admissible_nodes(u: np.ndarray, v: np.ndarray, contrast: float) -> np.ndarray:
    """Interior nodes where ``u``, ``v`` and ``u - v`` are all resolved by the 3-point stencil.

    The power maps are not smooth at zero and a difference quotient only follows
    the chain rule where the field varies slowly across the stencil. The
    difference enters the right-hand sides, so it is screened too: where it has
    a near-double zero the right side vanishes while the discrete left side keeps
    an O(h^2) defect. A node is kept when, for each field, the three stencil
    values share a strict sign and their max/min magnitude ratio is at most
    ``contrast``, or the field vanishes identically on the stencil.
    """
    mask = np.zeros(u.shape[0], dtype=bool)
    mask[1:-1] = True
    for w in (u, v, u - v):
        st = np.stack([w[:-2], w[1:-1], w[2:]])
        s = np.sign(st)
        flat = np.all(st == 0, axis=0)
        same = np.all(s == s[1], axis=0) & (s[1] != 0)
        a = np.abs(st)
        with np.errstate(divide="ignore", invalid="ignore"):
            smooth = a.max(axis=0) <= contrast * a.min(axis=0)
        mask[1:-1] &= flat | (same & smooth)
    return mask


def _less_rounding(lhs: np.ndarray, Fu: np.ndarray, Fv: np.ndarray, scale: float) -> np.ndarray:
    """Subtract the floating-point noise of difference quotients of ``Fu`` and ``Fv``.

    A quotient over ``scale = h`` (or ``h^2``) carries an absolute rounding error of
    a few ulps of ``|F|`` divided by ``scale``; below that level both sides of the
    bound are noise (e.g. at critical points where ``grad u = 0``).
    """
    noise = 16.0 * np.finfo(np.float64).eps * (np.max(np.abs(Fu)) + np.max(np.abs(Fv))) / scale
    return np.maximum(lhs - noise, 0.0)


def gradient_composition_sides(u: Field, v: Field, p: float, variant: CompositionVariant | str = "F",
                               contrast: float = DEFAULT_CONTRAST):
    """Pointwise LHS and unit-constant RHS of the gradient composition bound.

    Returns ``(lhs, rhs, mask)`` where ``mask`` selects the nodes that are checked.
    ``lhs`` is net of the rounding noise of the difference quotients.
    """
    if p < 2:
        raise ValueError(f"gradient composition bound needs p >= 2, got {p}")
    _same_grid(u, v)
    variant = CompositionVariant(variant)
    h = u.grid.spacing
    uu, vv = u.values, v.values
    d = lambda w: np.gradient(w, h, edge_order=2)  # noqa: E731
    Fu, Fv = _compose(uu, p, variant), _compose(vv, p, variant)
    lhs = _less_rounding(np.abs(d(Fu) - d(Fv)), Fu, Fv, h)
    au, av = np.abs(uu), np.abs(vv)
    rhs = (au ** (p - 1.0) * np.abs(d(uu - vv))
           + np.abs(d(vv)) * (au ** (p - 2.0) + av ** (p - 2.0)) * np.abs(uu - vv))
    return lhs, rhs, _admissible_nodes(uu, vv, contrast)


def laplacian_composition_sides(u: Field, v: Field, p: float, variant: CompositionVariant | str = "F",
                                contrast: float = DEFAULT_CONTRAST):
    """Pointwise LHS and unit-constant four-term RHS of the Laplacian composition bound."""
    if p < 3:
        raise ValueError(f"Laplacian composition bound needs p >= 3, got {p}")
    _same_grid(u, v)
    variant = CompositionVariant(variant)
    g = u.grid
    uu, vv = u.values, v.values
    lap = lambda w: laplacian(Field(g, w)).values  # noqa: E731
    grad = lambda w: np.gradient(w, g.spacing, edge_order=2)  # noqa: E731
    Fu, Fv = _compose(uu, p, variant), _compose(vv, p, variant)
    lhs = _less_rounding(np.abs(lap(Fu) - lap(Fv)), Fu, Fv, g.spacing ** 2)
    au, av = np.abs(uu), np.abs(vv)
    diff = np.abs(uu - vv)
    gu, gv = np.abs(grad(uu)), np.abs(grad(vv))
    rhs = (au ** (p - 1.0) * np.abs(lap(uu - vv))
           + np.abs(lap(vv)) * (au ** (p - 2.0) + av ** (p - 2.0)) * diff
           + au ** (p - 2.0) * (gu + gv) * np.abs(grad(uu - vv))
           + gv ** 2 * (au ** (p - 3.0) + av ** (p - 3.0)) * diff)
    return lhs, rhs, _admissible_nodes(uu, vv, contrast)


def max_ratio(lhs: np.ndarray, rhs: np.ndarray, mask: np.ndarray) -> float:
    """Smallest constant that makes ``lhs <= C * rhs`` on the masked nodes (inf if impossible)."""
    lhs, rhs = lhs[mask], rhs[mask]
    if lhs.size == 0:
        return 0.0
    zero = rhs == 0
    if np.any(lhs[zero] > 0):
        return math.inf
    keep = ~zero
    return float(np.max(lhs[keep] / rhs[keep])) if np.any(keep) else 0.0


def check_gradient_composition_bound(u: Field, v: Field, p: float, C: float,
                                     variant: CompositionVariant | str = "F",
                                     contrast: float = DEFAULT_CONTRAST) -> bool:
    lhs, rhs, mask = gradient_composition_sides(u, v, p, variant, contrast)
    return bool(np.all(lhs[mask] <= C * rhs[mask]))


def check_laplacian_composition_bound(u: Field, v: Field, p: float, C: float,
                                      variant: CompositionVariant | str = "F",
                                      contrast: float = DEFAULT_CONTRAST) -> bool:
    lhs, rhs, mask = laplacian_composition_sides(u, v, p, variant, contrast)
    return bool(np.all(lhs[mask] <= C * rhs[mask]))
