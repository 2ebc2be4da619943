"""Hot loops: discrete Laplacian and multi-step RK4 for the damped wave system.

Two implementations with identical arithmetic order live here. The numba one is
used by default; set ``SCALEWAVE_BACKEND=numpy`` to force the vectorised numpy
path (also used automatically when numba cannot be imported).

State arrays are updated in place. Time of step ``k`` is always computed as
``t_origin + k * dt`` so that chunked and one-shot marches agree bit for bit.
"""

from __future__ import annotations

import os

import numpy as np

NONE, UNSIGNED, SIGNED = 0, 1, 2


# ---------------------------------------------------------------------------
# numpy
# ---------------------------------------------------------------------------

def np_laplacian(u, h, dim, out):
    inv_h2 = 1.0 / (h * h)
    n = u.shape[0]
    if dim == 1:
        out[0] = (0.0 - 2.0 * u[0] + u[1]) * inv_h2
        out[1:n - 1] = (u[:n - 2] - 2.0 * u[1:n - 1] + u[2:]) * inv_h2
        out[n - 1] = (u[n - 2] - 2.0 * u[n - 1] + 0.0) * inv_h2
        return out
    inv_2h = 1.0 / (2.0 * h)
    right = np.empty(n)
    right[:n - 1] = u[1:]
    right[n - 1] = 0.0
    left = u[:n - 1]
    coef = (dim - 1.0) / (np.arange(1, n) * h)
    out[0] = dim * 2.0 * (u[1] - u[0]) * inv_h2
    out[1:] = (left - 2.0 * u[1:] + right[1:]) * inv_h2 + coef * (right[1:] - left) * inv_2h
    return out


def _np_force(v, kind, p):
    if kind == UNSIGNED:
        return np.abs(v) ** p
    if kind == SIGNED:
        return np.abs(v) ** (p - 1.0) * v
    return None


def _np_rhs(u, v, damp, kind, p, dim, h, lap, ku, kv):
    np_laplacian(u, h, dim, lap)
    ku[:] = v
    f = _np_force(v, kind, p)
    if f is None:
        kv[:] = lap - damp * v
    else:
        kv[:] = lap - damp * v + f


def np_advance(u, v, i0, n_steps, dt, t_origin, mu, kind, p, dim, h, threshold):
    """Advance ``n_steps`` RK4 steps; stop early once ``max|v| > threshold`` (or non-finite).

    Returns ``(steps_taken, crossed)``.
    """
    n = u.shape[0]
    lap = np.empty(n)
    k1u, k1v = np.empty(n), np.empty(n)
    k2u, k2v = np.empty(n), np.empty(n)
    k3u, k3v = np.empty(n), np.empty(n)
    k4u, k4v = np.empty(n), np.empty(n)
    half = 0.5 * dt
    dt6 = dt / 6.0
    for s in range(n_steps):
        t = t_origin + (i0 + s) * dt
        _np_rhs(u, v, mu / (1.0 + t), kind, p, dim, h, lap, k1u, k1v)
        _np_rhs(u + half * k1u, v + half * k1v, mu / (1.0 + (t + half)), kind, p, dim, h, lap, k2u, k2v)
        _np_rhs(u + half * k2u, v + half * k2v, mu / (1.0 + (t + half)), kind, p, dim, h, lap, k3u, k3v)
        _np_rhs(u + dt * k3u, v + dt * k3v, mu / (1.0 + (t + dt)), kind, p, dim, h, lap, k4u, k4v)
        u += dt6 * (((k1u + 2.0 * k2u) + 2.0 * k3u) + k4u)
        v += dt6 * (((k1v + 2.0 * k2v) + 2.0 * k3v) + k4v)
        m = np.max(np.abs(v))
        if not m <= threshold:
            return s + 1, True
    return n_steps, False


# ---------------------------------------------------------------------------
# numba
# ---------------------------------------------------------------------------

def _build_numba():
    from numba import njit

    @njit(cache=True, nogil=True)
    def nb_laplacian(u, h, dim, out):
        inv_h2 = 1.0 / (h * h)
        n = u.shape[0]
        if dim == 1:
            out[0] = (0.0 - 2.0 * u[0] + u[1]) * inv_h2
            for i in range(1, n - 1):
                out[i] = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2
            out[n - 1] = (u[n - 2] - 2.0 * u[n - 1] + 0.0) * inv_h2
            return out
        inv_2h = 1.0 / (2.0 * h)
        out[0] = dim * 2.0 * (u[1] - u[0]) * inv_h2
        for i in range(1, n):
            right = u[i + 1] if i < n - 1 else 0.0
            left = u[i - 1]
            coef = (dim - 1.0) / (i * h)
            out[i] = (left - 2.0 * u[i] + right) * inv_h2 + coef * (right - left) * inv_2h
        return out

    @njit(cache=True, nogil=True)
    def _stage(u, v, su, sv, c, damp, kind, p, dim, h, lap, ku, kv):
        # stage input y + c*k written to (su, sv); c == 0 means y itself
        n = u.shape[0]
        if c == 0.0:
            for i in range(n):
                su[i] = u[i]
                sv[i] = v[i]
        nb_laplacian(su, h, dim, lap)
        for i in range(n):
            x = sv[i]
            ku[i] = x
            if kind == 1:
                kv[i] = lap[i] - damp * x + abs(x) ** p
            elif kind == 2:
                kv[i] = lap[i] - damp * x + abs(x) ** (p - 1.0) * x
            else:
                kv[i] = lap[i] - damp * x

    @njit(cache=True, nogil=True)
    def nb_advance(u, v, i0, n_steps, dt, t_origin, mu, kind, p, dim, h, threshold):
        n = u.shape[0]
        lap = np.empty(n)
        su, sv = np.empty(n), np.empty(n)
        k1u, k1v = np.empty(n), np.empty(n)
        k2u, k2v = np.empty(n), np.empty(n)
        k3u, k3v = np.empty(n), np.empty(n)
        k4u, k4v = np.empty(n), np.empty(n)
        half = 0.5 * dt
        dt6 = dt / 6.0
        for s in range(n_steps):
            t = t_origin + (i0 + s) * dt
            _stage(u, v, su, sv, 0.0, mu / (1.0 + t), kind, p, dim, h, lap, k1u, k1v)
            for i in range(n):
                su[i] = u[i] + half * k1u[i]
                sv[i] = v[i] + half * k1v[i]
            _stage(u, v, su, sv, 1.0, mu / (1.0 + (t + half)), kind, p, dim, h, lap, k2u, k2v)
            for i in range(n):
                su[i] = u[i] + half * k2u[i]
                sv[i] = v[i] + half * k2v[i]
            _stage(u, v, su, sv, 1.0, mu / (1.0 + (t + half)), kind, p, dim, h, lap, k3u, k3v)
            for i in range(n):
                su[i] = u[i] + dt * k3u[i]
                sv[i] = v[i] + dt * k3v[i]
            _stage(u, v, su, sv, 1.0, mu / (1.0 + (t + dt)), kind, p, dim, h, lap, k4u, k4v)
            m = 0.0
            finite = True
            for i in range(n):
                u[i] += dt6 * (((k1u[i] + 2.0 * k2u[i]) + 2.0 * k3u[i]) + k4u[i])
                v[i] += dt6 * (((k1v[i] + 2.0 * k2v[i]) + 2.0 * k3v[i]) + k4v[i])
                a = abs(v[i])
                if not a <= threshold:
                    finite = False
                if a > m:
                    m = a
            if not finite:
                return s + 1, True
        return n_steps, False

    return nb_laplacian, nb_advance


try:
    nb_laplacian, nb_advance = _build_numba()
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    nb_laplacian = nb_advance = None
    HAVE_NUMBA = False


BACKENDS = {"numpy": (np_laplacian, np_advance)}
if HAVE_NUMBA:
    BACKENDS["numba"] = (nb_laplacian, nb_advance)


def select_backend(name: str | None = None) -> str:
    name = (name or os.environ.get("SCALEWAVE_BACKEND", "numba")).strip().lower()
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")
    if name == "numba" and not HAVE_NUMBA:
        name = "numpy"
    return name


BACKEND = select_backend()
laplacian_kernel, advance_kernel = BACKENDS[BACKEND]


def use_backend(name: str) -> str:
    """Switch the active kernels at runtime; returns the backend actually selected."""
    global BACKEND, laplacian_kernel, advance_kernel
    BACKEND = select_backend(name)
    laplacian_kernel, advance_kernel = BACKENDS[BACKEND]
    return BACKEND
