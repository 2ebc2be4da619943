import math

import numpy as np
import pytest

from scalewave import _kernels
from scalewave.analysis import energy_norm_series, fit_decay
from scalewave.grid import Field, State, auto_grid, l2_norm, make_grid
from scalewave.integrator import (RunClass, duhamel_residual, evolve, initial_data, propagate_homogeneous,
                                  step)
from scalewave.operators import NonlinearitySpec
from scalewave.energy import lyapunov_monotone
from scalewave.params import PhysParams, SolverConfig


def bump_grid(t_max, h=0.1):
    return auto_grid("line1d", h, 1.0, t_max)


def test_initial_data_examples():
    g = make_grid("line1d", 10.0, 2001)
    u0, u1 = initial_data("gaussian", 0.0, 1.0, g)
    assert np.all(u0.values == 0) and np.all(u1.values == 0)
    u0, _ = initial_data("compact_bump", 1.0, 1.0, g, "u0_only")
    assert u0.values[1000] == 1.0
    assert np.all(u0.values[np.abs(g.nodes) >= 1] == 0)
    _, u1 = initial_data("gaussian", 0.01, 1.0, g, "u1_only")
    assert l2_norm(u1) == pytest.approx(0.01 * (math.pi / 2) ** 0.25, rel=1e-10)
    u0, u1 = initial_data("gaussian", 0.5, 1.0, g, "u1_only")
    assert np.all(u0.values == 0)


def test_initial_data_errors():
    g = make_grid("line1d", 2.0, 101)
    with pytest.raises(ValueError):
        initial_data("gaussian", 1.0, 3.0, g)
    with pytest.raises(ValueError):
        initial_data("gaussian", -1.0, 1.0, g)
    with pytest.raises(ValueError):
        initial_data("gaussian", 1.0, 0.0, g)


def test_step_zero_state():
    g = make_grid("line1d", 5.0, 101)
    st = step(State(0.0, Field.zeros(g), Field.zeros(g)), PhysParams(1.0), 0.01)
    assert st.t == 0.01
    assert np.all(st.u.values == 0) and np.all(st.v.values == 0)


def test_step_rejects_bad_dt():
    g = make_grid("line1d", 5.0, 101)
    with pytest.raises(ValueError):
        step(State(0.0, Field.zeros(g), Field.zeros(g)), PhysParams(1.0), 0.0)


def test_stiff_damping_decays_velocity():
    g = make_grid("line1d", 5.0, 201)
    _, u1 = initial_data("gaussian", 1.0, 1.0, g, "u1_only")
    st = State(0.0, Field.zeros(g), u1)
    params = PhysParams(50.0)
    dt = 0.2 * g.spacing
    # v ~ (1+t)^-50 until it meets the quasi-static level (1+t) lap u / mu near t = 0.17
    norms = [l2_norm(st.v)]
    for _ in range(12):
        st = step(st, params, dt)
        norms.append(l2_norm(st.v))
    assert all(b < a for a, b in zip(norms, norms[1:]))
    assert norms[-1] < 0.01 * norms[0]
    # against a dt/8 reference the error is fourth order in dt
    def run(n):
        s = State(0.0, Field.zeros(g), u1)
        for _ in range(n):
            s = step(s, params, 12 * dt / n)
        return s.v

    ref = run(96)
    e1, e2 = l2_norm(run(12) - ref), l2_norm(run(24) - ref)
    assert e1 < 1e-2 * l2_norm(ref)
    assert e1 / e2 > 12


def _dalembert_error(h):
    # undamped wave, u1 = 0: u(t, x) = (f(x - t) + f(x + t)) / 2
    ext = 12.0
    n = int(round(2 * ext / h)) + 1
    g = make_grid("line1d", ext, n)
    f = lambda x: np.exp(-x ** 2)  # noqa: E731
    u, v = f(g.nodes), np.zeros(n)
    T = 4.0
    steps = int(round(T / (0.4 * h)))
    _kernels.advance_kernel(u, v, 0, steps, T / steps, 0.0, 0.0, _kernels.NONE, 1.0, 1, g.spacing, math.inf)
    exact = 0.5 * (f(g.nodes - T) + f(g.nodes + T))
    return l2_norm(Field(g, u - exact))


def test_dalembert_second_order():
    e1, e2 = _dalembert_error(0.1), _dalembert_error(0.05)
    assert e1 < 1e-2
    assert math.log2(e1 / e2) >= 1.9


def test_evolve_zero_data():
    g = bump_grid(10.0)
    u0, u1 = initial_data("compact_bump", 0.0, 1.0, g)
    params = PhysParams(1.0, NonlinearitySpec("unsigned_power", 2.0))
    out = evolve(u0, u1, params, SolverConfig(t_max=10.0))
    assert out.classification is RunClass.GLOBAL
    assert all(r.bundle == 0 and r.E0 == 0 for r in out.records)
    assert np.all(out.final_state.u.values == 0)


def test_evolve_extent_precondition():
    g = make_grid("line1d", 5.0, 101)
    u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
    with pytest.raises(ValueError, match="extent"):
        evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=10.0))


def test_cfl_guard():
    with pytest.raises(ValueError):
        SolverConfig(cfl=0.9)


def test_records_strictly_increasing():
    g = bump_grid(10.0)
    u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
    out = evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=10.0, sample_every=7))
    t = [r.t for r in out.records]
    assert all(b > a for a, b in zip(t, t[1:]))
    assert out.final_state.t == 10.0


def test_chunking_does_not_change_solution():
    g = bump_grid(8.0)
    u0, u1 = initial_data("compact_bump", 0.1, 1.0, g)
    params = PhysParams(1.5, NonlinearitySpec("signed_power", 2.5))
    a = evolve(u0, u1, params, SolverConfig(t_max=8.0, sample_every=1))
    b = evolve(u0, u1, params, SolverConfig(t_max=8.0, sample_every=100, n_snapshots=0))
    assert a.classification is RunClass.GLOBAL
    assert a.n_steps == b.n_steps
    assert np.array_equal(a.final_state.u.values, b.final_state.u.values)


def test_global_nonlinear_run_decays():
    t_max = 100.0
    g = bump_grid(t_max)
    u0, u1 = initial_data("compact_bump", 1e-3, 1.0, g)
    params = PhysParams(1.0, NonlinearitySpec("unsigned_power", 3.5))
    out = evolve(u0, u1, params, SolverConfig(t_max=t_max))
    assert out.classification is RunClass.GLOBAL
    fit = fit_decay(energy_norm_series(out.records), (10.0, t_max))
    assert fit.exponent < -0.3


def test_blowup_detected_and_confirmed():
    g = bump_grid(20.0)
    u0, u1 = initial_data("compact_bump", 0.5, 1.0, g)
    params = PhysParams(1.0, NonlinearitySpec("unsigned_power", 2.0))
    out = evolve(u0, u1, params, SolverConfig(t_max=20.0))
    assert out.classification is RunClass.BLOWUP
    assert 0 < out.t_star <= 20.0
    assert abs(out.t_star_refined - out.t_star) <= 0.05 * out.t_star
    assert out.final_state is None
    assert all(np.isfinite(r.bundle) for r in out.records)


def test_blowup_without_confirmation():
    g = bump_grid(20.0)
    u0, u1 = initial_data("compact_bump", 0.5, 1.0, g)
    params = PhysParams(1.0, NonlinearitySpec("unsigned_power", 2.0))
    out = evolve(u0, u1, params, SolverConfig(t_max=20.0, confirm_refinement=False))
    assert out.classification is RunClass.BLOWUP and out.t_star_refined is None


def test_finite_propagation_speed():
    t_max = 15.0
    g = bump_grid(t_max)
    u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
    out = evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=t_max, n_snapshots=15))
    x = np.abs(g.nodes)
    leak = {}
    for snap in out.snapshots:
        outside = x > 1.0 + snap.t + 2 * g.spacing
        leak[snap.t] = max(np.max(np.abs(snap.u.values[outside]), initial=0.0),
                           np.max(np.abs(snap.v.values[outside]), initial=0.0))
    worst = max(leak, key=leak.get)
    assert leak[worst] < 1e-10, f"max |u|, |u_t| outside the cone is {leak[worst]:.3e} at t={worst:g}"


def test_dispersive_precursor_shrinks_with_h():
    # the three-point scheme leaks a dispersive precursor ahead of the cone;
    # at a fixed distance past it the leak falls off faster than any power of h
    t_max = 15.0
    leak = []
    for h in (0.1, 0.05, 0.025):
        g = auto_grid("line1d", h, 1.0, t_max)
        u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
        out = evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=t_max))
        leak.append(np.max(np.abs(out.final_state.u.values[np.abs(g.nodes) > 2.0 + t_max])))
    assert leak[0] > 1e3 * leak[1] > 1e6 * leak[2]
    assert leak[2] < 1e-10


def test_propagate_identity_and_zero():
    g = bump_grid(5.0)
    data = initial_data("compact_bump", 1.0, 1.0, g)
    st = propagate_homogeneous(2.0, 2.0, data, PhysParams(1.0))
    assert np.array_equal(st.u.values, data[0].values) and st.t == 2.0
    z = propagate_homogeneous(0.0, 3.0, (Field.zeros(g), Field.zeros(g)), PhysParams(1.0))
    assert np.all(z.u.values == 0) and np.all(z.v.values == 0)


def test_propagate_errors():
    g = bump_grid(5.0)
    data = initial_data("compact_bump", 1.0, 1.0, g)
    with pytest.raises(ValueError):
        propagate_homogeneous(2.0, 1.0, data, PhysParams(1.0))
    with pytest.raises(ValueError):
        propagate_homogeneous(0.0, 1.0, data, PhysParams(1.0, NonlinearitySpec("unsigned_power", 2.0)))
    with pytest.raises(ValueError):
        propagate_homogeneous(0.0, 1.0, data, PhysParams(1.0), dt=0.3)


def test_propagate_matches_evolve_bitwise():
    t_max = 6.0
    g = bump_grid(t_max)
    u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
    out = evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=t_max))
    st = propagate_homogeneous(0.0, t_max, (u0, u1), PhysParams(1.0), dt=out.dt)
    assert np.array_equal(st.u.values, out.final_state.u.values)


def test_semigroup_composition():
    params = PhysParams(1.0)
    s, t = 2.0, 5.0

    def run(h):
        ext = 9.0
        g = make_grid("line1d", ext, int(round(2 * ext / h)) + 1)
        data = initial_data("compact_bump", 1.0, 1.0, g)
        mid = propagate_homogeneous(0.0, s, data, params)
        comp = propagate_homogeneous(s, t, (mid.u, mid.v), params)
        direct = propagate_homogeneous(0.0, t, data, params)
        return comp, direct

    comp, direct = run(0.1)
    _, ref = run(0.025)
    single_err = l2_norm(Field(direct.grid, direct.u.values - ref.u.values[::4]))
    assert l2_norm(comp.u - direct.u) <= 2 * single_err


def test_propagator_decay_factor_mu1():
    # ||(grad u, v)(t)||^2 <= C (1+s)/(1+t) ||(grad u, v)(s)||^2 with a run-fitted C
    t_max = 100.0
    g = bump_grid(t_max)
    data = initial_data("compact_bump", 1.0, 1.0, g)
    params = PhysParams(1.0)
    out = evolve(*data, params, SolverConfig(t_max=t_max, sample_every=25))
    t = np.array([r.t for r in out.records])
    e = np.array([r.energy_norm ** 2 for r in out.records])
    g_w = e * (1 + t)
    c_fit = np.max(g_w / np.minimum.accumulate(g_w))
    assert math.isfinite(c_fit) and c_fit < 10


def test_duhamel_homogeneous_is_exact():
    t_max = 10.0
    g = bump_grid(t_max)
    u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
    out = evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=t_max, n_snapshots=8))
    assert duhamel_residual(out, PhysParams(1.0), 8) < 1e-10


def test_duhamel_errors():
    t_max = 10.0
    g = bump_grid(t_max)
    u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
    out = evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=t_max, n_snapshots=8))
    with pytest.raises(ValueError):
        duhamel_residual(out, PhysParams(1.0), 2)
    with pytest.raises(ValueError):
        duhamel_residual(out, PhysParams(1.0), 16)
    with pytest.raises(ValueError):
        duhamel_residual(out, PhysParams(1.0), 5)
    bare = evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=t_max))
    with pytest.raises(ValueError):
        duhamel_residual(bare, PhysParams(1.0), 4)


def test_derivative_records_present():
    g = bump_grid(5.0)
    u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
    out = evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=5.0, derivative_levels=True))
    assert set(out.derivative_records) == {"gradient", "laplacian"}
    assert len(out.derivative_records["gradient"]) == len(out.records)


@pytest.mark.parametrize("mode", ["radial2d", "radial3d"])
def test_radial_runs(mode):
    # the radial Laplacian is not the exact partner of the gradient norm, so the
    # Lyapunov functional is monotone only up to a discretization error
    params = PhysParams(1.0, dim_mode=mode)
    rise = []
    for h in (0.1, 0.05, 0.025):
        g = auto_grid(mode, h, 1.0, 4.0)
        u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
        out = evolve(u0, u1, params, SolverConfig(t_max=4.0, sample_every=1))
        assert out.classification is RunClass.GLOBAL
        lyap = np.array([r.lyapunov for r in out.records])
        rise.append(np.max(np.diff(lyap) / lyap[:-1]))
    assert rise[0] > 8 * rise[1]
    assert lyapunov_monotone(out.records, params)


def test_grid_params_mismatch():
    g = auto_grid("radial3d", 0.1, 1.0, 5.0)
    u0, u1 = initial_data("compact_bump", 1.0, 1.0, g)
    with pytest.raises(ValueError):
        evolve(u0, u1, PhysParams(1.0), SolverConfig(t_max=5.0))
