import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riccicone.diagnostics import (DiagnosticsError, ResidualSeries, contracted_identity, convergence_order,
                                   default_margin, discrete_holder_seminorm, monitor_row, r_min_tracker,
                                   ricci_evolution_residual, ricci_weight_monitor, richardson,
                                   scalar_evolution_residual, time_derivative, tol_pos, weighted_sup)
from riccicone.flow import FlowConfig, run_flow
from riccicone.geometry import RadialGrid, WarpedMetric

N3 = 3
SPHERE = dict(n=N3, profile="shrinking_sphere", x_min=0.05, x_max=math.pi - 0.05)


def test_weighted_sup_examples():
    x = np.linspace(0.01, 1.0, 100)
    assert math.isclose(weighted_sup(x ** 1.5, 1.5, x), 1.0)
    assert weighted_sup(np.zeros(100), 2.0, x) == 0.0
    assert math.isclose(weighted_sup(x ** 2.0, 1.5, x, margin=0), 1.0)


def test_weighted_sup_window():
    x = np.linspace(0.1, 1.0, 10)
    f = np.arange(10.0)
    assert weighted_sup(f, 0, x, margin=0, window=(0.25, 0.55)) == 4.0


def test_holder_examples():
    x = np.linspace(0.0, 1.0, 201)
    assert discrete_holder_seminorm(np.full(201, 2.0), 0.5, x) == 0.0
    f = 3 * x
    assert math.isclose(discrete_holder_seminorm(f, 0.0, x), 3.0)
    xf = np.linspace(0.0, 1.0, 4001)
    v = discrete_holder_seminorm(np.sqrt(xf), 0.5, xf)
    assert 1.0 <= v <= 1.01


def test_holder_rejects_alpha():
    with pytest.raises(ValueError):
        discrete_holder_seminorm(np.ones(3), 1.0, np.arange(3.0))


@given(st.lists(st.floats(0.01, 1.0), min_size=2, max_size=10), st.floats(-3, 3), st.floats(-3, 3))
def test_time_derivative_exact_on_quadratics(gaps, a, b):
    t = np.concatenate([[0.0], np.cumsum(gaps)])
    levels = [np.array([a * s * s + b * s + 1.0]) for s in t]
    d = time_derivative(levels, t)
    for s, v in zip(t, d):
        assert math.isclose(v[0], 2 * a * s + b, rel_tol=1e-8, abs_tol=1e-8 * (1 + abs(a) + abs(b)))


def test_time_derivative_needs_three_levels():
    with pytest.raises(DiagnosticsError):
        time_derivative([np.zeros(2)] * 2, np.arange(2.0))


def test_richardson_removes_leading_terms():
    # node residuals c0 + c2 tau^2 + c4 tau^4 at common steps
    def series(tau_steps):
        steps = np.arange(0, 33, tau_steps)
        tau = tau_steps / 8
        nodes = [np.full(5, 0.5 + 3 * tau ** 2 - 2 * tau ** 4) for _ in steps]
        return ResidualSeries(steps * 1.0, steps, np.array([n.max() for n in nodes]), nodes, {"margin": 0})
    r = richardson([series(8), series(4), series(2)])
    assert np.allclose(r.values, 0.5, atol=1e-12)


def test_richardson_rejects_missing_steps():
    a = ResidualSeries(np.arange(3.0), np.array([0, 4, 8]), np.zeros(3), [np.zeros(2)] * 3, {})
    b = ResidualSeries(np.arange(3.0), np.array([0, 3, 6]), np.zeros(3), [np.zeros(2)] * 3, {})
    with pytest.raises(DiagnosticsError):
        richardson([a, b])


def test_convergence_order():
    assert np.allclose(convergence_order([1.0, 0.25, 0.0625]), [2.0, 2.0])


def test_tol_pos():
    assert tol_pos(0.0) == 1e-12
    assert tol_pos(12.0) == 1.2e-5


def test_default_margin():
    x = np.linspace(0.1, 1, 30)
    assert default_margin(RadialGrid(x, 1.0, 2)) == 2
    assert default_margin(RadialGrid(x, 1.0, 4)) == 4
    assert default_margin(RadialGrid(x, 1.0, 6)) == 6


# ---------------------------------------------------------------------------
# residuals on closed-form solutions


@pytest.fixture(scope="module")
def cone_traj():
    return run_flow(FlowConfig(n=N3, N=200, t_end=1e-3, store_every=20))


@pytest.fixture(scope="module")
def sphere_trajs():
    base = FlowConfig(N=100, t_end=0.01, dt=0.01 / 128, store_every=32, stencil_order=6, **SPHERE)
    return [run_flow(replace(base, store_every=e)) for e in (32, 16, 8)]


def test_cone_residuals_vanish(cone_traj):
    # the cone is stationary, so only stencil error of the time derivative remains
    assert scalar_evolution_residual(cone_traj).max() < 1e-5
    assert ricci_evolution_residual(cone_traj).max() < 1e-5


def test_sphere_residual_is_time_discretisation_only(sphere_trajs):
    raw = [scalar_evolution_residual(t) for t in sphere_trajs]
    # halving the store spacing reduces the residual about fourfold
    ratio = raw[0].max() / raw[1].max()
    assert 3.0 < ratio < 5.0
    ext = richardson(raw, grid=sphere_trajs[0].grid.nodes)
    assert ext.max() < 1e-3 * raw[0].max()


def test_sphere_ricci_residual(sphere_trajs):
    raw = [ricci_evolution_residual(t) for t in sphere_trajs]
    assert max(r.max() for r in raw) < 1e-6


def test_residual_meta(sphere_trajs):
    r = scalar_evolution_residual(sphere_trajs[0], weight=0.5, window=(0.5, 2.5))
    assert r.meta["identity"] == "scalar" and r.meta["margin"] == 6 and r.meta["window"] == (0.5, 2.5)


@pytest.mark.parametrize("N", [100, 200, 400])
def test_contracted_identity(N):
    # holds at the discrete level up to roundoff in the fourth derivatives
    G = RadialGrid(np.linspace(0.3, 2.0, N + 1), 1.0, 4)
    x = G.nodes
    g = WarpedMetric(G, 1 + 0.1 * np.sin(x), x * (1 + 0.1 * np.cos(2 * x)))
    assert contracted_identity(g, N3, margin=6) < 1e-8


# ---------------------------------------------------------------------------
# monitors


def test_r_min_sphere():
    tr = run_flow(FlowConfig(N=200, t_end=0.02, store_every=40, **SPHERE))
    m = r_min_tracker(tr)
    expected = N3 * (N3 + 1) / (1 - 2 * N3 * m.times)
    assert np.allclose(m.columns["R_min"], expected, rtol=1e-6)
    assert np.all(np.diff(m.columns["R_min"]) > 0)
    assert m.verdict["preserved"] is True and m.verdict["text"] == "positivity preserved"


def test_r_min_cone(cone_traj):
    m = r_min_tracker(cone_traj)
    assert np.max(np.abs(m.columns["R_min"])) < 1e-8


def test_r_min_positive_cone():
    tr = run_flow(FlowConfig(n=N3, profile="positive_cone", amplitude=0.2, boundary="open", t_end=0.01,
                             store_every=100))
    m = r_min_tracker(tr)
    assert m.columns["R_min"][0] > 0
    assert m.verdict["preserved"] is True


def test_r_min_not_applicable():
    tr = run_flow(FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-2, N=60, t_end=1e-4))
    assert r_min_tracker(tr).verdict["applicable"] is False


def test_ricci_monitor_cone(cone_traj):
    m = ricci_weight_monitor(cone_traj, 2.0)
    assert np.max(m.columns["sup_w_ric"]) < 1e-10
    assert m.verdict["bounded"]


def test_ricci_monitor_sphere():
    tr = run_flow(FlowConfig(N=200, t_end=0.02, store_every=40, **SPHERE))
    m = ricci_weight_monitor(tr, 2.0)
    expected = N3 * math.sqrt(N3 + 1) / (1 - 2 * N3 * m.times)
    assert np.allclose(m.columns["sup_w_ric"], expected, rtol=1e-6)


def test_ricci_monitor_rejects_gamma():
    with pytest.raises(ValueError):
        ricci_weight_monitor(None, 0.0)


def test_monitor_row_keys(cone_traj):
    row = monitor_row(cone_traj, cone_traj.states[-1])
    assert set(row) == {"step", "t", "R_min", "R_max", "sup_w_ric", "gamma_hat", "wmax", "dt"}
