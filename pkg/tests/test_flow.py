import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from riccicone.flow import (FlowConfig, FlowState, NumericalFailure, background_metric, choose_dt,
                            exact_solution, initial_metric, load_checkpoint, make_grid, read_checkpoint_meta,
                            read_metric_csv, rtf_rhs, run_flow, step_rk4, write_metric_csv)
from riccicone.geometry import GeometryError, RadialGrid, WarpedMetric, exact_cone, perturbation_decay
from riccicone.spectra import make_round_sphere

N3 = 3
SPHERE_XMAX = math.pi - 0.05


def sphere_cfg(**kw):
    base = dict(n=N3, profile="shrinking_sphere", x_min=0.05, x_max=SPHERE_XMAX, N=200, t_end=0.2 / (2 * N3))
    base.update(kw)
    return FlowConfig(**base)


# ---------------------------------------------------------------------------
# grids and config


def test_make_grid_graded_example():
    g = make_grid(0.01, 1.01, 4, 2.0, order=2)
    assert np.allclose(g.nodes, [0.01, 0.0725, 0.26, 0.5725, 1.01])


def test_make_grid_uniform():
    g = make_grid(0.1, 1.1, 50)
    assert np.allclose(np.diff(g.nodes), 0.02)


@given(st.floats(1e-3, 1.0), st.floats(0.1, 10.0), st.integers(16, 300), st.floats(1.0, 4.0))
def test_make_grid_increasing(a, length, N, p):
    x = make_grid(a, a + length, N, p).nodes
    assert len(x) == N + 1 and np.all(np.diff(x) > 0)
    assert x[0] == a and math.isclose(x[-1], a + length)


@pytest.mark.parametrize("kw,msg", [
    (dict(x_min=0.0), "grid.x_min"),
    (dict(N=8), "grid.N"),
    (dict(cfl=1.5), "time.cfl"),
    (dict(t_end=0), "time.t_end"),
    (dict(profile="blob"), "initial.profile"),
    (dict(stencil_order=3), "stencil.order"),
    (dict(boundary="exact", profile="perturbed_cone"), "closed-form"),
    (dict(checkpoint_every=15, store_every=10), "multiple"),
])
def test_config_validation(kw, msg):
    with pytest.raises(ValueError, match=msg):
        FlowConfig(n=N3, **kw)


def test_config_dict_round_trip():
    cfg = FlowConfig(n=4, profile="perturbed_cone", amplitude=0.01, exponent=1.5)
    assert FlowConfig.from_dict(cfg.to_dict()) == cfg
    assert cfg.digest() == replace(cfg, out_dir="elsewhere").digest()
    assert cfg.digest() != replace(cfg, N=201).digest()


def test_auto_boundary_modes():
    assert FlowConfig(n=N3).boundary_mode == "exact"
    assert FlowConfig(n=N3, profile="perturbed_cone").boundary_mode == "pinned"


# ---------------------------------------------------------------------------
# right-hand side


def test_cone_is_stationary():
    g = exact_cone(make_grid(0.05, 1.05, 200))
    dq, dP = rtf_rhs(FlowState(0.0, g, 0), g, N3)
    assert np.max(np.abs(dq)) < 1e-10 and np.max(np.abs(dP)) < 1e-10


def test_sphere_rhs():
    cfg = sphere_cfg()
    g = initial_metric(cfg)
    dq, dP = rtf_rhs(FlowState(0.0, g, 0), g, N3)
    s = slice(2, -2)
    assert np.allclose(dq[s], -2 * N3, atol=1e-6)
    assert np.allclose(dP[s], -2 * N3 * np.sin(g.x[s]) ** 2, atol=1e-6)


def test_rhs_linearisation_at_cone():
    # trace perturbation f g with f = eps x^b: the gauge-fixed linearisation is -Delta_L(f g) = -(Delta f) g
    G = make_grid(0.2, 1.2, 400)
    x = G.nodes
    b = 2.5
    lap_f = -(b * (b - 1) + N3 * b) * x ** (b - 2)
    errs = []
    for eps in (1e-3, 1e-4):
        f = eps * x ** b
        g = WarpedMetric(G, 1 + f, x * np.sqrt(1 + f))
        dq, dP = rtf_rhs(FlowState(0.0, g, 0), exact_cone(G), N3)
        s = slice(3, -3)
        errs.append(max(np.max(np.abs(dq[s] / eps + lap_f[s])), np.max(np.abs(dP[s] / (eps * x[s] ** 2) + lap_f[s]))))
    assert errs[1] < errs[0] / 5  # O(eps) remainder
    assert errs[1] < 1e-2


def test_kernel_rhs_matches_geometry():
    from riccicone.flow import KernelData, kernel_rhs

    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=0.2, exponent=2)
    g0 = initial_metric(cfg)
    g = WarpedMetric(g0.grid, g0.q * (1 + 0.01 * np.sin(g0.x)), g0.phi)
    a = rtf_rhs(FlowState(0.0, g, 0), g0, N3)
    b = kernel_rhs(g.q, g.phi2, KernelData.build(g0, N3))
    assert np.allclose(a[0], b[0], atol=1e-9) and np.allclose(a[1], b[1], atol=1e-9)


# ---------------------------------------------------------------------------
# stepping


def test_choose_dt_examples():
    G = make_grid(0.0 + 0.1, 1.1, 100)
    g = WarpedMetric(G, np.ones(101), G.nodes)
    dx = 0.01
    assert math.isclose(choose_dt(FlowState(0.0, g, 0), 0.5), dx * dx / 4)
    g4 = WarpedMetric(G, np.full(101, 4.0), G.nodes)
    assert math.isclose(choose_dt(FlowState(0.0, g4, 0), 0.5), dx * dx)
    G2 = make_grid(0.1, 1.1, 200)
    g2 = WarpedMetric(G2, np.ones(201), G2.nodes)
    assert math.isclose(choose_dt(FlowState(0.0, g2, 0), 0.5), dx * dx / 16)


def test_stationary_cone_over_steps():
    cfg = FlowConfig(n=N3, N=200, t_end=1.0)
    g = initial_metric(cfg)
    st = FlowState(0.0, g, 0)
    dt = choose_dt(st, 0.5)
    for _ in range(100):
        st = step_rk4(st, g, N3, dt)
    assert np.max(np.abs(st.g.q - 1)) < 1e-12
    assert np.max(np.abs(st.P - g.phi2)) < 1e-12


def test_shrinking_sphere_tracks_closed_form():
    cfg = sphere_cfg(store_every=10 ** 6)
    tr = run_flow(cfg)
    end = tr.states[-1]
    assert math.isclose(end.t, cfg.t_end, rel_tol=1e-14)
    q, P = exact_solution("shrinking_sphere", N3, end.t, end.g.x)
    assert np.max(np.abs(end.g.q / q - 1)) < 1e-6
    assert np.max(np.abs(end.P / P - 1)) < 1e-6


def test_temporal_order():
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=0.05, exponent=2, N=40, t_end=2e-3,
                     store_every=10 ** 6)
    ends = [run_flow(replace(cfg, dt=2e-3 / (8 * 2 ** k))).states[-1].g.q for k in range(4)]
    d = [np.max(np.abs(ends[i] - ends[i + 1])) for i in range(3)]
    rates = np.log2(np.array(d[:-1]) / d[1:])
    assert np.all(rates >= 3.8)


def test_final_short_step_lands_on_t_end():
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-3, N=40, t_end=1e-3, dt=3e-5)
    tr = run_flow(cfg)
    assert tr.states[-1].t == 1e-3
    assert tr.states[-1].step_index == 34


def test_store_every():
    cfg = FlowConfig(n=N3, N=40, t_end=1e-3, dt=1e-4, store_every=3)
    tr = run_flow(cfg)
    assert [s.step_index for s in tr.states] == [0, 3, 6, 9, 10]


def test_unstable_step_is_numerical_failure():
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-3, N=60, t_end=1e-2, dt=5e-3)
    tr = run_flow(cfg)
    assert tr.status == "failed"
    assert "stability bound" in tr.failure
    assert tr.states[-1].step_index == 0


def test_failure_keeps_last_good_state():
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-3, N=60, t_end=1e-2)
    g = initial_metric(cfg)
    st = FlowState(0.0, g, 0)
    with pytest.raises(NumericalFailure) as e:
        step_rk4(st, g, N3, 10.0)
    assert e.value.state is st


def test_degenerate_profile_aborts():
    cfg = FlowConfig(n=N3, profile="positive_cone", amplitude=1.0, x_max=1.05)
    with pytest.raises(GeometryError):
        initial_metric(cfg)


def test_perturbed_cone_completes():
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-3, exponent=1.5, t_end=0.01, store_every=400)
    tr = run_flow(cfg)
    assert tr.status == "completed"
    assert all(np.all(s.g.q > 0) and np.all(s.P > 0) for s in tr.states)


@pytest.mark.xfail(strict=True, reason="a trace perturbation fills in at the tip: the fitted exponent "
                                       "falls toward 0 once t exceeds x_min^2")
def test_perturbed_cone_decay_threshold():
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-3, exponent=1.5, t_end=0.01, store_every=10 ** 6)
    end = run_flow(cfg).states[-1]
    assert perturbation_decay(end.g, exact_cone(end.g.grid), N3).gamma_hat >= 1.2


def test_open_boundary_keeps_bounded_ricci():
    from riccicone.diagnostics import ricci_weight_monitor

    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-3, exponent=2, boundary="open",
                     t_end=0.01, store_every=400)
    tr = run_flow(cfg)
    v = ricci_weight_monitor(tr, 2.0).verdict
    assert v["bounded"] and v["max"] <= 1.01 * v["initial"]


# ---------------------------------------------------------------------------
# persistence


def test_metric_csv_round_trip(tmp_path):
    x = np.linspace(0.1, 1, 7)
    write_metric_csv(tmp_path / "m.csv", x, 1 + x / 3, x * np.pi, (x * np.pi) ** 2)
    x2, q2, phi2, P2 = read_metric_csv(tmp_path / "m.csv")
    assert np.array_equal(x2, x) and np.array_equal(q2, 1 + x / 3) and np.array_equal(P2, (x * np.pi) ** 2)


def test_from_file_profile(tmp_path):
    x = np.linspace(0.05, 1.05, 41)
    write_metric_csv(tmp_path / "p.csv", x, np.ones_like(x), x)
    cfg = FlowConfig(n=N3, profile="from_file", profile_file=str(tmp_path / "p.csv"), t_end=1e-4)
    g = initial_metric(cfg)
    assert np.array_equal(g.x, x)
    assert run_flow(cfg).status == "completed"


def test_identical_runs_identical_bytes(tmp_path):
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-2, N=60, t_end=2e-3, checkpoint_every=50,
                     store_every=10)
    run_flow(cfg, out_dir=tmp_path / "a")
    run_flow(cfg, out_dir=tmp_path / "b")
    for p in sorted((tmp_path / "a").iterdir()):
        assert p.read_bytes() == (tmp_path / "b" / p.name).read_bytes(), p.name


@pytest.mark.parametrize("boundary", ["pinned", "open"])
def test_resume_equals_single_run(tmp_path, boundary):
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-2, N=60, t_end=3e-3, checkpoint_every=10,
                     store_every=5, boundary=boundary)
    single = run_flow(cfg, out_dir=tmp_path / "single")
    part = run_flow(replace(cfg, t_end=1.5e-3), out_dir=tmp_path / "part")
    ckpt = part.checkpoints[0]
    assert read_checkpoint_meta(ckpt)["step"] == 10
    resumed = run_flow(cfg, out_dir=tmp_path / "part", resume=ckpt)
    a, b = single.states[-1], resumed.states[-1]
    assert a.t == b.t and a.step_index == b.step_index
    assert np.array_equal(a.g.q, b.g.q) and np.array_equal(a.P, b.P)
    assert (tmp_path / "single" / "checkpoint_final.csv").read_bytes() == \
        (tmp_path / "part" / "checkpoint_final.csv").read_bytes()


def test_load_checkpoint(tmp_path):
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=1e-2, N=40, t_end=1e-3)
    tr = run_flow(cfg, out_dir=tmp_path)
    st, h, dt, extra = load_checkpoint(tr.checkpoints[-1])
    assert st.t == tr.states[-1].t and dt == tr.dt
    assert np.array_equal(st.P, tr.states[-1].P)
    assert np.array_equal(h.q, tr.background.q)


def test_background_choices():
    cfg = FlowConfig(n=N3, profile="perturbed_cone", amplitude=0.1, background="exact_cone", N=40)
    g0 = initial_metric(cfg)
    h = background_metric(cfg, g0)
    assert np.array_equal(h.q, np.ones_like(g0.q))
    assert background_metric(replace(cfg, background="initial_metric"), g0) is g0


def test_cross_section_dimension_used():
    cfg = FlowConfig(n=4, N=40, t_end=1e-4)
    tr = run_flow(cfg, make_round_sphere(4))
    assert tr.n == 4
