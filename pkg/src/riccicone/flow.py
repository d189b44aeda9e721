"""Ricci de Turck flow on the warped-product class, integrated with explicit RK4.

The evolved variables are ``(q, phi^2)``. The tip is excised at ``x_min`` and
the ends carry Dirichlet data unless the mode is ``open``:

``pinned``  the initial values at both ends;
``cone``    exact-cone values at the inner end, initial values at the outer end;
``exact``   the closed-form solution (exact cone, shrinking sphere);
``open``    no condition at either end; the end nodes evolve by the
            one-sided discretisation of the equation;
``auto``    ``exact`` when a closed form exists, else ``pinned``.

The step size is fixed per run from the initial state. Times are
``step * dt`` plus whatever a shortened final step contributed, so a resumed
run replays the same floating-point sequence as an uninterrupted one.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels
from .geometry import (GeometryError, RadialGrid, WarpedMetric, curvature, de_turck_derivative,
                       de_turck_field, dim_of, exact_cone, lie_derivative_radial)
from .kvtext import format_float
from .stencils import ORDERS

PROFILES = ("exact_cone", "shrinking_sphere", "perturbed_cone", "positive_cone", "from_file")
BACKGROUNDS = ("initial_metric", "exact_cone")
BOUNDARIES = ("auto", "pinned", "cone", "exact", "open")
CLOSED_FORM = ("exact_cone", "shrinking_sphere")


class NumericalFailure(RuntimeError):
    """Integration stopped; ``state`` is the last good state."""

    def __init__(self, reason: str, state: "FlowState"):
        super().__init__(f"numerical failure at t={state.t:.17g} (step {state.step_index}): {reason}")
        self.reason = reason
        self.state = state


@dataclass(frozen=True)
class FlowConfig:
    n: int
    cross_section: str = "sphere"
    x_min: float = 0.05
    x_max: float = 1.05
    N: int = 200
    p: float = 1.0
    profile: str = "exact_cone"
    amplitude: float = 0.0
    exponent: float = 2.0
    profile_file: str | None = None
    background: str = "initial_metric"
    boundary: str = "auto"
    t_end: float = 0.01
    cfl: float = 0.5
    dt: float | None = None
    store_every: int = 10
    checkpoint_every: int = 0
    stencil_order: int = 4
    gamma_prime: float = 2.0
    out_dir: str | None = None

    def __post_init__(self):
        errs = []
        if self.n < 2:
            errs.append("n must be >= 2")
        if not self.x_min > 0:
            errs.append("grid.x_min must be > 0")
        if not self.x_max > self.x_min:
            errs.append("grid.x_max must exceed grid.x_min")
        if self.N < 16:
            errs.append("grid.N must be >= 16")
        if self.p < 1:
            errs.append("grid.p must be >= 1")
        if self.profile not in PROFILES:
            errs.append(f"initial.profile must be one of {PROFILES}")
        if self.profile == "from_file" and not self.profile_file:
            errs.append("initial.file is required for profile from_file")
        if self.background not in BACKGROUNDS:
            errs.append(f"background must be one of {BACKGROUNDS}")
        if self.boundary not in BOUNDARIES:
            errs.append(f"boundary must be one of {BOUNDARIES}")
        if self.boundary == "exact" and self.profile not in CLOSED_FORM:
            errs.append("boundary 'exact' needs a closed-form profile")
        if not self.t_end > 0:
            errs.append("time.t_end must be > 0")
        if not (0 < self.cfl <= 1):
            errs.append("time.cfl must lie in (0, 1]")
        if self.dt is not None and not self.dt > 0:
            errs.append("time.dt must be > 0")
        if self.store_every < 1:
            errs.append("output.store_every must be >= 1")
        if self.checkpoint_every < 0:
            errs.append("output.checkpoint_every must be >= 0")
        if self.checkpoint_every and self.checkpoint_every % self.store_every:
            errs.append("output.checkpoint_every must be a multiple of output.store_every")
        if self.stencil_order not in ORDERS:
            errs.append(f"stencil.order must be one of {ORDERS}")
        if not self.gamma_prime > 0:
            errs.append("diagnostics.gamma_prime must be > 0")
        if self.profile == "shrinking_sphere" and self.x_max >= math.pi:
            errs.append("shrinking_sphere needs grid.x_max < pi")
        if errs:
            raise ValueError("; ".join(errs))

    @property
    def boundary_mode(self) -> str:
        if self.boundary != "auto":
            return self.boundary
        return "exact" if self.profile in CLOSED_FORM else "pinned"

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        d = self.to_dict()
        d.pop("out_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "FlowConfig":
        return cls(**d)


@dataclass(frozen=True, eq=False)
class FlowState:
    t: float
    g: WarpedMetric
    step_index: int
    phi2: np.ndarray | None = None

    @property
    def P(self) -> np.ndarray:
        return self.g.phi2 if self.phi2 is None else self.phi2


@dataclass
class FlowTrajectory:
    config: FlowConfig
    n: int
    dt: float
    background: WarpedMetric
    states: list[FlowState] = field(default_factory=list)
    series: list[dict] = field(default_factory=list)
    checkpoints: list[str] = field(default_factory=list)
    status: str = "completed"
    failure: str | None = None

    @property
    def grid(self) -> RadialGrid:
        return self.background.grid

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


# ---------------------------------------------------------------------------
# grids and profiles


def make_grid(x_min: float, x_max: float, N: int, p: float = 1.0, order: int = 4) -> RadialGrid:
    """Nodes ``x_i = x_min + (x_max - x_min) (i/N)^p`` for ``i = 0..N``."""
    if not (0 < x_min < x_max):
        raise ValueError("need 0 < x_min < x_max")
    if N < 2:
        raise ValueError("need N >= 2")
    if p < 1:
        raise ValueError("need p >= 1")
    s = np.arange(N + 1) / N
    return RadialGrid(x_min + (x_max - x_min) * s ** p, p, order)


def exact_solution(profile: str, n: int, t: float, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(q, phi^2)`` of the closed-form solutions with matching background."""
    if profile == "exact_cone":
        return np.ones_like(x), x * x
    if profile == "shrinking_sphere":
        s = 1 - 2 * n * t
        return np.full_like(x, s), s * np.sin(x) ** 2
    raise ValueError(f"no closed form for profile {profile!r}")


def read_metric_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray | None]:
    """``(x, q, phi, phi2 or None)`` from a snapshot CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"x", "q", "phi"} <= set(rows[0]):
        raise ValueError(f"{path}: expected columns x,q,phi")
    x = np.array([float(r["x"]) for r in rows])
    q = np.array([float(r["q"]) for r in rows])
    phi = np.array([float(r["phi"]) for r in rows])
    phi2 = np.array([float(r["phi2"]) for r in rows]) if "phi2" in rows[0] else None
    return x, q, phi, phi2


def write_metric_csv(path, x, q, phi, phi2=None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "q", "phi"] + (["phi2"] if phi2 is not None else []))
        for i in range(len(x)):
            row = [format_float(x[i]), format_float(q[i]), format_float(phi[i])]
            if phi2 is not None:
                row.append(format_float(phi2[i]))
            w.writerow(row)


def initial_metric(cfg: FlowConfig) -> WarpedMetric:
    if cfg.profile == "from_file":
        x, q, phi, _ = read_metric_csv(cfg.profile_file)
        return WarpedMetric(RadialGrid(x, 1.0, cfg.stencil_order), q, phi)
    grid = make_grid(cfg.x_min, cfg.x_max, cfg.N, cfg.p, cfg.stencil_order)
    x = grid.nodes
    a, b = cfg.amplitude, cfg.exponent
    if cfg.profile in CLOSED_FORM:
        q, P = exact_solution(cfg.profile, cfg.n, 0.0, x)
        phi = x.copy() if cfg.profile == "exact_cone" else np.sin(x)
        return WarpedMetric(grid, q, phi)
    if cfg.profile == "perturbed_cone":
        # trace perturbation (1 + a x^b) of the exact cone
        f = 1 + a * x ** b
        return WarpedMetric(grid, f, x * np.sqrt(f))
    if cfg.profile == "positive_cone":
        return WarpedMetric(grid, np.ones_like(x), x * (1 - a * x * x))
    raise ValueError(cfg.profile)


def background_metric(cfg: FlowConfig, g0: WarpedMetric) -> WarpedMetric:
    return g0 if cfg.background == "initial_metric" else exact_cone(g0.grid)


# ---------------------------------------------------------------------------
# right-hand side and stepping


def rtf_rhs(state: FlowState, h: WarpedMetric, cs) -> tuple[np.ndarray, np.ndarray]:
    """``d/dt (q, phi^2) = -2 Ric + L_W g`` in coordinates, from the geometry module."""
    n = dim_of(cs)
    g = state.g
    ric = curvature(g, n).ric
    W = de_turck_field(g, h, n)
    L = lie_derivative_radial(W, g, de_turck_derivative(g, h, n))
    return -2 * g.q * ric.t_rr + L.xx, -2 * g.phi2 * ric.t_sph + L.sph


@dataclass(frozen=True, eq=False)
class KernelData:
    """Grid stencil plus background Christoffel data, laid out for the kernels."""

    n: int
    start: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    ah: np.ndarray
    bh: np.ndarray
    dah: np.ndarray
    dbh: np.ndarray

    @classmethod
    def build(cls, h: WarpedMetric, n: int) -> "KernelData":
        st = h.grid.stencil
        hq, hqq, hp, hpp = h.derivs
        ah = hq / (2 * h.q)
        bh = h.phi * hp / h.q
        dah = hqq / (2 * h.q) - hq * hq / (2 * h.q ** 2)
        dbh = (hp * hp + h.phi * hpp) / h.q - h.phi * hp * hq / h.q ** 2
        c = np.ascontiguousarray
        return cls(n, c(st.start, dtype=np.int64), c(st.w1), c(st.w2), c(ah), c(bh), c(dah), c(dbh))

    def args(self):
        return (self.start, self.w1, self.w2, self.ah, self.bh, self.dah, self.dbh, self.n)


def kernel_rhs(q, P, kd: KernelData, backend=None):
    impl = kernels if backend is None else kernels.BACKENDS[backend]
    return impl.rhs(np.ascontiguousarray(q, dtype=float), np.ascontiguousarray(P, dtype=float), *kd.args())


def choose_dt(state: FlowState, cfl: float) -> float:
    """``cfl * min_i(dx_i^2 q_i) / 2`` with ``dx_i = x_{i+1} - x_i``."""
    x = state.g.x
    dx = np.diff(x)
    return float(cfl * np.min(dx * dx * state.g.q[:-1]) / 2)


BoundaryFn = Callable[[float], tuple[float, float, float, float]]


def boundary_function(mode: str, cfg: FlowConfig, state: FlowState) -> BoundaryFn:
    """Dirichlet values ``(q_L, P_L, q_R, P_R)`` as a function of time; NaN means no condition."""
    x = state.g.x
    if mode == "exact":
        ends = np.array([x[0], x[-1]])

        def f(t):
            q, P = exact_solution(cfg.profile, cfg.n, t, ends)
            return float(q[0]), float(P[0]), float(q[1]), float(P[1])
        return f
    if mode == "open":
        return lambda t: (math.nan,) * 4
    q, P = state.g.q, state.P
    right = (float(q[-1]), float(P[-1]))
    left = (1.0, float(x[0] * x[0])) if mode == "cone" else (float(q[0]), float(P[0]))
    vals = left + right
    return lambda t: vals


def step_rk4(state: FlowState, h: WarpedMetric, cs, dt: float, bc: BoundaryFn | None = None,
             kd: KernelData | None = None, t_next: float | None = None, backend=None) -> FlowState:
    """One RK4 step. Without ``bc`` the current end values are held fixed."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    n = dim_of(cs)
    kd = kd or KernelData.build(h, n)
    impl = kernels if backend is None else kernels.BACKENDS[backend]
    q = state.g.q.copy()
    P = state.P.copy()
    t = state.t
    if bc is None:
        fixed = (q[0], P[0], q[-1], P[-1])
        bc = lambda _t: fixed
    mid = bc(t + 0.5 * dt)
    table = np.ascontiguousarray([bc(t), mid, mid, bc(t + dt)], dtype=float)
    st = impl.rk4_step(q, P, dt, table, *kd.args())
    if st == 1:
        raise NumericalFailure("non-finite values", state)
    if st == 2:
        raise NumericalFailure("positivity loss in q or phi", state)
    try:
        g = WarpedMetric(state.g.grid, q, np.sqrt(P))
    except GeometryError as e:
        raise NumericalFailure(str(e), state) from None
    return FlowState(t + dt if t_next is None else t_next, g, state.step_index + 1, P)


# ---------------------------------------------------------------------------
# runs, checkpoints, resume


def _schedule(t_start_steps: int, t_extra: float, dt: float, t_end: float) -> tuple[int, float]:
    """Number of full steps to reach ``t_end`` and the length of a trailing short step."""
    t0 = t_start_steps * dt + t_extra
    remaining = t_end - t0
    if remaining <= 1e-12 * max(abs(t_end), 1.0):
        return 0, 0.0
    full = int(math.floor(remaining / dt * (1 + 1e-12)))
    rest = remaining - full * dt
    if rest <= 1e-9 * dt:
        rest = 0.0
    return full, rest


def run_flow(cfg: FlowConfig, cs=None, *, out_dir: str | Path | None = None,
             resume: str | Path | None = None, t_end: float | None = None,
             monitor: Callable[[FlowTrajectory, FlowState], dict] | None = None,
             backend: str | None = None) -> FlowTrajectory:
    """Integrate to ``t_end`` (defaults to the config's), storing every ``store_every`` steps.

    ``monitor`` maps a stored state to one time-series row, collected in
    ``traj.series``; writing it out is left to the caller. With ``out_dir`` the
    background and checkpoints are written there. With
    ``resume`` the run continues from a checkpoint CSV.
    """
    n = cfg.n if cs is None else dim_of(cs)
    t_end = cfg.t_end if t_end is None else t_end
    out = Path(out_dir or cfg.out_dir) if (out_dir or cfg.out_dir) else None
    if resume is not None:
        state, h, dt, t_extra = load_checkpoint(resume, cfg)
    else:
        g0 = initial_metric(cfg)
        h = background_metric(cfg, g0)
        state = FlowState(0.0, g0, 0, g0.phi2)
        dt = cfg.dt if cfg.dt is not None else choose_dt(state, cfg.cfl)
        t_extra = 0.0
    traj = FlowTrajectory(cfg, n, dt, h)
    kd = KernelData.build(h, n)
    bc = boundary_function(cfg.boundary_mode, cfg, state)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        write_metric_csv(out / "background.csv", h.x, h.q, h.phi)

    def store(s: FlowState):
        traj.states.append(s)
        if monitor is not None:
            traj.series.append(monitor(traj, s))

    store(state)
    full, rest = _schedule(state.step_index, t_extra, dt, t_end)
    base = state.step_index
    try:
        for j in range(1, full + 1):
            k = base + j
            if choose_dt(state, 1.0) < dt:
                raise NumericalFailure("step size exceeds the stability bound", state)
            state = step_rk4(state, h, n, dt, bc, kd, t_next=k * dt + t_extra, backend=backend)
            if k % cfg.store_every == 0 or (j == full and rest == 0.0):
                store(state)
            if out is not None and cfg.checkpoint_every and k % cfg.checkpoint_every == 0:
                traj.checkpoints.append(str(write_checkpoint(out, state, cfg, dt, t_extra)))
        if rest > 0.0:
            state = step_rk4(state, h, n, rest, bc, kd, t_next=t_end, backend=backend)
            t_extra += rest - dt
            store(state)
    except NumericalFailure as e:
        traj.status = "failed"
        traj.failure = str(e)
        if not traj.states or traj.states[-1] is not e.state:
            store(e.state)
        state = e.state
    if out is not None:
        traj.checkpoints.append(str(write_checkpoint(out, state, cfg, dt, t_extra, final=True)))
    return traj


def write_checkpoint(out: Path, state: FlowState, cfg: FlowConfig, dt: float, t_extra: float,
                     final: bool = False) -> Path:
    name = "checkpoint_final" if final else f"checkpoint_{state.step_index:08d}"
    path = Path(out) / f"{name}.csv"
    write_metric_csv(path, state.g.x, state.g.q, state.g.phi, state.P)
    meta = {
        "t": format_float(state.t),
        "step": state.step_index,
        "dt": format_float(dt),
        "t_extra": format_float(t_extra),
        "config_hash": cfg.digest(),
        "config": cfg.to_dict(),
        "background": "background.csv",
    }
    path.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
    return path


def read_checkpoint_meta(path) -> dict:
    return json.loads(Path(path).with_suffix(".json").read_text())


def load_checkpoint(path, cfg: FlowConfig | None = None):
    """``(state, background, dt, t_extra)`` from a checkpoint CSV and its sidecar."""
    path = Path(path)
    meta = read_checkpoint_meta(path)
    cfg = cfg or FlowConfig.from_dict(meta["config"])
    order = cfg.stencil_order
    x, q, phi, P = read_metric_csv(path)
    grid = RadialGrid(x, cfg.p, order)
    g = WarpedMetric(grid, q, phi)
    hx, hq, hphi, _ = read_metric_csv(path.parent / meta["background"])
    if not np.array_equal(hx, x):
        raise ValueError("checkpoint and background grids differ")
    h = WarpedMetric(grid, hq, hphi)
    state = FlowState(float(meta["t"]), g, int(meta["step"]), P if P is not None else g.phi2)
    return state, h, float(meta["dt"]), float(meta["t_extra"])
