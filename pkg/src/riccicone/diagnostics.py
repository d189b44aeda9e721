"""Residuals of the curvature evolution identities and monitored invariants.

Residuals are evaluated on stored trajectory levels. Time derivatives are
centered differences between neighbouring levels (one-sided at the ends), so
they carry an ``O(tau^2)`` error in the store spacing ``tau``;
:func:`richardson` removes it given two spacings.

A trajectory is anything with ``states`` (objects with ``t``, ``g`` and
``step_index``), ``background`` and ``n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (RadialGrid, WarpedMetric, christoffels, curvature, de_turck_derivative,
                       de_turck_field, dim_of, exact_cone, lichnerowicz_diagonal,
                       perturbation_decay, scalar_laplacian)


class DiagnosticsError(ValueError):
    pass


@dataclass
class ResidualSeries:
    times: np.ndarray
    steps: np.ndarray
    values: np.ndarray                      # weighted max over inner nodes, per level
    nodes: list[np.ndarray]                 # signed node residuals (components stacked)
    meta: dict = field(default_factory=dict)

    def max(self) -> float:
        return float(np.max(self.values)) if len(self.values) else 0.0


@dataclass
class MonitorSeries:
    times: np.ndarray
    columns: dict[str, np.ndarray]
    verdict: dict = field(default_factory=dict)


def _nodes(x) -> np.ndarray:
    return x.nodes if isinstance(x, RadialGrid) else np.asarray(x, dtype=float)


def inner(n_nodes: int, margin: int = 1) -> slice:
    return slice(margin, n_nodes - margin)


def default_margin(grid) -> int:
    """Nodes whose nested stencils reach a one-sided boundary row."""
    order = getattr(grid, "order", 2)
    return max(1, 2 * (order // 2))


def weighted_sup(f, w: float, grid, margin: int = 1, window: tuple[float, float] | None = None) -> float:
    """``max_i x_i^{-w} |f_i|`` over nodes away from the ends (and inside ``window``)."""
    x = _nodes(grid)
    f = np.asarray(f, dtype=float)
    keep = np.zeros(len(x), dtype=bool)
    keep[inner(len(x), margin)] = True
    if window is not None:
        keep &= (x >= window[0]) & (x <= window[1])
    if not keep.any():
        return 0.0
    return float(np.max(x[keep] ** (-w) * np.abs(f[keep])))


def discrete_holder_seminorm(f, alpha: float, grid, block: int = 1024) -> float:
    """``max_{i != j} |f_i - f_j| / |x_i - x_j|^alpha``."""
    if not (0 <= alpha < 1):
        raise ValueError("alpha must lie in [0, 1)")
    x = _nodes(grid)
    f = np.asarray(f, dtype=float)
    best = 0.0
    for a in range(0, len(x), block):
        xa, fa = x[a:a + block, None], f[a:a + block, None]
        d = np.abs(xa - x[None, :])
        num = np.abs(fa - f[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(d > 0, num / d ** alpha, 0.0)
        best = max(best, float(r.max()))
    return best


def time_derivative(levels: list[np.ndarray], times: np.ndarray) -> list[np.ndarray]:
    """Second-order differences on possibly nonuniform time levels."""
    m = len(levels)
    if m < 3:
        raise DiagnosticsError("need at least 3 stored time levels")
    t = np.asarray(times, dtype=float)
    out = []
    for k in range(m):
        i = min(max(k, 1), m - 2)
        h1, h2 = t[i] - t[i - 1], t[i + 1] - t[i]
        if k == i:
            w = (-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2)))
        elif k == 0:
            w = (-(2 * h1 + h2) / (h1 * (h1 + h2)), (h1 + h2) / (h1 * h2), -h1 / (h2 * (h1 + h2)))
        else:
            w = (h2 / (h1 * (h1 + h2)), -(h1 + h2) / (h1 * h2), (h1 + 2 * h2) / (h2 * (h1 + h2)))
        out.append(w[0] * levels[i - 1] + w[1] * levels[i] + w[2] * levels[i + 1])
    return out


def _check(traj):
    if len(traj.states) < 3:
        raise DiagnosticsError("need at least 3 stored time levels")


def _n(traj, cs):
    return dim_of(cs if cs is not None else traj.n)


def scalar_evolution_residual(traj, cs=None, weight: float = 0.0, margin: int | None = None,
                              window: tuple[float, float] | None = None) -> ResidualSeries:
    """Residual of ``(d/dt + Delta) R = <W, grad R> + 2 |Ric|^2`` per stored level."""
    _check(traj)
    n = _n(traj, cs)
    h = traj.background
    margin = default_margin(traj.grid) if margin is None else margin
    curv = [curvature(s.g, n) for s in traj.states]
    times = np.array([s.t for s in traj.states])
    dR = time_derivative([c.scal for c in curv], times)
    nodes, vals = [], []
    for s, c, dr in zip(traj.states, curv, dR):
        g = s.g
        W = de_turck_field(g, h, n).wx
        res = dr + scalar_laplacian(g, c.scal, n) - W * g.grid.d1(c.scal) - 2 * c.ric.norm(n) ** 2
        nodes.append(res)
        vals.append(weighted_sup(res, weight, g.grid, margin, window))
    return ResidualSeries(times, np.array([s.step_index for s in traj.states]), np.array(vals), nodes,
                          {"identity": "scalar", "weight": weight, "margin": margin, "n": n, "window": window})


def ricci_evolution_residual(traj, cs=None, weight: float = 0.0, margin: int | None = None,
                             window: tuple[float, float] | None = None) -> ResidualSeries:
    """Residual of ``(d/dt + Delta_L) R_jk = W^m nabla_m R_jk + R_jm nabla_k W^m + R_km nabla_j W^m``.

    Coordinate components are differenced in time; the residual is reported in
    the orthonormal frame and reduced by its frame norm.
    """
    _check(traj)
    n = _n(traj, cs)
    h = traj.background
    margin = default_margin(traj.grid) if margin is None else margin
    curv = [curvature(s.g, n) for s in traj.states]
    times = np.array([s.t for s in traj.states])
    rxx = [s.g.q * c.ric.t_rr for s, c in zip(traj.states, curv)]
    rf = [s.g.phi2 * c.ric.t_sph for s, c in zip(traj.states, curv)]
    dxx = time_derivative(rxx, times)
    dff = time_derivative(rf, times)
    nodes, vals = [], []
    for k, (s, c) in enumerate(zip(traj.states, curv)):
        g = s.g
        W = de_turck_field(g, h, n).wx
        dW = de_turck_derivative(g, h, n)
        ch = christoffels(g)
        lap = lichnerowicz_diagonal(g, c.ric, n)
        lxx, lf = lap.to_coordinates(g)
        # covariant derivatives along the radial field
        nab_xx = g.grid.d1(rxx[k]) - 2 * ch.Gxxx * rxx[k]
        nab_f = g.grid.d1(rf[k]) - 2 * ch.Gsph_x * rf[k]
        div_xx = dW + ch.Gxxx * W
        div_f = ch.Gsph_x * W
        rhs_xx = W * nab_xx + 2 * rxx[k] * div_xx
        rhs_f = W * nab_f + 2 * rf[k] * div_f
        res_rr = (dxx[k] + lxx - rhs_xx) / g.q
        res_sph = (dff[k] + lf - rhs_f) / g.phi2
        nodes.append(np.stack([res_rr, res_sph]))
        vals.append(weighted_sup(np.sqrt(res_rr ** 2 + n * res_sph ** 2), weight, g.grid, margin, window))
    return ResidualSeries(times, np.array([s.step_index for s in traj.states]), np.array(vals), nodes,
                          {"identity": "ricci", "weight": weight, "margin": margin, "n": n, "window": window})


def richardson(series: list[ResidualSeries], order: int = 2, n: int | None = None,
               weight: float = 0.0, margin: int | None = None, grid=None) -> ResidualSeries:
    """Extrapolate residuals from store spacings ``tau, tau/2, tau/4, ...`` to ``tau -> 0``.

    Residuals are affine in the time derivative, whose error expands in even
    powers of the spacing, so repeated elimination of ``tau^order``,
    ``tau^(order+2)``, ... applies. Only interior coarse levels with equally
    spaced neighbours are kept; other levels carry different error constants.
    """
    if len(series) < 2:
        raise DiagnosticsError("need at least two spacings")
    coarse = series[0]
    lookup = [{int(s): i for i, s in enumerate(r.steps)} for r in series]
    margin = coarse.meta.get("margin", 1) if margin is None else margin
    window = coarse.meta.get("window")
    times, steps, vals, nodes = [], [], [], []
    for i in range(1, len(coarse.steps) - 1):
        t = coarse.times
        if not np.isclose(t[i] - t[i - 1], t[i + 1] - t[i], rtol=1e-9, atol=0.0):
            continue
        s = int(coarse.steps[i])
        if any(s not in lk for lk in lookup):
            raise DiagnosticsError(f"a finer series lacks step {s}")
        cols = [r.nodes[lk[s]] for r, lk in zip(series, lookup)]
        p = order
        while len(cols) > 1:
            c = 2.0 ** p
            cols = [(c * f - g) / (c - 1) for g, f in zip(cols, cols[1:])]
            p += 2
        r = cols[0]
        nodes.append(r)
        if r.ndim == 2:
            nn = n if n is not None else coarse.meta.get("n", 1)
            mag = np.sqrt(r[0] ** 2 + nn * r[1] ** 2)
        else:
            mag = np.abs(r)
        x = grid if grid is not None else np.ones(len(mag))
        vals.append(weighted_sup(mag, weight, x, margin, window if grid is not None else None))
        times.append(coarse.times[i])
        steps.append(s)
    return ResidualSeries(np.array(times), np.array(steps), np.array(vals), nodes,
                          dict(coarse.meta, richardson=len(series)))


def contracted_identity(g: WarpedMetric, cs, margin: int = 1) -> float:
    """``max |tr(Delta_L Ric) - Delta R|`` over inner nodes."""
    n = dim_of(cs)
    c = curvature(g, n)
    lap = lichnerowicz_diagonal(g, c.ric, n)
    d = lap.trace(n) - scalar_laplacian(g, c.scal, n)
    return float(np.max(np.abs(d[inner(len(d), margin)])))


def tol_pos(r0_max: float) -> float:
    return max(1e-6 * r0_max, 1e-12)


def r_min_tracker(traj, cs=None, margin: int = 1) -> MonitorSeries:
    """Minimum of the scalar curvature over inner nodes and the positivity verdict."""
    n = _n(traj, cs)
    times = np.array([s.t for s in traj.states])
    s_in = inner(len(traj.grid), margin)
    rmin, arg, rmax = [], [], []
    for s in traj.states:
        R = curvature(s.g, n).scal[s_in]
        i = int(np.argmin(R))
        rmin.append(float(R[i]))
        arg.append(i + s_in.start)
        rmax.append(float(np.max(R)))
    rmin = np.array(rmin)
    if len(times) >= 3:
        drdt = np.array(time_derivative(list(rmin[:, None]), times))[:, 0]
    else:
        drdt = np.full(len(times), np.nan)
    tol = tol_pos(max(rmax[0], 0.0))
    applicable = bool(rmin[0] >= -tol)
    preserved = bool(np.all(rmin >= -tol)) if applicable else None
    verdict = {"R_min0": float(rmin[0]), "tol_pos": tol, "applicable": applicable,
               "preserved": preserved,
               "text": ("positivity preserved" if preserved else
                        "positivity violated" if applicable else "not applicable: R_min(0) < 0")}
    return MonitorSeries(times, {"R_min": rmin, "argmin": np.array(arg), "R_max": np.array(rmax),
                                 "dRmin_dt": drdt}, verdict)


def ricci_weight_monitor(traj, gamma_prime: float, cs=None, margin: int = 1, floor: float = 1e-9) -> MonitorSeries:
    """``sup_x x^{2 - gamma'} |Ric|`` along the trajectory.

    The verdict is "bounded" if the series stays within twice its initial value;
    ``floor`` absorbs roundoff when the initial value vanishes.
    """
    if not gamma_prime > 0:
        raise ValueError("gamma_prime must be positive")
    n = _n(traj, cs)
    times = np.array([s.t for s in traj.states])
    vals = np.array([weighted_sup(curvature(s.g, n).ric.norm(n), gamma_prime - 2, s.g.grid, margin)
                     for s in traj.states])
    bound = 2 * vals[0] + floor
    ok = bool(np.all(vals <= bound))
    return MonitorSeries(times, {"sup_w_ric": vals},
                         {"initial": float(vals[0]), "max": float(vals.max()), "bound": bound,
                          "bounded": ok, "text": "bounded" if ok else "unbounded growth"})


def monitor_row(traj, state, cs=None, margin: int = 1) -> dict:
    """One time-series row: t, R_min, R_max, sup_w_ric, gamma_hat, wmax, dt."""
    n = _n(traj, cs)
    g = state.g
    s_in = inner(len(g.grid), margin)
    c = curvature(g, n)
    W = de_turck_field(g, traj.background, n).wx
    dec = perturbation_decay(g, exact_cone(g.grid), n)
    gp = getattr(traj.config, "gamma_prime", 2.0)
    return {
        "step": state.step_index,
        "t": state.t,
        "R_min": float(np.min(c.scal[s_in])),
        "R_max": float(np.max(c.scal[s_in])),
        "sup_w_ric": weighted_sup(c.ric.norm(n), gp - 2, g.grid, margin),
        "gamma_hat": float("nan") if dec.gamma_hat is None else dec.gamma_hat,
        "wmax": float(np.max(np.abs(W[s_in]))),
        "dt": traj.dt,
    }


def convergence_order(errors, ratio: float = 2.0) -> list[float]:
    """Observed orders ``log(e_k / e_{k+1}) / log(ratio)``."""
    e = np.asarray(errors, dtype=float)
    return [float(np.log(e[k] / e[k + 1]) / np.log(ratio)) for k in range(len(e) - 1)]
