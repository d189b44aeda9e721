"""Closed-form geometry against the chart oracle, with observed convergence orders."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracle as O
from .geometry import (DiagonalTwoTensor, RadialGrid, RadialVectorField, WarpedMetric, christoffels,
                       conformal_ricci, curvature, de_turck_field, lichnerowicz_diagonal,
                       lie_derivative_radial, scalar_laplacian)

X0, X1 = 0.3, 2.0


@dataclass(frozen=True)
class SmoothProfile:
    """Random trigonometric data: metric, background, a tensor, a vector field, a conformal factor."""

    c: tuple[float, ...]

    @classmethod
    def random(cls, rng: np.random.Generator) -> "SmoothProfile":
        return cls(tuple(float(v) for v in rng.uniform(-1, 1, 16)))

    def q(self, x):
        c = self.c
        return 1 + 0.2 * c[0] * np.sin((1 + abs(c[1])) * x + c[2])

    def phi(self, x):
        c = self.c
        return x * (1 + 0.2 * c[3] * np.cos((1 + abs(c[4])) * x + c[5]))

    def qh(self, x):
        return 1 + 0.1 * self.c[6] * np.cos(x + self.c[7])

    def phih(self, x):
        return x * (1 + 0.1 * self.c[8] * np.sin(x))

    def t_rr(self, x):
        return np.exp(-x) * np.sin(2 * x + self.c[9])

    def t_sph(self, x):
        return 0.5 + 0.3 * self.c[10] * np.cos(x + self.c[11])

    def wx(self, x):
        return self.c[12] * np.sin(x) + 0.5 * x * x

    def u(self, x):
        return 0.3 * self.c[13] * np.sin(1.5 * x + self.c[14])


OPERATIONS = ("curvature", "christoffels", "de_turck_field", "lie_derivative_radial",
              "lichnerowicz_diagonal", "scalar_laplacian", "conformal_ricci")


def _closed_form(prof: SmoothProfile, N: int, n: int, order: int) -> dict[str, np.ndarray]:
    grid = RadialGrid(np.linspace(X0, X1, N + 1), 1.0, order)
    x = grid.nodes
    g = WarpedMetric(grid, prof.q(x), prof.phi(x))
    h = WarpedMetric(grid, prof.qh(x), prof.phih(x))
    idx = [N // 4, N // 2, 3 * N // 4]
    c = curvature(g, n)
    ch = christoffels(g)
    L = lie_derivative_radial(RadialVectorField(prof.wx(x)), g)
    T = lichnerowicz_diagonal(g, DiagonalTwoTensor(prof.t_rr(x), prof.t_sph(x)), n)
    cr = conformal_ricci(g, prof.u(x), n)
    return {
        "curvature": np.stack([c.ric.t_rr, c.ric.t_sph, c.scal])[:, idx],
        "christoffels": np.stack([ch.Gxxx, ch.Gx_sph, ch.Gsph_x])[:, idx],
        "de_turck_field": de_turck_field(g, h, n).wx[None, idx],
        "lie_derivative_radial": np.stack([L.xx, L.sph])[:, idx],
        "lichnerowicz_diagonal": np.stack([T.t_rr, T.t_sph])[:, idx],
        "scalar_laplacian": scalar_laplacian(g, prof.t_sph(x), n)[None, idx],
        "conformal_ricci": np.stack([cr.t_rr, cr.t_sph])[:, idx],
    }


def _oracle(prof: SmoothProfile, xs, n: int) -> dict[str, np.ndarray]:
    G = O.ChartMetric(prof.q, prof.phi, n)
    H = O.ChartMetric(prof.qh, prof.phih, n)
    C = O.ChartMetric(lambda x: (1 + prof.u(x)) * prof.q(x),
                      lambda x: np.sqrt(1 + prof.u(x)) * prof.phi(x), n)
    T = G.radial_tensor(prof.t_rr, prof.t_sph)
    out = {k: [] for k in OPERATIONS}
    for x in xs:
        pt = G.point(x)
        ric = G.frame(G.ricci(pt), pt)
        out["curvature"].append([ric[0], ric[1], G.scalar(pt)])
        Gm = G.christoffel(pt)
        # Gamma^x_ab = Gx_sph * (g_F)_ab and g_F is the identity at the chart point
        out["christoffels"].append([Gm[0, 0, 0], Gm[0, 1, 1], Gm[1, 0, 1]])
        out["de_turck_field"].append([O.de_turck_x(G, H, pt)])
        Lo = O.lie_derivative(G, prof.wx, pt)
        out["lie_derivative_radial"].append([Lo[0, 0], Lo[1, 1]])
        out["lichnerowicz_diagonal"].append(list(G.frame(G.lichnerowicz(T, pt), pt)))
        out["scalar_laplacian"].append([G.scalar_laplacian(lambda p: prof.t_sph(p[0]), pt)])
        cp = C.point(x)
        out["conformal_ricci"].append(list(C.frame(C.ricci(cp), cp)))
    return {k: np.array(v).T for k, v in out.items()}


@dataclass(frozen=True)
class OracleComparison:
    operation: str
    errors: tuple[float, ...]
    orders: tuple[float, ...]

    def passed(self, min_order: float = 1.8) -> bool:
        return all(o >= min_order for o in self.orders)


def compare(prof: SmoothProfile, n: int = 3, Ns=(40, 80, 160), order: int = 2) -> list[OracleComparison]:
    """Max discrepancy against the oracle on each grid, and the observed orders."""
    xs = None
    errs = {k: [] for k in OPERATIONS}
    ref = None
    for N in Ns:
        grid_x = np.linspace(X0, X1, N + 1)
        pts = grid_x[[N // 4, N // 2, 3 * N // 4]]
        if xs is None:
            xs = pts
            ref = _oracle(prof, xs, n)
        elif not np.allclose(pts, xs, rtol=0, atol=1e-14):
            raise ValueError("sample points must be nodes of every grid")
        cf = _closed_form(prof, N, n, order)
        for k in OPERATIONS:
            errs[k].append(float(np.max(np.abs(cf[k] - ref[k]))))
    out = []
    for k in OPERATIONS:
        e = errs[k]
        orders = tuple(float(np.log2(e[i] / e[i + 1])) for i in range(len(e) - 1))
        out.append(OracleComparison(k, tuple(e), orders))
    return out


def selftest(n: int = 3, profiles: int = 3, seed: int = 0, order: int = 2) -> list[OracleComparison]:
    rng = np.random.default_rng(seed)
    res = []
    for _ in range(profiles):
        res.extend(compare(SmoothProfile.random(rng), n, order=order))
    return res
