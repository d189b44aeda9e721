"""Independent finite-difference tensor calculus on an explicit chart.

Works on ``(x, theta_1, ..., theta_n)`` with ``g = q(x) dx^2 + phi(x)^2 g_S``,
``g_S`` the round metric in hyperspherical angles. Nothing here uses the
warped-product formulas: Christoffel symbols come from metric partials, the
Riemann tensor from partials of those, covariant derivatives from the
definitions. All partials are fourth-order central differences.

This is slow and meant for pointwise cross-checks only.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

Scalar = Callable[[float], float]

_W = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_OFF = np.array([-2.0, -1.0, 1.0, 2.0])


def _partial(f, pt: np.ndarray, k: int, h: float):
    out = 0.0
    for w, o in zip(_W, _OFF):
        p = pt.copy()
        p[k] += o * h
        out = out + w * f(p)
    return out / h


def _grad(f, pt: np.ndarray, h: float) -> np.ndarray:
    """Stack of partials along a new leading axis."""
    return np.stack([np.asarray(_partial(f, pt, k, h)) for k in range(len(pt))])


@dataclass
class ChartMetric:
    q: Scalar
    phi: Scalar
    n: int
    h: float = 1e-3

    def point(self, x: float) -> np.ndarray:
        # equator of the angular chart: g_S is the identity there
        return np.array([x] + [np.pi / 2] * self.n)

    def metric(self, pt: np.ndarray) -> np.ndarray:
        x, th = pt[0], pt[1:]
        d = np.empty(self.n + 1)
        d[0] = self.q(x)
        s = 1.0
        p2 = self.phi(x) ** 2
        for k in range(self.n):
            d[k + 1] = p2 * s
            s *= np.sin(th[k]) ** 2
        return np.diag(d)

    def inverse(self, pt):
        return np.linalg.inv(self.metric(pt))

    def christoffel(self, pt: np.ndarray) -> np.ndarray:
        """``G[k, i, j] = Gamma^k_ij``."""
        dg = _grad(self.metric, pt, self.h)  # dg[l, i, j] = d_l g_ij
        gi = self.inverse(pt)
        # low[l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        low = 0.5 * (np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg)
        return np.einsum("kl,lij->kij", gi, low)

    def riemann(self, pt: np.ndarray) -> np.ndarray:
        """``R[l, i, j, k] = R^l_ijk`` for ``R(d_i, d_j) d_k``."""
        G = self.christoffel(pt)
        dG = _grad(self.christoffel, pt, self.h)  # dG[i, l, j, k] = d_i Gamma^l_jk
        r = np.einsum("iljk->lijk", dG) - np.einsum("jlik->lijk", dG)
        r += np.einsum("lim,mjk->lijk", G, G) - np.einsum("ljm,mik->lijk", G, G)
        return r

    def ricci(self, pt):
        return np.einsum("iijk->jk", self.riemann(pt))

    def scalar(self, pt):
        return float(np.einsum("jk,jk->", self.inverse(pt), self.ricci(pt)))

    def covariant(self, T, pt: np.ndarray) -> np.ndarray:
        """``nabla_i T_jk`` for a callable 2-tensor field ``T(pt)``."""
        G = self.christoffel(pt)
        dT = _grad(T, pt, self.h)
        t = T(pt)
        return dT - np.einsum("mij,mk->ijk", G, t) - np.einsum("mik,jm->ijk", G, t)

    def rough_laplacian(self, T, pt: np.ndarray) -> np.ndarray:
        """``-g^ab nabla_a nabla_b T_jk``."""
        G = self.christoffel(pt)
        DT = lambda p: self.covariant(T, p)
        dDT = _grad(DT, pt, self.h)           # d_a (nabla_b T_jk)
        D = DT(pt)
        hess = (dDT - np.einsum("mab,mjk->abjk", G, D)
                - np.einsum("maj,bmk->abjk", G, D) - np.einsum("mak,bjm->abjk", G, D))
        return -np.einsum("ab,abjk->jk", self.inverse(pt), hess)

    def lichnerowicz(self, T, pt: np.ndarray) -> np.ndarray:
        g = self.metric(pt)
        gi = np.linalg.inv(g)
        ric = self.ricci(pt)
        t = T(pt)
        R = self.riemann(pt)
        ring = np.einsum("lajk,lb,ab->jk", R, t, gi)
        mixed = ric @ gi @ t
        return self.rough_laplacian(T, pt) + mixed + mixed.T - 2 * ring

    def scalar_laplacian(self, f, pt: np.ndarray) -> float:
        G = self.christoffel(pt)
        df = lambda p: _grad(f, p, self.h)
        hess = _grad(df, pt, self.h) - np.einsum("mab,m->ab", G, df(pt))
        return float(-np.einsum("ab,ab->", self.inverse(pt), hess))

    def radial_tensor(self, t_rr: Scalar, t_sph: Scalar):
        """Coordinate field of a diagonal tensor given by frame components."""
        def T(pt):
            g = self.metric(pt)
            d = np.diag(g).copy()
            d[0] *= t_rr(pt[0])
            d[1:] *= t_sph(pt[0])
            return np.diag(d)
        return T

    def frame(self, T: np.ndarray, pt: np.ndarray) -> tuple[float, float]:
        g = self.metric(pt)
        return float(T[0, 0] / g[0, 0]), float(T[1, 1] / g[1, 1])


def de_turck_x(g: ChartMetric, h: ChartMetric, pt) -> float:
    d = g.christoffel(pt) - h.christoffel(pt)
    return float(np.einsum("ij,ij->", g.inverse(pt), d[0]))


def lie_derivative(g: ChartMetric, wx: Scalar, pt) -> np.ndarray:
    """``nabla_i W_j + nabla_j W_i`` for the radial field ``W = wx d_x``."""
    def wlow(p):
        v = np.zeros(g.n + 1)
        v[0] = wx(p[0])
        return g.metric(p) @ v
    G = g.christoffel(pt)
    dW = _grad(wlow, pt, g.h)  # dW[i, j] = d_i W_j
    cov = dW - np.einsum("mij,m->ij", G, wlow(pt))
    return cov + cov.T
