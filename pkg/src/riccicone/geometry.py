"""Warped-product cone metrics ``g = q dx^2 + phi^2 g_F`` and their curvature.

``F`` is Einstein with constant ``n - 1`` where ``n = dim F``. Tensors in the
symmetric-diagonal class are stored by their components on a unit radial
frame vector and on any unit tangent vector of ``F`` (``t_rr``, ``t_sph``).

Sign convention: the scalar Laplacian is nonnegative, ``Delta f = -(f_ss + n (phi_s/phi) f_s)``,
with arclength derivatives ``f_s = f'/sqrt(q)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .stencils import Stencil, make_stencil

__all__ = [
    "GeometryError",
    "RadialGrid",
    "WarpedMetric",
    "DiagonalTwoTensor",
    "RadialVectorField",
    "Curvature",
    "Christoffels",
    "LieDerivative",
    "DecayEstimate",
    "dim_of",
    "curvature",
    "christoffels",
    "de_turck_field",
    "de_turck_derivative",
    "lie_derivative_radial",
    "scalar_laplacian",
    "conformal_ricci",
    "lichnerowicz_diagonal",
    "perturbation_decay",
    "exact_cone",
]


class GeometryError(ValueError):
    pass


def dim_of(cs) -> int:
    """Accept a cross-section (anything with ``.n``) or a plain dimension."""
    n = getattr(cs, "n", cs)
    n = int(n)
    if n < 1:
        raise GeometryError(f"cross-section dimension must be positive, got {n}")
    return n


@dataclass(frozen=True, eq=False)
class RadialGrid:
    nodes: np.ndarray
    p: float = 1.0
    order: int = 4

    def __post_init__(self):
        x = np.ascontiguousarray(self.nodes, dtype=float)
        if x.ndim != 1 or len(x) < 2:
            raise GeometryError("grid needs at least two nodes")
        if not np.all(np.diff(x) > 0):
            raise GeometryError("grid nodes must be strictly increasing")
        if x[0] <= 0:
            raise GeometryError("x_min must be positive (tip excised)")
        if self.p < 1:
            raise GeometryError("grading exponent must be >= 1")
        x.setflags(write=False)
        object.__setattr__(self, "nodes", x)

    def __len__(self) -> int:
        return len(self.nodes)

    @cached_property
    def stencil(self) -> Stencil:
        return make_stencil(self.nodes, self.order)

    def with_order(self, order: int) -> "RadialGrid":
        return RadialGrid(self.nodes, self.p, order)

    def d1(self, f) -> np.ndarray:
        return self.stencil.d1(np.asarray(f, dtype=float))

    def d2(self, f) -> np.ndarray:
        return self.stencil.d2(np.asarray(f, dtype=float))

    def same_as(self, other: "RadialGrid") -> bool:
        return self is other or (len(self) == len(other) and np.array_equal(self.nodes, other.nodes)
                                 and self.order == other.order)


@dataclass(frozen=True, eq=False)
class WarpedMetric:
    grid: RadialGrid
    q: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        phi = np.asarray(self.phi, dtype=float)
        if q.shape != self.grid.nodes.shape or phi.shape != self.grid.nodes.shape:
            raise GeometryError("profile length does not match the grid")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(phi))):
            raise GeometryError("non-finite profile values")
        if np.any(q <= 0) or np.any(phi <= 0):
            raise GeometryError("nonpositive q or phi")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "phi", phi)

    @classmethod
    def from_phi2(cls, grid: RadialGrid, q, phi2) -> "WarpedMetric":
        phi2 = np.asarray(phi2, dtype=float)
        if np.any(~(phi2 > 0)):
            raise GeometryError("nonpositive phi^2")
        return cls(grid, q, np.sqrt(phi2))

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    @cached_property
    def phi2(self) -> np.ndarray:
        return self.phi * self.phi

    @cached_property
    def derivs(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(q', q'', phi', phi'')`` from the grid stencils."""
        g = self.grid
        return g.d1(self.q), g.d2(self.q), g.d1(self.phi), g.d2(self.phi)

    def scaled(self, c2: float) -> "WarpedMetric":
        """The metric ``c2 * g``."""
        return WarpedMetric(self.grid, c2 * self.q, np.sqrt(c2) * self.phi)


def exact_cone(grid: RadialGrid) -> WarpedMetric:
    return WarpedMetric(grid, np.ones(len(grid)), grid.nodes.copy())


@dataclass(frozen=True, eq=False)
class DiagonalTwoTensor:
    t_rr: np.ndarray
    t_sph: np.ndarray

    def norm(self, n: int) -> np.ndarray:
        return np.sqrt(self.t_rr ** 2 + n * self.t_sph ** 2)

    def trace(self, n: int) -> np.ndarray:
        return self.t_rr + n * self.t_sph

    def __add__(self, other: "DiagonalTwoTensor") -> "DiagonalTwoTensor":
        return DiagonalTwoTensor(self.t_rr + other.t_rr, self.t_sph + other.t_sph)

    def __sub__(self, other: "DiagonalTwoTensor") -> "DiagonalTwoTensor":
        return DiagonalTwoTensor(self.t_rr - other.t_rr, self.t_sph - other.t_sph)

    def scale(self, c) -> "DiagonalTwoTensor":
        return DiagonalTwoTensor(c * self.t_rr, c * self.t_sph)

    def to_coordinates(self, g: WarpedMetric) -> tuple[np.ndarray, np.ndarray]:
        """``(T_xx, coefficient of g_F)``."""
        return g.q * self.t_rr, g.phi2 * self.t_sph

    @classmethod
    def from_coordinates(cls, g: WarpedMetric, txx, tf) -> "DiagonalTwoTensor":
        return cls(np.asarray(txx) / g.q, np.asarray(tf) / g.phi2)


@dataclass(frozen=True, eq=False)
class RadialVectorField:
    wx: np.ndarray


@dataclass(frozen=True, eq=False)
class Curvature:
    ric: DiagonalTwoTensor
    scal: np.ndarray
    k_rad: np.ndarray
    k_sph: np.ndarray


@dataclass(frozen=True, eq=False)
class Christoffels:
    Gxxx: np.ndarray
    Gx_sph: np.ndarray   # multiplies g_F
    Gsph_x: np.ndarray


@dataclass(frozen=True, eq=False)
class LieDerivative:
    xx: np.ndarray
    sph: np.ndarray      # multiplies g_F


def _arclength(g: WarpedMetric):
    q = g.q
    qp, _, pp, ppp = g.derivs
    phi_s = pp / np.sqrt(q)
    phi_ss = ppp / q - pp * qp / (2 * q * q)
    return phi_s, phi_ss


def curvature(g: WarpedMetric, cs) -> Curvature:
    n = dim_of(cs)
    phi = g.phi
    phi_s, phi_ss = _arclength(g)
    k_rad = -phi_ss / phi
    k_sph = (1 - phi_s * phi_s) / (phi * phi)
    rr = n * k_rad
    sph = k_rad + (n - 1) * k_sph
    return Curvature(DiagonalTwoTensor(rr, sph), 2 * n * k_rad + n * (n - 1) * k_sph, k_rad, k_sph)


def christoffels(g: WarpedMetric) -> Christoffels:
    qp, _, pp, _ = g.derivs
    return Christoffels(qp / (2 * g.q), -g.phi * pp / g.q, pp / g.phi)


def _check_pair(g: WarpedMetric, h: WarpedMetric):
    if not g.grid.same_as(h.grid):
        raise GeometryError("metrics live on different grids")


def de_turck_field(g: WarpedMetric, h: WarpedMetric, cs) -> RadialVectorField:
    """``W^x = g^{ij} (Gamma^x_ij(g) - Gamma^x_ij(h))``, radial by symmetry."""
    _check_pair(g, h)
    n = dim_of(cs)
    a, b = _ab(g, h)
    return RadialVectorField(a / g.q - n * b / g.phi2)


def _ab(g: WarpedMetric, h: WarpedMetric):
    # differences of Christoffel symbols, formed so that g == h cancels exactly
    gq, _, gp, _ = g.derivs
    hq, _, hp, _ = h.derivs
    a = gq / (2 * g.q) - hq / (2 * h.q)
    b = g.phi * gp / g.q - h.phi * hp / h.q
    return a, b


def de_turck_derivative(g: WarpedMetric, h: WarpedMetric, cs) -> np.ndarray:
    """``d W^x / dx`` from second derivatives of the profiles (no nested differencing)."""
    _check_pair(g, h)
    n = dim_of(cs)
    a, b = _ab(g, h)
    gq, gqq, gp, gpp = g.derivs
    hq, hqq, hp, hpp = h.derivs
    da = (gqq / (2 * g.q) - gq * gq / (2 * g.q ** 2)) - (hqq / (2 * h.q) - hq * hq / (2 * h.q ** 2))
    db = ((gp * gp + g.phi * gpp) / g.q - g.phi * gp * gq / g.q ** 2) \
        - ((hp * hp + h.phi * hpp) / h.q - h.phi * hp * hq / h.q ** 2)
    return da / g.q - a * gq / g.q ** 2 - n * db / g.phi2 + 2 * n * b * gp / g.phi ** 3


def lie_derivative_radial(W: RadialVectorField, g: WarpedMetric, wx_prime=None) -> LieDerivative:
    """Coordinate components of ``L_W g`` for radial ``W``."""
    wx = np.asarray(W.wx, dtype=float)
    if wx.shape != g.q.shape:
        raise GeometryError("vector field does not match the grid")
    wp = g.grid.d1(wx) if wx_prime is None else wx_prime
    qp, _, pp, _ = g.derivs
    # (phi^2)' = 2 phi phi', from the same stencil as the curvature
    return LieDerivative(wx * qp + 2 * g.q * wp, wx * 2 * g.phi * pp)


def scalar_laplacian(g: WarpedMetric, f, cs) -> np.ndarray:
    """Nonnegative Laplace-Beltrami operator on radial functions."""
    n = dim_of(cs)
    f = np.asarray(f, dtype=float)
    fp = g.grid.d1(f)
    fpp = g.grid.d2(f)
    qp, _, pp, _ = g.derivs
    f_s = fp / np.sqrt(g.q)
    f_ss = fpp / g.q - fp * qp / (2 * g.q ** 2)
    return -(f_ss + n * (pp / np.sqrt(g.q)) / g.phi * f_s)


def conformal_ricci(g: WarpedMetric, u, cs) -> DiagonalTwoTensor:
    """Ricci tensor of ``(1+u) g`` in the frame of ``(1+u) g``.

    Uses ``Ric~ = Ric - (n-1)(Hess f - df.df) + (Delta f - (n-1)|df|^2) g`` with
    ``1 + u = e^{2f}`` in dimension ``n + 1``.
    """
    n = dim_of(cs)
    u = np.asarray(u, dtype=float)
    if np.any(1 + u <= 0):
        raise GeometryError("1 + u must be positive")
    f = 0.5 * np.log1p(u)
    ric = curvature(g, n).ric
    fp = g.grid.d1(f)
    fpp = g.grid.d2(f)
    qp, _, pp, _ = g.derivs
    f_s = fp / np.sqrt(g.q)
    f_ss = fpp / g.q - fp * qp / (2 * g.q ** 2)
    sigma = pp / np.sqrt(g.q) / g.phi
    lap = -(f_ss + n * sigma * f_s)
    iso = lap - (n - 1) * f_s ** 2
    rr = ric.t_rr - (n - 1) * (f_ss - f_s ** 2) + iso
    sph = ric.t_sph - (n - 1) * sigma * f_s + iso
    return DiagonalTwoTensor(rr / (1 + u), sph / (1 + u))


def lichnerowicz_diagonal(g: WarpedMetric, T: DiagonalTwoTensor, cs) -> DiagonalTwoTensor:
    """``Delta_L T = nabla* nabla T + Ric.T + T.Ric - 2 Rm(T)`` on the diagonal class.

    Splitting ``T = f g + v ds^2`` (``f = t_sph``, ``v = t_rr - t_sph``) gives
    ``Delta_L(f g) = (Delta f) g`` and a curvature-coupled term for ``v ds^2``.
    """
    n = dim_of(cs)
    f = T.t_sph
    v = T.t_rr - T.t_sph
    curv = curvature(g, n)
    _, _, pp, _ = g.derivs
    sigma = pp / np.sqrt(g.q) / g.phi
    lf = scalar_laplacian(g, f, n)
    lv = scalar_laplacian(g, v, n)
    rr = lf + lv + v * (2 * n * sigma ** 2 + 2 * curv.ric.t_rr)
    sph = lf - 2 * v * (sigma ** 2 + curv.k_rad)
    return DiagonalTwoTensor(rr, sph)


@dataclass(frozen=True)
class DecayEstimate:
    gamma_hat: float | None
    stderr: float | None
    band: float | None
    residual: float | None
    exact: bool
    window: tuple[int, int]

    def as_dict(self) -> dict:
        return {"gamma_hat": self.gamma_hat, "stderr": self.stderr, "band": self.band,
                "residual": self.residual, "exact": self.exact, "window": list(self.window)}


def perturbation_decay(g: WarpedMetric, gbar: WarpedMetric, cs) -> DecayEstimate:
    """Fit ``|g - gbar| ~ x^gamma`` on the third of the grid nearest the tip.

    The norm is taken in the orthonormal frame of ``gbar``. ``band`` is twice the
    least-squares standard error of the slope.
    """
    _check_pair(g, gbar)
    n = dim_of(cs)
    d = np.sqrt(((g.q - gbar.q) / gbar.q) ** 2 + n * ((g.phi2 - gbar.phi2) / gbar.phi2) ** 2)
    m = len(d)
    lo, hi = 1, max(m // 3, 4)
    x = g.x[lo:hi]
    y = d[lo:hi]
    keep = y > 0
    if not np.any(d > 0):
        return DecayEstimate(None, None, None, None, True, (lo, hi))
    if keep.sum() < 3:
        return DecayEstimate(None, None, None, None, False, (lo, hi))
    lx, ly = np.log(x[keep]), np.log(y[keep])
    coef, cov = np.polyfit(lx, ly, 1, cov="unscaled")
    res = ly - np.polyval(coef, lx)
    dof = max(len(lx) - 2, 1)
    s2 = float(res @ res) / dof
    se = float(np.sqrt(cov[0, 0] * s2))
    return DecayEstimate(float(coef[0]), se, 2 * se, float(np.sqrt(s2)), False, (lo, hi))
