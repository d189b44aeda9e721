"""Finite-difference weights on nonuniform 1-D grids."""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

ORDERS = (2, 4, 6)


def fd_weights(nodes: np.ndarray, x0: float, deriv: int) -> np.ndarray:
    """Lagrange weights for the ``deriv``-th derivative at ``x0`` from ``nodes``."""
    h = np.asarray(nodes, dtype=float) - x0
    scale = np.max(np.abs(h))
    s = h / scale
    m = len(s)
    # Taylor moment system in scaled offsets: sum_j w_j s_j^k / k! = delta_{k,deriv}
    a = np.vander(s, m, increasing=True).T / np.array([factorial(k) for k in range(m)])[:, None]
    rhs = np.zeros(m)
    rhs[deriv] = 1.0
    w = np.linalg.solve(a, rhs)
    # one step of iterative refinement
    w += np.linalg.solve(a, rhs - a @ w)
    return w / scale ** deriv


@dataclass(frozen=True)
class Stencil:
    """Banded derivative operators: ``(D f)_i = sum_k w[i, k] (f[start_i + k] - f_i)``.

    Differencing against ``f_i`` keeps constants exactly in the kernel.
    """

    order: int
    start: np.ndarray  # int64, shape (N,)
    w1: np.ndarray     # shape (N, width)
    w2: np.ndarray

    @property
    def width(self) -> int:
        return self.w1.shape[1]

    def d1(self, f: np.ndarray) -> np.ndarray:
        return _apply(self.start, self.w1, f)

    def d2(self, f: np.ndarray) -> np.ndarray:
        return _apply(self.start, self.w2, f)


def _apply(start: np.ndarray, w: np.ndarray, f: np.ndarray) -> np.ndarray:
    idx = start[:, None] + np.arange(w.shape[1])[None, :]
    return np.einsum("ik,ik->i", w, f[idx] - f[:, None])


def make_stencil(x: np.ndarray, order: int = 4) -> Stencil:
    """Centered stencils in the interior; one-sided rows take one extra node.

    The extra node keeps the one-sided second derivative at the interior order.
    Rows are zero-padded to a common width.
    """
    if order not in ORDERS:
        raise ValueError(f"stencil order must be one of {ORDERS}")
    x = np.asarray(x, dtype=float)
    n = len(x)
    width = order + 1
    cols = width + 1
    if n < cols + 1:
        raise ValueError(f"need at least {cols + 1} nodes for order {order}")
    half = order // 2
    start = np.empty(n, dtype=np.int64)
    w1 = np.zeros((n, cols))
    w2 = np.zeros((n, cols))
    for i in range(n):
        if half <= i < n - half:
            s0, m = i - half, width
        else:
            s0, m = (0 if i < half else n - cols), cols
        s0 = min(s0, n - cols)
        off = (i - half) - s0 if m == width else 0
        nodes = x[s0 + off:s0 + off + m]
        w1[i, off:off + m] = fd_weights(nodes, x[i], 1)
        w2[i, off:off + m] = fd_weights(nodes, x[i], 2)
        start[i] = s0
    return Stencil(order, start, w1, w2)
