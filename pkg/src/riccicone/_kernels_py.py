"""Numpy fallback with the same interface and arithmetic as the compiled kernels."""
from __future__ import annotations

import numpy as np

BACKEND = "python"


def _diff(start, w, f):
    idx = start[:, None] + np.arange(w.shape[1])[None, :]
    return np.einsum("ik,ik->i", w, f[idx] - f[:, None])


def rhs(q, P, start, w1, w2, ah, bh, dah, dbh, n):
    q = np.asarray(q)
    P = np.asarray(P)
    if not (np.all(P > 0) and np.all(q > 0)):
        return np.zeros_like(q), np.zeros_like(P), 2
    phi = np.sqrt(P)
    d1q, d2q = _diff(start, w1, q), _diff(start, w2, q)
    d1p, d2p = _diff(start, w1, phi), _diff(start, w2, phi)
    A = d1q / (2.0 * q) - ah
    B = phi * d1p / q - bh
    dA = d2q / (2.0 * q) - d1q * d1q / (2.0 * q * q) - dah
    dB = (d1p * d1p + phi * d2p) / q - phi * d1p * d1q / (q * q) - dbh
    W = A / q - n * B / P
    dW = dA / q - A * d1q / (q * q) - n * dB / P + 2.0 * n * B * d1p / (P * phi)
    phis = d1p / np.sqrt(q)
    phiss = d2p / q - d1p * d1q / (2.0 * q * q)
    krad = -phiss / phi
    ksph = (1.0 - phis * phis) / P
    dq = -2.0 * q * (n * krad) + W * d1q + 2.0 * q * dW
    dP = -2.0 * P * (krad + (n - 1) * ksph) + W * 2.0 * phi * d1p
    st = 0 if (np.all(np.isfinite(dq)) and np.all(np.isfinite(dP))) else 1
    return dq, dP, st


def _impose(q, P, b):
    for arr, i, v in ((q, 0, b[0]), (P, 0, b[1]), (q, -1, b[2]), (P, -1, b[3])):
        if not np.isnan(v):
            arr[i] = v


def rk4_step(q, P, dt, bc, start, w1, w2, ah, bh, dah, dbh, n):
    args = (start, w1, w2, ah, bh, dah, dbh, n)
    ks = []
    k = rhs(q, P, *args)
    if k[2]:
        return k[2]
    ks.append(k)
    for s, c in ((1, 0.5), (2, 0.5), (3, 1.0)):
        tq = q + c * dt * ks[-1][0]
        tP = P + c * dt * ks[-1][1]
        _impose(tq, tP, bc[s])
        k = rhs(tq, tP, *args)
        if k[2]:
            return k[2]
        ks.append(k)
    c = dt / 6.0
    q += c * (ks[0][0] + 2.0 * ks[1][0] + 2.0 * ks[2][0] + ks[3][0])
    P += c * (ks[0][1] + 2.0 * ks[1][1] + 2.0 * ks[2][1] + ks[3][1])
    _impose(q, P, bc[3])
    if not (np.all(np.isfinite(q)) and np.all(np.isfinite(P))):
        return 1
    if not (np.all(q > 0) and np.all(P > 0)):
        return 2
    return 0
