# cython: language_level=3
"""Compiled right-hand side and RK4 step for the symmetric-diagonal flow."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, isfinite, isnan

cnp.import_array()

BACKEND = "cython"


cdef int _rhs(const double[::1] q, const double[::1] P, double[::1] phi,
              const long long[::1] start, const double[:, ::1] w1, const double[:, ::1] w2,
              const double[::1] ah, const double[::1] bh, const double[::1] dah, const double[::1] dbh,
              int n, double[::1] dq, double[::1] dP) noexcept nogil:
    cdef Py_ssize_t N = q.shape[0], width = w1.shape[1]
    cdef Py_ssize_t i, k, s
    cdef double qi, fi, Pi, d1q, d2q, d1p, d2p, dfq, dfp
    cdef double A, B, dA, dB, W, dW, phis, phiss, krad, ksph
    for i in range(N):
        if not (P[i] > 0.0) or not (q[i] > 0.0):
            return 2
        phi[i] = sqrt(P[i])
    for i in range(N):
        qi = q[i]
        fi = phi[i]
        Pi = P[i]
        s = start[i]
        d1q = 0.0
        d2q = 0.0
        d1p = 0.0
        d2p = 0.0
        for k in range(width):
            dfq = q[s + k] - qi
            dfp = phi[s + k] - fi
            d1q += w1[i, k] * dfq
            d2q += w2[i, k] * dfq
            d1p += w1[i, k] * dfp
            d2p += w2[i, k] * dfp
        A = d1q / (2.0 * qi) - ah[i]
        B = fi * d1p / qi - bh[i]
        dA = d2q / (2.0 * qi) - d1q * d1q / (2.0 * qi * qi) - dah[i]
        dB = (d1p * d1p + fi * d2p) / qi - fi * d1p * d1q / (qi * qi) - dbh[i]
        W = A / qi - n * B / Pi
        dW = dA / qi - A * d1q / (qi * qi) - n * dB / Pi + 2.0 * n * B * d1p / (Pi * fi)
        phis = d1p / sqrt(qi)
        phiss = d2p / qi - d1p * d1q / (2.0 * qi * qi)
        krad = -phiss / fi
        ksph = (1.0 - phis * phis) / Pi
        dq[i] = -2.0 * qi * (n * krad) + W * d1q + 2.0 * qi * dW
        dP[i] = -2.0 * Pi * (krad + (n - 1) * ksph) + W * 2.0 * fi * d1p
        if not (isfinite(dq[i]) and isfinite(dP[i])):
            return 1
    return 0


def rhs(double[::1] q, double[::1] P, long long[::1] start, double[:, ::1] w1, double[:, ::1] w2,
        double[::1] ah, double[::1] bh, double[::1] dah, double[::1] dbh, int n):
    """Return ``(dq, dP, status)``; status 0 ok, 1 non-finite, 2 positivity loss."""
    cdef Py_ssize_t N = q.shape[0]
    dq = np.zeros(N)
    dP = np.zeros(N)
    phi = np.empty(N)
    cdef int st
    cdef double[::1] dqv = dq, dPv = dP, phiv = phi
    with nogil:
        st = _rhs(q, P, phiv, start, w1, w2, ah, bh, dah, dbh, n, dqv, dPv)
    return dq, dP, st


cdef inline void _impose(double[::1] q, double[::1] P, double[::1] b, Py_ssize_t N) noexcept nogil:
    if not isnan(b[0]):
        q[0] = b[0]
    if not isnan(b[1]):
        P[0] = b[1]
    if not isnan(b[2]):
        q[N - 1] = b[2]
    if not isnan(b[3]):
        P[N - 1] = b[3]


def rk4_step(double[::1] q, double[::1] P, double dt, double[:, ::1] bc,
             long long[::1] start, double[:, ::1] w1, double[:, ::1] w2,
             double[::1] ah, double[::1] bh, double[::1] dah, double[::1] dbh, int n):
    """Advance ``(q, P)`` in place by one classical RK4 step.

    ``bc[s] = (q_left, P_left, q_right, P_right)`` at stage times
    ``t, t + dt/2, t + dt/2, t + dt``; Dirichlet values are imposed on every stage.
    A NaN entry leaves that end value to the one-sided discretisation.
    """
    cdef Py_ssize_t N = q.shape[0], i, s
    cdef int st = 0
    k = np.empty((4, 2, N))
    tmp = np.empty((2, N))
    phi = np.empty(N)
    cdef double[:, :, ::1] kv = k
    cdef double[:, ::1] tv = tmp
    cdef double[::1] phiv = phi
    cdef double c
    cdef double coef[3]
    coef[0] = 0.5
    coef[1] = 0.5
    coef[2] = 1.0
    with nogil:
        st = _rhs(q, P, phiv, start, w1, w2, ah, bh, dah, dbh, n, kv[0, 0], kv[0, 1])
        for s in range(1, 4):
            if st != 0:
                break
            c = coef[s - 1] * dt
            for i in range(N):
                tv[0, i] = q[i] + c * kv[s - 1, 0, i]
                tv[1, i] = P[i] + c * kv[s - 1, 1, i]
            _impose(tv[0], tv[1], bc[s], N)
            st = _rhs(tv[0], tv[1], phiv, start, w1, w2, ah, bh, dah, dbh, n, kv[s, 0], kv[s, 1])
        if st == 0:
            c = dt / 6.0
            for i in range(N):
                q[i] = q[i] + c * (kv[0, 0, i] + 2.0 * kv[1, 0, i] + 2.0 * kv[2, 0, i] + kv[3, 0, i])
                P[i] = P[i] + c * (kv[0, 1, i] + 2.0 * kv[1, 1, i] + 2.0 * kv[2, 1, i] + kv[3, 1, i])
            _impose(q, P, bc[3], N)
            for i in range(N):
                if not (isfinite(q[i]) and isfinite(P[i])):
                    st = 1
                    break
                if not (q[i] > 0.0 and P[i] > 0.0):
                    st = 2
                    break
    return st
