"""Exact real-root isolation for polynomials with rational coefficients.

Polynomials are coefficient lists, highest degree first, entries
:class:`fractions.Fraction`. Root counting uses Sturm sequences; bisection
runs on exact rationals, so every sign decision is exact.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Sequence

Poly = list[Fraction]


def _trim(p: Sequence[Fraction]) -> Poly:
    p = [Fraction(c) for c in p]
    while len(p) > 1 and p[0] == 0:
        p.pop(0)
    return p


def evaluate(p: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in p:
        acc = acc * x + c
    return acc


def derivative(p: Sequence[Fraction]) -> Poly:
    deg = len(p) - 1
    if deg == 0:
        return [Fraction(0)]
    return [c * (deg - i) for i, c in enumerate(p[:-1])]


def polyrem(a: Sequence[Fraction], b: Sequence[Fraction]) -> Poly:
    a, b = _trim(a), _trim(b)
    if b == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    while len(a) >= len(b):
        f = a[0] / b[0]
        for i, bi in enumerate(b):
            a[i] -= f * bi
        a.pop(0)
    return _trim(a) if a else [Fraction(0)]


def sturm_sequence(p: Sequence[Fraction]) -> list[Poly]:
    p = _trim(p)
    seq = [p, _trim(derivative(p))]
    while seq[-1] != [0] and len(seq[-1]) > 1:
        r = polyrem(seq[-2], seq[-1])
        if r == [0]:
            break
        seq.append([-c for c in r])
    return seq


def _sign_changes(values: Sequence[Fraction]) -> int:
    signs = [v > 0 for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _signs_at_infinity(seq: Sequence[Poly], positive: bool) -> list[int]:
    out = []
    for q in seq:
        deg = len(q) - 1
        lead = q[0]
        s = 1 if lead > 0 else -1
        if not positive and deg % 2 == 1:
            s = -s
        out.append(s)
    return out


def count_roots(p: Sequence[Fraction], lo: Fraction | None = None, hi: Fraction | None = None) -> int:
    """Number of distinct real roots in the half-open interval ``(lo, hi]``.

    ``None`` stands for minus/plus infinity.
    """
    return _count(sturm_sequence(p), lo, hi)


def _count(seq: list[Poly], lo: Fraction | None, hi: Fraction | None) -> int:
    vlo = (_sign_changes(_signs_at_infinity(seq, False)) if lo is None
           else _sign_changes([evaluate(q, lo) for q in seq]))
    vhi = (_sign_changes(_signs_at_infinity(seq, True)) if hi is None
           else _sign_changes([evaluate(q, hi) for q in seq]))
    return vlo - vhi


def cauchy_bound(p: Sequence[Fraction]) -> Fraction:
    p = _trim(p)
    lead = abs(p[0])
    return 1 + max((abs(c) / lead for c in p[1:]), default=Fraction(0))


def largest_real_root(p: Sequence[Fraction], width: Fraction = Fraction(1, 10**9)) -> tuple[Fraction, Fraction] | None:
    """Isolating interval ``(lo, hi)`` for the largest real root, or ``None`` if there is none.

    On return ``p`` has no root in ``(hi, inf)`` (certified by a Sturm count) and
    exactly one distinct root in ``(lo, hi]``. When bisection lands on the root
    exactly, ``lo == hi`` and the root is rational.
    """
    p = _trim(p)
    if len(p) == 1:
        return None
    seq = sturm_sequence(p)
    hi = cauchy_bound(p)
    lo = -hi
    if _count(seq, lo, hi) == 0:
        return None
    # shrink to the largest root: keep the upper part whenever it holds a root
    while hi - lo >= width:
        mid = (lo + hi) / 2
        above = _count(seq, mid, hi)
        if above == 0 and evaluate(p, mid) == 0:
            return mid, mid
        if above > 0:
            lo = mid
        else:
            hi = mid
    if evaluate(p, hi) == 0:
        return hi, hi
    # rational roots with small denominators are recovered exactly
    for den in (1000, 10**6):
        c = hi.limit_denominator(den)
        if lo <= c <= hi and evaluate(p, c) == 0:
            return c, c
    return lo, hi


def poly_from_roots(roots: Sequence[Fraction], lead: Fraction = Fraction(1)) -> Poly:
    p = [Fraction(lead)]
    for r in roots:
        r = Fraction(r)
        p = [a - r * b for a, b in zip(p + [Fraction(0)], [Fraction(0)] + p)]
    return p
