"""Spectral stability of cone cross-sections.

Everything that decides a verdict runs on :class:`fractions.Fraction`. Square
roots only enter through indicial exponents (reported as floats) and through
``sqrt(n^2 + 2n + 1) = n + 1``, which is exact.

Conventions: ``n = dim F``; the cross-section is Einstein with constant
``n - 1``; Laplacians are nonnegative.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import polyroots
from .kvtext import format_rational
from .spectra import CrossSection, TableRow

__all__ = [
    "InsufficientSpectralData",
    "ConditionResult",
    "StabilityVerdict",
    "WeightWindow",
    "IndicialData",
    "nu",
    "mu_exponents",
    "admissible_weights",
    "weight_inequalities",
    "check_tangential",
    "oneform_threshold",
    "build_V3_matrix",
    "v3_gram",
    "v3_shifted_B",
    "build_V4_matrix",
    "v4_gram",
    "scalar_polynomial",
    "scalar_sector_condition",
    "scalar_root_bound",
    "det_identities_check",
    "check_strong",
    "classify_table_row",
    "strong_assumption_check",
    "tangential_spectrum",
    "indicial_data",
    "analyze",
]

VARIANTS = ("squared", "printed")


class InsufficientSpectralData(ValueError):
    """The listed spectra are not certified complete far enough to decide a condition."""


@dataclass(frozen=True)
class ConditionResult:
    name: str
    passed: bool
    threshold: str
    witness: str | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "threshold": self.threshold,
                "witness": self.witness, "detail": self.detail}


@dataclass
class StabilityVerdict:
    """Raw outcome of each criterion. Flags are ``None`` when not evaluated."""

    tangential: bool | None = None
    strict: bool | None = None
    strong: bool | None = None
    conditions: dict[str, ConditionResult] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def add(self, cond: ConditionResult) -> ConditionResult:
        self.conditions[cond.name] = cond
        return cond

    def as_dict(self) -> dict:
        return {
            "tangential": self.tangential,
            "strict": self.strict,
            "strong": self.strong,
            "conditions": {k: v.as_dict() for k, v in sorted(self.conditions.items())},
            "notes": list(self.notes),
        }


def _q(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


# ---------------------------------------------------------------------------
# indicial exponents and weights


def nu(n: int, lam) -> float:
    """Indicial root ``sqrt(lam + ((n-1)/2)^2)``."""
    rad = _q(lam) + Fraction(n - 1, 2) ** 2
    if rad < 0:
        raise ValueError(f"negative radicand {rad} for n={n}, lambda={lam}")
    return math.sqrt(rad)


def mu_exponents(n: int, u0, u1, variant: str = "squared") -> tuple[float, float]:
    """Decay exponents ``(mu0, mu1)`` from the lowest nonzero tangential eigenvalues.

    ``variant="printed"`` uses ``sqrt(u + (n-1)/2) - (n-1)/2``; ``"squared"``
    uses ``sqrt(u + ((n-1)/2)^2) - (n-1)/2``, the form matching :func:`nu`.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    half = Fraction(n - 1, 2)
    out = []
    for u in (u0, u1):
        u = _q(u)
        if u <= 0:
            raise ValueError(f"tangential eigenvalue must be positive, got {u}")
        shift = half if variant == "printed" else half * half
        out.append(math.sqrt(u + shift) - float(half))
    return out[0], out[1]


@dataclass(frozen=True)
class WeightWindow:
    """Admissible Hoelder weights ``(gamma0, gamma1)`` and exponent ``alpha``.

    Besides the interval bounds, ``gamma1 <= gamma0 <= 2*gamma1`` must hold.
    ``sample`` is exact (rationals) so every inequality can be rechecked exactly.
    """

    mu0: float
    mu1: float
    gamma: float
    floor: float
    gamma0_interval: tuple[float, float]
    gamma1_interval: tuple[float, float]
    alpha_interval: tuple[float, float] | None
    feasible: bool
    sample: tuple[Fraction, Fraction, Fraction] | None

    @property
    def sample_point(self) -> tuple[float, float, float] | None:
        return None if self.sample is None else tuple(float(v) for v in self.sample)

    def as_dict(self) -> dict:
        return {
            "mu0": self.mu0, "mu1": self.mu1, "gamma": self.gamma, "floor": self.floor,
            "gamma0_interval": list(self.gamma0_interval),
            "gamma1_interval": list(self.gamma1_interval),
            "alpha_interval": None if self.alpha_interval is None else list(self.alpha_interval),
            "feasible": self.feasible,
            "sample_point": None if self.sample is None else list(self.sample_point),
        }


_SHRINK = Fraction(999999, 1000000)


def admissible_weights(n: int, mu0: float, mu1: float, gamma: float, floor: float = 0.0) -> WeightWindow:
    """Weight window for the given decay exponents and background regularity ``gamma``.

    With ``floor = 0`` the sample is ``gamma1 = (1-1e-6) min(mu1, gamma, mu0)``,
    ``gamma0 = (1-1e-6) min(mu0, 2 gamma1, gamma)`` (raised to ``gamma1`` if
    needed) and ``alpha`` half the remaining slack. A positive ``floor`` asks for
    ``gamma0, gamma1 > floor``; the same rule is applied above the floor.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    m0, m1, g, lo = (Fraction(float(v)) for v in (mu0, mu1, gamma, floor))
    if lo < 0:
        raise ValueError("floor must be nonnegative")
    g0_int = (float(lo), float(min(m0, g)))
    g1_int = (float(lo), float(min(m1, g)))
    if not (m0 > lo and m1 > lo and g > lo):
        return WeightWindow(float(mu0), float(mu1), float(gamma), float(floor),
                            g0_int, g1_int, None, False, None)
    gamma1 = lo + _SHRINK * (min(m1, g, m0) - lo)
    gamma0 = lo + _SHRINK * (min(m0, 2 * gamma1, g) - lo)
    gamma0 = max(gamma0, gamma1)
    slack = min(m0 - gamma0, m1 - gamma1)
    alpha = slack / 2
    sample = (gamma0, gamma1, alpha)
    ok = all(weight_inequalities(sample, mu0, mu1, gamma).values())
    if lo > 0:
        ok = ok and gamma0 > lo and gamma1 > lo
    return WeightWindow(float(mu0), float(mu1), float(gamma), float(floor), g0_int, g1_int,
                        (0.0, float(slack)), ok, sample if ok else None)


def weight_inequalities(sample, mu0, mu1, gamma) -> dict[str, bool]:
    """Evaluate every weight restriction exactly (floats are converted to exact rationals)."""
    g0, g1, a = (Fraction(v) if not isinstance(v, Fraction) else v for v in sample)
    m0, m1, g = (Fraction(float(v)) for v in (mu0, mu1, gamma))
    return {
        "gamma0 in (0, mu0)": 0 < g0 < m0,
        "gamma0 <= 2 gamma1": g0 <= 2 * g1,
        "gamma0 < gamma": g0 < g,
        "gamma1 in (0, mu1)": 0 < g1 < m1,
        "gamma1 <= gamma0": g1 <= g0,
        "gamma1 < gamma": g1 < g,
        "alpha in (0, mu0 - gamma0)": 0 < a < m0 - g0,
        "alpha in (0, mu1 - gamma1)": 0 < a < m1 - g1,
    }


def strong_assumption_check(u0, u1, n: int) -> bool:
    """Strong tangential stability in the form ``u0 > n`` and ``u1 > n``."""
    return _q(u0) > n and _q(u1) > n


# ---------------------------------------------------------------------------
# tangential / strict stability


def check_tangential(cs: CrossSection) -> StabilityVerdict:
    """Tangential and strict tangential stability from TT and scalar spectra."""
    n = cs.n
    top = Fraction(2 * (n + 1))
    if cs.complete_below < top:
        raise InsufficientSpectralData(
            f"insufficient spectral data: need spectra complete below {format_rational(top)}, "
            f"have {format_rational(cs.complete_below)}")
    v = StabilityVerdict()
    if n < 3:
        v.notes.append("criterion is stated for n >= 3; applied verbatim for n = 2")

    tt = cs.tt_einstein_spectrum
    neg = [x for x in tt if x < 0]
    nonpos = [x for x in tt if x <= 0]
    c1 = v.add(ConditionResult("tt_nonnegative", not neg, "Spec(Delta_E|TT) >= 0",
                               format_rational(neg[0]) if neg else None))
    c2 = v.add(ConditionResult("tt_positive", not nonpos, "Spec(Delta_E|TT) > 0",
                               format_rational(nonpos[0]) if nonpos else None))

    pos = cs.positive_scalar
    open_hits = [x for x in pos if n < x < top]
    closed_hits = [x for x in pos if n <= x <= top]
    c3 = v.add(ConditionResult("scalar_outside_open", not open_hits,
                               f"Spec(Delta) \\ {{0}} avoids ({n}, {format_rational(top)})",
                               format_rational(open_hits[0]) if open_hits else None))
    c4 = v.add(ConditionResult("scalar_outside_closed", not closed_hits,
                               f"Spec(Delta) \\ {{0}} avoids [{n}, {format_rational(top)}]",
                               format_rational(closed_hits[0]) if closed_hits else None))
    v.tangential = c1.passed and c3.passed
    v.strict = c2.passed and c4.passed
    if v.strict and cs.complete_below == top:
        raise InsufficientSpectralData(
            f"insufficient spectral data: an unlisted eigenvalue {format_rational(top)} "
            "would decide strict stability")
    return v


# ---------------------------------------------------------------------------
# strong tangential stability: sector matrices


def oneform_threshold(n: int) -> Fraction:
    """``n + sqrt(n^2 + 2n + 1)``, exactly ``2n + 1``."""
    rad = n * n + 2 * n + 1
    r = math.isqrt(rad)
    assert r * r == rad
    return Fraction(n + r)


def build_V3_matrix(n: int, mu) -> tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]:
    """Quadratic form of the tangential operator on the coclosed 1-form sector."""
    mu = _q(mu)
    d = mu - (n - 1)
    return ((d * d / 2, -2 * d), (-2 * d, 2 * mu + 2 * n + 6))


def v3_gram(n: int, mu) -> tuple[Fraction, Fraction]:
    mu = _q(mu)
    return ((mu - (n - 1)) / 2, Fraction(2))


def v3_shifted_B(n: int, mu):
    """Column-rescaled form of the shifted sector matrix; positive definite iff the shift is."""
    mu = _q(mu)
    return (((mu - (2 * n - 1)) / 2, -2 * (mu - (n - 1))), (Fraction(-2), 2 * mu + 6))


def build_V4_matrix(n: int, lam) -> tuple[tuple[Fraction, ...], ...]:
    """Tangential operator minus ``n`` on the scalar-generated sector, exact entries."""
    lam = _q(lam)
    a11 = n * (n - 1) * lam * (lam - n) * (lam - 2 * (n - 1) - n)
    a22 = 2 * lam * (lam - (n - 1) + 3)
    a33 = n * ((n + 1) * lam - 2 * (n - 1) - n * (n + 1) + 2 * n * (n + 3))
    a12 = -4 * (n - 1) * lam * (lam - n)
    a23 = 4 * (n + 1) * lam
    z = Fraction(0)
    return ((a11, a12, z), (a12, a22, a23), (z, a23, a33))


def v4_gram(n: int, lam) -> tuple[Fraction, Fraction, Fraction]:
    lam = _q(lam)
    return (n * (n - 1) * lam * (lam - n), 2 * lam, Fraction(n * (n + 1)))


def _det3(m) -> Fraction:
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _padd(*ps):
    size = max(len(p) for p in ps)
    out = [Fraction(0)] * size
    for p in ps:
        off = size - len(p)
        for i, c in enumerate(p):
            out[off + i] += c
    return out


def scalar_polynomial(n: int) -> list[Fraction]:
    """Coefficients (highest first) of the cubic deciding the scalar sector.

    The printed juxtaposition ``n(...)(...)n(...)`` is read as an ``n^2`` factor.
    """
    def lin(c):
        return [Fraction(1), Fraction(c)]

    t1 = _pmul(_pmul(lin(-3 * n + 2), lin(4 - n)), lin(n + 2))
    t1 = [c * n * n for c in t1]
    t2 = _pmul(lin(-n), lin(n + 2))
    t2 = [c * (-8 * n * (n - 1)) for c in t2]
    t3 = _pmul([Fraction(1), Fraction(0)], lin(-3 * n + 2))
    t3 = [c * (-8 * n * (n + 1)) for c in t3]
    return _padd(t1, t2, t3)


def scalar_sector_condition(n: int, lam) -> tuple[Fraction, bool]:
    lam = _q(lam)
    p = (n * (lam - 3 * n + 2) * (lam + 4 - n) * n * (lam + n + 2)
         - 8 * n * (n - 1) * (lam - n) * (lam + n + 2)
         - 8 * lam * n * (n + 1) * (lam - 3 * n + 2))
    return p, p > 0


@lru_cache(maxsize=None)
def scalar_root_bound(n: int) -> Fraction:
    """Certified upper end of the largest real root of the scalar cubic.

    The cubic is positive on ``(bound, inf)``; when the root is rational it is
    returned exactly.
    """
    iso = polyroots.largest_real_root(scalar_polynomial(n))
    assert iso is not None  # odd degree
    return iso[1]


def det_identities_check(n: int, lam) -> bool:
    """Exact check of the two determinant factorisations of the V4 matrix."""
    lam = _q(lam)
    a = build_V4_matrix(n, lam)
    minor = a[1][1] * a[2][2] - a[1][2] * a[2][1]
    rhs_minor = lam * (2 * n * (n + 1) * lam ** 2 - 4 * (n + 1) * (n + 4) * lam
                       - 2 * n * (n - 4) * (n * n + 3 * n + 2))
    p, _ = scalar_sector_condition(n, lam)
    rhs_full = (n - 1) * lam * (lam - n) * 2 * lam * (n + 1) * p
    return minor == rhs_minor and _det3(a) == rhs_full


def _sector_eigs(m, gram) -> list[float]:
    keep = [i for i, gv in enumerate(gram) if gv > 0]
    if not keep:
        return []
    mm = np.array([[float(m[i][j]) for j in keep] for i in keep])
    s = np.array([1.0 / math.sqrt(float(gram[i])) for i in keep])
    return sorted(np.linalg.eigvalsh(mm * s[:, None] * s[None, :]).tolist())


def tangential_spectrum(cs: CrossSection) -> dict[str, list[float]]:
    """Eigenvalues of the tangential operator on trace-free tensors, sector by sector.

    Computed from the listed spectra via the Gram-normalised sector matrices
    (floats; diagnostic only). Sectors whose Gram matrix is indefinite, which
    happens only for data below the Obata-type bounds, are skipped.
    """
    n = cs.n
    out = {"tt": [float(k) for k in cs.tt_einstein_spectrum], "oneform": [], "scalar": []}
    for mu in cs.coclosed_oneform_spectrum:
        m = build_V3_matrix(n, mu)
        g = v3_gram(n, mu)
        if g[0] < 0:
            continue
        out["oneform"].extend(_sector_eigs(m, g))
    for lam in cs.scalar_spectrum:
        a = build_V4_matrix(n, lam)
        g = v4_gram(n, lam)
        if g[0] < 0:
            continue
        m = tuple(tuple(a[i][j] + (n * g[i] if i == j else 0) for j in range(3)) for i in range(3))
        out["scalar"].extend(_sector_eigs(m, g))
    return out


@dataclass(frozen=True)
class IndicialData:
    n: int
    u0: float
    u1: float
    mu0: float
    mu1: float
    variant: str
    nu_of: dict[float, float]

    def as_dict(self) -> dict:
        return {"n": self.n, "u0": self.u0, "u1": self.u1, "mu0": self.mu0, "mu1": self.mu1,
                "variant": self.variant}


def indicial_data(cs: CrossSection, u0=None, variant: str = "squared") -> IndicialData:
    """Indicial data of the cone over ``cs``.

    ``u0`` defaults to the smallest nonzero eigenvalue from :func:`tangential_spectrum`.
    """
    u1 = cs.first_nonzero_scalar
    if u1 is None:
        raise InsufficientSpectralData("no nonzero scalar eigenvalue listed")
    spec = tangential_spectrum(cs)
    allvals = sorted(v for vals in spec.values() for v in vals)
    if u0 is None:
        nz = [v for v in allvals if abs(v) > 1e-12]
        if not nz:
            raise InsufficientSpectralData("no nonzero tangential eigenvalue available")
        u0 = nz[0]
    m0, m1 = mu_exponents(cs.n, Fraction(float(u0)) if not isinstance(u0, Fraction) else u0, u1, variant)
    nu_of = {v: nu(cs.n, Fraction(v)) for v in allvals if v + ((cs.n - 1) / 2) ** 2 >= 0}
    return IndicialData(cs.n, float(u0), float(u1), m0, m1, variant, nu_of)


# ---------------------------------------------------------------------------
# strong tangential stability


def check_strong(cs: CrossSection, variant: str = "squared") -> StabilityVerdict:
    """Strong tangential stability from the three spectral conditions.

    Listed eigenvalues are checked exactly. The quantifier over all positive
    scalar eigenvalues is closed by the completeness threshold: it must exceed
    the largest root of the cubic, beyond which the cubic is positive. A failure
    witnessed by listed data decides the verdict even when the threshold is low.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n = cs.n
    v = StabilityVerdict()
    if n < 3:
        v.notes.append("criterion is stated for n >= 3; applied verbatim for n = 2")
    cb = cs.complete_below
    need: list[tuple[str, Fraction]] = []

    bad = [x for x in cs.tt_einstein_spectrum if x <= n]
    c_tt = v.add(ConditionResult("tt_gt_n", not bad, f"Spec(Delta_E|TT) > {n}",
                                 f"TT <= n: {format_rational(bad[0])}" if bad else None))
    if c_tt.passed:
        need.append(("tt_gt_n", Fraction(n)))

    thr = oneform_threshold(n)
    bad = [x for x in cs.coclosed_oneform_spectrum if x <= thr]
    c_one = v.add(ConditionResult("oneform_gt_2n+1", not bad, f"Spec(Delta|coclosed 1-forms) > {thr}",
                                  format_rational(bad[0]) if bad else None))
    if c_one.passed:
        need.append(("oneform_gt_2n+1", thr))

    root = scalar_root_bound(n)
    bad = []
    for lam in cs.positive_scalar:
        p, ok = scalar_sector_condition(n, lam)
        if not ok:
            bad.append((lam, p))
    c_sc = v.add(ConditionResult(
        "scalar_cubic_positive", not bad, f"P(lambda) > 0 for all lambda > 0; largest root {format_rational(root)}",
        f"lambda={format_rational(bad[0][0])}, P={format_rational(bad[0][1])}" if bad else None,
        "scalar sector P < 0" if bad and bad[0][1] < 0 else ("scalar sector P = 0" if bad else "")))
    if c_sc.passed:
        need.append(("scalar_cubic_positive", root))

    u1 = cs.first_nonzero_scalar
    if u1 is not None:
        v.notes.append(f"u1 = {format_rational(u1)}; u1 > n: {u1 > n}")
        v.notes.append("mu1 ({}) = {:.17g}".format(variant, _mu_single(n, u1, variant)))

    failed = not (c_tt.passed and c_one.passed and c_sc.passed)
    if not failed:
        short = [(name, t) for name, t in need if cb <= t]
        if short:
            name, t = short[0]
            raise InsufficientSpectralData(
                f"insufficient spectral data: condition {name} needs spectra complete above "
                f"{format_rational(t)}, have {format_rational(cb)}")
    v.strong = not failed
    return v


def _mu_single(n, u, variant):
    return mu_exponents(n, u, u, variant)[0]


def classify_table_row(row: TableRow) -> StabilityVerdict:
    """Strong tangential stability verdict from ``(dim_listed, Lambda, Theta)``.

    Uses ``Delta_L = Delta_E + 2(n-1)`` on TT tensors and the 1-form relation to
    turn the normalised eigenvalue ``Theta`` into the two tensor conditions, and
    ``lambda_1 = (n-1) Lambda`` for the scalar cubic.
    """
    n = row.dim_listed
    e = Fraction(n - 1)
    v = StabilityVerdict()
    th = e * row.Theta
    v.add(ConditionResult("tt_gt_n", th - 2 * e > n, f"(n-1)Theta - 2(n-1) > {n}",
                          None if th - 2 * e > n else format_rational(th - 2 * e)))
    one = 2 * n - 1 + (n + 1)
    v.add(ConditionResult("oneform_gt_2n+1", th > one, f"(n-1)Theta > {one}",
                          None if th > one else format_rational(th)))
    lam1 = e * row.Lambda
    p, ok = scalar_sector_condition(n, lam1)
    root = scalar_root_bound(n)
    certified = ok and lam1 > root
    v.add(ConditionResult(
        "scalar_cubic_positive", certified,
        f"P((n-1)Lambda) > 0 with (n-1)Lambda above largest root {format_rational(root)}",
        None if certified else f"lambda={format_rational(lam1)}, P={format_rational(p)}",
        "" if certified else ("scalar sector P < 0" if p < 0 else
                              "scalar sector P = 0" if p == 0 else "below largest root")))
    if row.Theta <= 3:
        v.notes.append("Theta <= 3: tensor conditions fail")
    v.strong = all(c.passed for c in v.conditions.values())
    return v


def analyze(cs: CrossSection, variant: str = "squared") -> StabilityVerdict:
    """Tangential, strict and strong verdicts in one record."""
    t = check_tangential(cs)
    s = check_strong(cs, variant)
    out = StabilityVerdict(t.tangential, t.strict, s.strong)
    for c in list(t.conditions.values()) + list(s.conditions.values()):
        out.add(c)
    out.notes = t.notes + [x for x in s.notes if x not in t.notes]
    return out
