"""Spectral data of cone cross-sections and the symmetric-space tables.

All spectra are exact rationals. A :class:`CrossSection` stores finite ascending
prefixes of three spectra together with a threshold ``complete_below``: every
eigenvalue strictly below it is listed.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .kvtext import (
    ConfigError,
    format_rational,
    parse_kv,
    parse_rational,
    parse_rational_list,
)

__all__ = [
    "CrossSection",
    "TableRow",
    "ValidationReport",
    "builtin_table",
    "expand_table",
    "find_row",
    "make_round_sphere",
    "validate",
    "read_cross_section",
    "dump_cross_section",
    "load_cross_section",
    "table_csv",
]


def _fractions(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(Fraction(v) for v in values)


@dataclass(frozen=True)
class CrossSection:
    """Link ``(F, g_F)`` of the cone, Einstein with constant ``n - 1``.

    ``scalar_spectrum`` holds Laplace-Beltrami eigenvalues on functions (first
    entry 0), ``tt_einstein_spectrum`` eigenvalues of the Einstein operator on TT
    tensors and ``coclosed_oneform_spectrum`` eigenvalues of the connection
    Laplacian on coclosed 1-forms. Multiplicities are irrelevant and not stored.
    """

    name: str
    n: int
    scalar_spectrum: tuple[Fraction, ...]
    tt_einstein_spectrum: tuple[Fraction, ...] = ()
    coclosed_oneform_spectrum: tuple[Fraction, ...] = ()
    complete_below: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "scalar_spectrum", _fractions(self.scalar_spectrum))
        object.__setattr__(self, "tt_einstein_spectrum", _fractions(self.tt_einstein_spectrum))
        object.__setattr__(self, "coclosed_oneform_spectrum", _fractions(self.coclosed_oneform_spectrum))
        object.__setattr__(self, "complete_below", Fraction(self.complete_below))

    @property
    def einstein_constant(self) -> Fraction:
        return Fraction(self.n - 1)

    @property
    def positive_scalar(self) -> tuple[Fraction, ...]:
        return tuple(v for v in self.scalar_spectrum if v > 0)

    @property
    def first_nonzero_scalar(self) -> Fraction | None:
        pos = self.positive_scalar
        return pos[0] if pos else None


@dataclass(frozen=True)
class TableRow:
    """One printed row of the symmetric-space tables, instantiated at ``params``.

    ``dim_listed`` is the dimension column as printed, which is not always the
    Lie-theoretic dimension (E_8 is listed as 496).
    """

    table: int
    family: str
    space: str
    dim_listed: int
    Lambda: Fraction
    Theta: Fraction
    sts_verdict: bool
    params: tuple[tuple[str, int], ...] = ()

    @property
    def label(self) -> str:
        if not self.params:
            return self.space
        ps = ",".join(f"{k}={v}" for k, v in self.params)
        return f"{self.space} [{ps}]"


@dataclass(frozen=True)
class _Family:
    table: int
    family: str
    space: str
    dim: Callable[..., int]
    Lambda: Callable[..., Fraction]
    Theta: Callable[..., Fraction]
    sts: bool
    params: tuple[str, ...] = ()
    # first admissible parameter tuple, then a predicate for the printed range
    start: tuple[int, ...] = ()
    admissible: Callable[..., bool] = lambda *a: True

    def instantiate(self, values: tuple[int, ...]) -> TableRow:
        return TableRow(
            table=self.table,
            family=self.family,
            space=self.space,
            dim_listed=int(self.dim(*values)),
            Lambda=Fraction(self.Lambda(*values)),
            Theta=Fraction(self.Theta(*values)),
            sts_verdict=self.sts,
            params=tuple(zip(self.params, values)),
        )


F = Fraction


def _const(table, family, space, dim, lam, theta, sts=False):
    return _Family(table, family, space, lambda: dim, lambda: F(lam), lambda: F(theta), sts)


def _fam1(table, family, space, dim, lam, theta, start, sts=False, admissible=None):
    return _Family(table, family, space, dim, lam, theta, sts, ("p",), (start,),
                   admissible or (lambda p: p >= start))


# Columns exactly as printed. Parametric rows keep the printed formulas; the
# range restrictions are the printed ones.
_FAMILIES: tuple[_Family, ...] = (
    # simple Lie groups
    _fam1(1, "A_p", "SU(p+1)", lambda p: p * p - 1,
          lambda p: F(2 * p * (p + 2), (p + 1) ** 2), lambda p: F(2 * p * (p + 2), (p + 1) ** 2), 2),
    _const(1, "B_n", "Spin(5)", 10, F(5, 3), F(4, 3)),
    _const(1, "B_n", "Spin(7)", 21, F(21, 10), F(12, 5)),
    _fam1(1, "B_n", "Spin(2p+1)", lambda p: 2 * p * (p + 1),
          lambda p: F(4 * p, 2 * p - 1), lambda p: F(4 * p, 2 * p - 1), 4),
    _fam1(1, "C_p", "Sp(p)", lambda p: p * (2 * p + 1),
          lambda p: F(2 * p + 1, p + 1), lambda p: F(4 * p - 1, 2 * (p + 1)), 3),
    _fam1(1, "D_p", "Spin(2p)", lambda p: p * (2 * p + 1),
          lambda p: F(2 * p - 1, p - 1), lambda p: F(2 * p - 1, p - 1), 3),
    _const(1, "E_6", "E_6", 156, F(26, 9), F(17, 6)),
    _const(1, "E_7", "E_7", 266, F(19, 6), 3),
    _const(1, "E_8", "E_8", 496, 4, F(47, 15), sts=True),
    _const(1, "F_4", "F_4", 52, F(8, 3), F(8, 3)),
    _const(1, "G_2", "G_2", 14, 2, 2),
    # symmetric spaces of non-group type
    _fam1(2, "A I", "SU(p)/SO(p)", lambda p: (p - 1) * (p + 2) // 2,
          lambda p: F(2 * (p - 1) * (p + 2), p * p), lambda p: F(2), 3, admissible=lambda p: 3 <= p <= 5),
    _fam1(2, "A I", "SU(p)/SO(p)", lambda p: (p - 1) * (p + 2) // 2,
          lambda p: F(2 * (p - 1) * (p + 2), p * p), lambda p: F(2), 6),
    _const(2, "A II", "SU(4)/Sp(2)=S^5", 5, F(5, 4), 3),
    _fam1(2, "A II", "SU(2p)/Sp(p)", lambda p: 2 * p * p - p - 1,
          lambda p: F((2 * p + 1) * (p - 1), p * p), lambda p: F(2), 3),
    _fam1(2, "A III", "U(p+1)/U(p)xU(1)=CP^p", lambda p: 2 * p, lambda p: F(2), lambda p: F(2), 2),
    _Family(2, "A III", "U(p+q)/U(q)xU(p)", lambda p, q: 2 * p * q, lambda p, q: F(2), lambda p, q: F(2),
            False, ("p", "q"), (2, 2), lambda p, q: q >= p >= 2),
    _const(2, "B I", "SO(5)/SO(3)xSO(2)", 6, 2, F(4, 3)),
    _fam1(2, "B I", "SO(2p+3)/SO(2p+1)xSO(2)", lambda p: 4 * p + 2,
          lambda p: F(2), lambda p: F(8, 2 * p + 1), 2),
    _const(2, "B I", "SO(7)/SO(4)xSO(3)", 12, F(12, 5), F(8, 5)),
    # Theta printed as 8/(2q+1) with q unbound; read as q = p
    _fam1(2, "B I", "SO(2p+3)/SO(3)xSO(2p)", lambda p: 6 * p,
          lambda p: F(4 * p + 6, 2 * p + 1), lambda p: F(8, 2 * p + 1), 3),
    # printed with symbols m, n for q, p
    _Family(2, "B I", "SO(2q+2p+1)/SO(2q+1)xSO(2p)", lambda p, q: 2 * p * (2 * q + 1),
            lambda p, q: F(4 * q + 4 * p + 2, 2 * q + 2 * p - 1), lambda p, q: F(8, 2 * p + 2 * q - 1),
            False, ("p", "q"), (2, 2), lambda p, q: p >= 2 and q >= 2),
    _fam1(2, "B II", "SO(2p+1)/SO(2p)=S^(2p)", lambda p: 2 * p,
          lambda p: F(2 * p, 2 * p - 1), lambda p: F(4 * p + 2, 2 * p - 1), 1),
    _fam1(2, "C I", "Sp(p)/U(p)", lambda p: p * (p + 1), lambda p: F(2), lambda p: F(2 * p, p + 1), 3),
    _const(2, "C II", "Sp(2)/Sp(1)xSp(1)=S^4", 4, F(4, 3), F(10, 3)),
    _fam1(2, "C II", "Sp(p+1)/Sp(p)xSp(1)=HP^p", lambda p: 4 * p,
          lambda p: F(2 * (p + 1), p + 2), lambda p: F(2 * (p + 1), p + 2), 2),
    _Family(2, "C II", "Sp(p+q)/Sp(q)xSp(p)", lambda p, q: 4 * p * q,
            lambda p, q: F(2 * (p + q), p + q + 1), lambda p, q: F(2 * (p + q), p + q + 1),
            False, ("p", "q"), (2, 2), lambda p, q: q >= p >= 2),
    _const(2, "D I", "SO(8)/SO(5)xSO(3)", 15, F(5, 2), F(5, 2)),
    _fam1(2, "D I", "SO(2p+2)/SO(2p)xSO(2)", lambda p: 4 * p, lambda p: F(2), lambda p: F(2), 3),
    _fam1(2, "D I", "SO(2p)/SO(p)xSO(p)", lambda p: p * p,
          lambda p: F(2 * p, p - 1), lambda p: F(2 * p, p - 1), 4),
    _fam1(2, "D I", "SO(2p+2)/SO(p+2)xSO(p)", lambda p: p * (p + 2),
          lambda p: F(2 * p + 2, p), lambda p: F(2 * p + 2, p), 4),
    _Family(2, "D I", "SO(2p)/SO(2p-q)xSO(q)", lambda p, q: (2 * p - q) * q,
            lambda p, q: F(2 * p, p - 1), lambda p, q: F(2 * p, p - 1),
            False, ("p", "q"), (5, 3), lambda p, q: p - 2 >= q >= 3),
    _fam1(2, "D II", "SO(2p+2)/SO(2p+1)=S^(2p+1)", lambda p: 2 * p + 1,
          lambda p: F(2 * p + 1, 2 * p), lambda p: F(2 * (p + 1), p), 3),
    _fam1(2, "D III", "SO(2p)/U(p)", lambda p: p * (p - 1), lambda p: F(2), lambda p: F(2), 5),
    _const(2, "E I", "E_6/[Sp(4)/{+-I}]", 42, F(28, 9), 3),
    _const(2, "E II", "E_6/SU(2).SU(6)", 40, 3, 3),
    _const(2, "E III", "E_6/SO(10).SO(2)", 32, 2, 2),
    _const(2, "E IV", "E_6/F_4", 26, F(13, 9), F(13, 9)),
    _const(2, "E V", "E_7/[SU(8)/{+-I}]", 70, F(10, 3), F(28, 9), sts=True),
    _const(2, "E VI", "E_7/SO(12).SU(2)", 64, F(28, 9), F(28, 9)),
    _const(2, "E VII", "E_7/E_6.SO(2)", 54, 2, 2),
    _const(2, "E VIII", "E_8/SO(16)", 128, F(62, 15), F(16, 5), sts=True),
    _const(2, "E IX", "E_8/E_7.SU(2)", 112, F(16, 5), F(16, 5), sts=True),
    _const(2, "F I", "F_4/Sp(3).SU(2)", 28, F(26, 9), F(26, 9)),
    _const(2, "F II", "F_4/Spin(9)", 16, F(4, 3), F(4, 3)),
    _const(2, "G", "G_2/SO(4)", 8, F(7, 3), F(7, 3)),
)


def builtin_table() -> tuple[TableRow, ...]:
    """Every printed row of both tables; parametric rows at their first admissible parameters."""
    return tuple(f.instantiate(f.start) for f in _FAMILIES)


def expand_table(span: int = 8) -> tuple[TableRow, ...]:
    """Parametric rows instantiated over ``span`` consecutive values of each parameter.

    Constant rows appear once. Parameter tuples outside the printed range are skipped.
    """
    rows: list[TableRow] = []
    for fam in _FAMILIES:
        if not fam.params:
            rows.append(fam.instantiate(()))
            continue
        grids = [range(s, s + span) for s in fam.start]
        if len(grids) == 1:
            combos = [(p,) for p in grids[0]]
        else:
            combos = [(a, b) for a in grids[0] for b in grids[1]]
        rows.extend(fam.instantiate(c) for c in combos if fam.admissible(*c))
    return tuple(rows)


def find_row(query: str) -> TableRow:
    """Look up a row by family (``"E V"``) or space name (``"E_8"``)."""
    q = query.strip()
    for row in builtin_table():
        if q in (row.space, row.family):
            return row
    raise KeyError(query)


def table_csv(rows: Sequence[TableRow] | None = None) -> str:
    rows = builtin_table() if rows is None else rows
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "space", "dim", "Lambda", "Theta", "sts"])
    for r in rows:
        w.writerow([r.family, r.label, r.dim_listed, format_rational(r.Lambda),
                    format_rational(r.Theta), "yes" if r.sts_verdict else "no"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# round spheres


def _sphere_scalar(n: int, k: int) -> Fraction:
    return Fraction(k * (k + n - 1))


def _sphere_tt(n: int, k: int) -> Fraction:
    # Einstein operator on TT tensors of the unit sphere, k >= 2
    return Fraction(k * (k + n - 1))


def _sphere_oneform(n: int, k: int) -> Fraction:
    # connection Laplacian on coclosed 1-forms, k >= 1
    return Fraction((k + 1) * (k + n - 2) - (n - 1))


def make_round_sphere(n: int, bands: int = 4) -> CrossSection:
    """Unit round ``S^n`` with the lowest ``bands`` eigenvalue bands of each operator.

    ``S^2`` carries no TT tensors, so its TT spectrum is empty.
    """
    if n < 2:
        raise ValueError(f"round sphere needs n >= 2, got {n}")
    if bands < 3:
        raise ValueError("need at least three bands to certify the tangential criteria")
    scalar = tuple(_sphere_scalar(n, k) for k in range(bands))
    tt = () if n == 2 else tuple(_sphere_tt(n, k) for k in range(2, bands + 2))
    one = tuple(_sphere_oneform(n, k) for k in range(1, bands + 1))
    nxt = [_sphere_scalar(n, bands), _sphere_oneform(n, bands + 1)]
    if n > 2:
        nxt.append(_sphere_tt(n, bands + 2))
    return CrossSection(f"S^{n}", n, scalar, tt, one, min(nxt))


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def _ascending(seq: Sequence[Fraction]) -> bool:
    return all(a <= b for a, b in zip(seq, seq[1:]))


def validate(cs: CrossSection) -> ValidationReport:
    """Hard errors for malformed data; warnings for Obata-type violations."""
    rep = ValidationReport()
    if cs.n < 2:
        rep.errors.append(f"n must be >= 2, got {cs.n}")
    spectra = (
        ("scalar_spectrum", cs.scalar_spectrum, True),
        ("tt_einstein_spectrum", cs.tt_einstein_spectrum, False),
        ("oneform_spectrum", cs.coclosed_oneform_spectrum, True),
    )
    for name, seq, nonneg in spectra:
        if not _ascending(seq):
            rep.errors.append(f"{name} not ascending")
        if nonneg and any(v < 0 for v in seq):
            rep.errors.append(f"{name} has negative entries")
    if not cs.scalar_spectrum or cs.scalar_spectrum[0] != 0:
        rep.errors.append("scalar_spectrum must start with 0")
    low = [v for v in cs.scalar_spectrum if 0 < v < cs.n]
    if low:
        rep.warnings.append(
            f"Obata bound violated: nonzero scalar eigenvalue {format_rational(low[0])} < n = {cs.n}"
        )
    return rep


# ---------------------------------------------------------------------------
# cross-section files

_CS_KEYS = ("name", "n", "scalar_spectrum", "tt_einstein_spectrum", "oneform_spectrum", "complete_below")


def load_cross_section(text: str, source: str | None = None) -> CrossSection:
    kv = parse_kv(text, source)
    for key, (_, line) in kv.items():
        if key not in _CS_KEYS:
            raise ConfigError(f"unknown key {key!r}", line, source)
    missing = [k for k in ("n", "scalar_spectrum", "complete_below") if k not in kv]
    if missing:
        raise ConfigError(f"missing keys: {', '.join(missing)}", None, source)

    def lst(key):
        if key not in kv:
            return ()
        v, line = kv[key]
        return parse_rational_list(v, line, source)

    n_raw, n_line = kv["n"]
    try:
        n = int(n_raw)
    except ValueError:
        raise ConfigError(f"n must be an integer, got {n_raw!r}", n_line, source) from None
    cb, cb_line = kv["complete_below"]
    return CrossSection(
        name=kv.get("name", ("unnamed", 0))[0],
        n=n,
        scalar_spectrum=lst("scalar_spectrum"),
        tt_einstein_spectrum=lst("tt_einstein_spectrum"),
        coclosed_oneform_spectrum=lst("oneform_spectrum"),
        complete_below=parse_rational(cb, cb_line, source),
    )


def read_cross_section(path: str | Path) -> CrossSection:
    path = Path(path)
    return load_cross_section(path.read_text(encoding="utf-8"), str(path))


def dump_cross_section(cs: CrossSection) -> str:
    def join(seq):
        return ", ".join(format_rational(v) for v in seq)

    return (
        f"name = {cs.name}\n"
        f"n = {cs.n}\n"
        f"scalar_spectrum = {join(cs.scalar_spectrum)}\n"
        f"tt_einstein_spectrum = {join(cs.tt_einstein_spectrum)}\n"
        f"oneform_spectrum = {join(cs.coclosed_oneform_spectrum)}\n"
        f"complete_below = {format_rational(cs.complete_below)}\n"
    )
