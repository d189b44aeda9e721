"""Line-oriented ``key = value`` text format shared by config and cross-section files."""
from __future__ import annotations

from fractions import Fraction


class ConfigError(ValueError):
    """Malformed or invalid key-value input. Carries the offending line when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where = f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}".strip() if where else message)


def parse_kv(text: str, source: str | None = None) -> dict[str, tuple[str, int]]:
    """Parse ``key = value`` lines. Returns ``{key: (raw_value, line_number)}``.

    Blank lines and ``#`` comments are ignored; duplicate keys are errors.
    """
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno, source)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno, source)
        if key in out:
            raise ConfigError(f"duplicate key {key!r}", lineno, source)
        out[key] = (value, lineno)
    return out


def parse_rational(value: str, line: int | None = None, source: str | None = None) -> Fraction:
    try:
        return Fraction(value.strip())
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"not a rational number: {value!r}", line, source) from None


def parse_rational_list(value: str, line: int | None = None, source: str | None = None) -> tuple[Fraction, ...]:
    value = value.strip().strip("[]()")
    if not value:
        return ()
    return tuple(parse_rational(v, line, source) for v in value.split(",") if v.strip())


def format_rational(r: Fraction) -> str:
    r = Fraction(r)
    return str(r.numerator) if r.denominator == 1 else f"{r.numerator}/{r.denominator}"


def format_float(x: float) -> str:
    """17 significant digits: round-trips every double."""
    return format(float(x), ".17g")
