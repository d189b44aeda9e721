"""Flow run configuration files.

Flat ``key = value`` text with dotted keys. Unknown keys are fatal. Numeric
values accept decimals and exact rationals such as ``16/5``.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .flow import FlowConfig
from .kvtext import ConfigError, parse_kv
from .spectra import CrossSection, make_round_sphere, read_cross_section, validate

# key -> (FlowConfig field, kind)
KEYS: dict[str, tuple[str, str]] = {
    "cross_section": ("cross_section", "str"),
    "n": ("n", "int"),
    "grid.x_min": ("x_min", "real"),
    "grid.x_max": ("x_max", "real"),
    "grid.N": ("N", "int"),
    "grid.p": ("p", "real"),
    "initial.profile": ("profile", "str"),
    "initial.amplitude": ("amplitude", "real"),
    "initial.exponent": ("exponent", "real"),
    "initial.file": ("profile_file", "path"),
    "background": ("background", "str"),
    "boundary": ("boundary", "str"),
    "time.t_end": ("t_end", "real"),
    "time.cfl": ("cfl", "real"),
    "time.dt": ("dt", "real"),
    "output.dir": ("out_dir", "path"),
    "output.store_every": ("store_every", "int"),
    "output.checkpoint_every": ("checkpoint_every", "int"),
    "stencil.order": ("stencil_order", "int"),
    "diagnostics.gamma_prime": ("gamma_prime", "real"),
}


def _value(raw: str, kind: str, key: str, line: int, source: str | None, base: Path):
    if kind == "str":
        return raw
    if kind == "path":
        p = Path(raw)
        return str(p if p.is_absolute() else base / p)
    try:
        if kind == "int":
            return int(raw)
        return float(Fraction(raw))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: expected {'an integer' if kind == 'int' else 'a number'}, got {raw!r}",
                          line, source) from None


def load_config(text: str, source: str | None = None, base: Path | None = None
                ) -> tuple[FlowConfig, CrossSection | None]:
    base = base or Path(".")
    kv = parse_kv(text, source)
    fields = {}
    for key, (raw, line) in kv.items():
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}", line, source)
        name, kind = KEYS[key]
        fields[name] = _value(raw, kind, key, line, source, base)

    cs = None
    ref = fields.get("cross_section", "sphere")
    if ref == "sphere":
        if "n" not in fields:
            raise ConfigError("missing key 'n' (required with cross_section = sphere)", None, source)
        cs = make_round_sphere(fields["n"])
    elif ref != "none":
        path = Path(ref)
        path = path if path.is_absolute() else base / path
        line = kv["cross_section"][1]
        try:
            cs = read_cross_section(path)
        except OSError as e:
            raise ConfigError(f"cannot read cross-section file {str(path)!r}: {e.strerror}", line, source) from None
        rep = validate(cs)
        if not rep.ok:
            raise ConfigError(f"invalid cross-section {str(path)!r}: {'; '.join(rep.errors)}", line, source)
        if "n" in fields and fields["n"] != cs.n:
            raise ConfigError(f"n = {fields['n']} disagrees with cross-section n = {cs.n}", kv["n"][1], source)
        fields["n"] = cs.n
        fields["cross_section"] = str(path)
    if "n" not in fields:
        raise ConfigError("missing key 'n'", None, source)
    try:
        cfg = FlowConfig(**fields)
    except ValueError as e:
        # point at the first offending key when we can
        msg = str(e)
        first = msg.split("; ")[0]
        line = None
        for key in KEYS:
            if key in kv and first.startswith(key + " "):
                line = kv[key][1]
                break
        raise ConfigError(msg, line, source) from None
    return cfg, cs


def parse_config(path: str | Path) -> tuple[FlowConfig, CrossSection | None]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", None, str(path)) from None
    return load_config(text, str(path), path.parent)


def dump_config(cfg: FlowConfig) -> str:
    """Inverse of :func:`load_config` for the flow fields (``cross_section`` kept verbatim)."""
    d = cfg.to_dict()
    lines = []
    for key, (name, kind) in KEYS.items():
        v = d[name]
        if v is None:
            continue
        if kind == "real":
            v = format(float(v), ".17g")
        lines.append(f"{key} = {v}")
    return "\n".join(lines) + "\n"


def cross_section_for(cfg: FlowConfig) -> CrossSection | None:
    """Re-resolve the cross-section recorded in a config (used on resume)."""
    if cfg.cross_section == "sphere":
        return make_round_sphere(cfg.n)
    if cfg.cross_section == "none":
        return None
    try:
        return read_cross_section(cfg.cross_section)
    except OSError as e:
        raise ConfigError(f"cannot read cross-section file {cfg.cross_section!r}: {e.strerror}") from None
