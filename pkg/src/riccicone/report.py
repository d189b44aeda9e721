"""Run reports, time-series CSVs and plot scripts.

Structured reports are JSON with sorted keys and no timestamps, so a fixed
config gives identical bytes. Floats are written with 17 significant digits.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .diagnostics import tol_pos
from .kvtext import format_float, format_rational

TIMESERIES = "timeseries.csv"
COLUMNS = ("step", "t", "R_min", "R_max", "sup_w_ric", "gamma_hat", "wmax", "dt")
PLOTTED = ("R_min", "gamma_hat", "sup_w_ric")


@dataclass
class RunReport:
    kind: str
    config: dict = field(default_factory=dict)
    config_hash: str | None = None
    stability: dict | None = None
    weights: dict | None = None
    outcome: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"kind": self.kind, "config": self.config, "config_hash": self.config_hash,
                "stability": self.stability, "weights": self.weights, "outcome": self.outcome,
                "diagnostics": self.diagnostics, "files": sorted(self.files)}


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, Fraction):
        return format_rational(v)
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return _plain(v.item())
    return v


def structured(report: RunReport) -> str:
    return json.dumps(_plain(report.as_dict()), sort_keys=True, indent=1) + "\n"


def _text_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return {True: "yes", False: "no", None: "n/a"}[v]
    if isinstance(v, float):
        return format_float(v)
    if isinstance(v, Fraction):
        return format_rational(v)
    return str(v)


def _text_lines(d: dict, prefix: str = "") -> list[str]:
    out = []
    for k in sorted(d):
        v = d[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.extend(_text_lines(v, key + "."))
        elif isinstance(v, (list, tuple)):
            out.append(f"{key}: " + ", ".join(_text_value(x) for x in v))
        else:
            out.append(f"{key}: {_text_value(v)}")
    return out


def text(report: RunReport) -> str:
    lines = [f"riccicone {report.kind} report"]
    diag = report.diagnostics
    if "R_min" in diag:
        lines.append(f"R_min verdict: {diag['R_min']['text']}")
    if "ricci_bound" in diag:
        lines.append(f"weighted Ricci verdict: {diag['ricci_bound']['text']}")
    if report.outcome:
        lines.append(f"outcome: {report.outcome.get('status', 'n/a')}")
    body = report.as_dict()
    body.pop("kind")
    lines.extend(_text_lines({k: v for k, v in body.items() if v not in (None, {}, [])}))
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, out_dir: str | Path, formats=("text", "structured")) -> list[Path]:
    """Write ``report.txt`` and/or ``report.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for fmt in formats:
        if fmt == "text":
            p = out / "report.txt"
            p.write_text(text(report))
        elif fmt == "structured":
            p = out / "report.json"
            p.write_text(structured(report))
        else:
            raise ValueError(f"unknown report format {fmt!r}")
        paths.append(p)
    return paths


# ---------------------------------------------------------------------------
# time series


def _cell(v) -> str:
    if isinstance(v, (int,)) and not isinstance(v, bool):
        return str(v)
    return format_float(float(v))


def write_timeseries(path: str | Path, rows: list[dict]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in rows:
            w.writerow([_cell(r[c]) for c in COLUMNS])
    return path


def read_timeseries(path: str | Path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no time series at {path}")
    with path.open(newline="") as fh:
        rd = csv.DictReader(fh)
        rows = []
        for r in rd:
            rows.append({k: (int(v) if k == "step" else float(v)) for k, v in r.items()})
    return rows


def merge_timeseries(old: list[dict], new: list[dict], resume_step: int, store_every: int) -> list[dict]:
    """Series of a resumed run as if it had never stopped.

    Rows after the checkpoint are dropped from ``old``. The checkpoint row
    itself belongs to the merged series only if a single run would have stored it.
    """
    keep = [r for r in old if r["step"] < resume_step]
    fresh = list(new)
    if fresh and fresh[0]["step"] == resume_step and resume_step % store_every != 0:
        fresh = fresh[1:]
    return keep + fresh


def series_verdicts(rows: list[dict], floor: float = 1e-9) -> dict:
    """Positivity and weighted-Ricci verdicts over a whole time series."""
    if not rows:
        return {}
    rmin = [r["R_min"] for r in rows]
    tol = tol_pos(max(rows[0]["R_max"], 0.0))
    applicable = rmin[0] >= -tol
    preserved = all(v >= -tol for v in rmin) if applicable else None
    ric = [r["sup_w_ric"] for r in rows]
    bound = 2 * ric[0] + floor
    bounded = all(v <= bound for v in ric)
    return {
        "R_min": {"R_min0": rmin[0], "min": min(rmin), "tol_pos": tol, "applicable": applicable,
                  "preserved": preserved,
                  "text": ("positivity preserved" if preserved else
                           "positivity violated" if applicable else "not applicable: R_min(0) < 0")},
        "ricci_bound": {"initial": ric[0], "max": max(ric), "bound": bound, "bounded": bounded,
                        "text": "bounded" if bounded else "unbounded growth"},
        "stored_states": len(rows),
        "t_final": rows[-1]["t"],
        "gamma_hat_final": rows[-1]["gamma_hat"],
    }


# ---------------------------------------------------------------------------
# plot script

_PLOT = '''"""Plot the flow time series in this directory. Generated by riccicone."""
import csv
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
CSV = HERE / {csv!r}
COLUMNS = {columns!r}
PLOTTED = {plotted!r}

with CSV.open(newline="") as fh:
    rows = list(csv.DictReader(fh))
t = [float(r["t"]) for r in rows]
fig, axes = plt.subplots(len(PLOTTED), 1, sharex=True, figsize=(6, 2.5 * len(PLOTTED)))
if len(PLOTTED) == 1:
    axes = [axes]
for ax, col in zip(axes, PLOTTED):
    ax.plot(t, [float(r[col]) for r in rows], marker=".")
    ax.set_ylabel(col)
axes[-1].set_xlabel("t")
fig.tight_layout()
fig.savefig(HERE / "timeseries.png", dpi=120)
'''


def emit_plot_script(run_dir: str | Path) -> Path:
    """Write ``plot_timeseries.py`` for the CSV in ``run_dir``."""
    run_dir = Path(run_dir)
    path = run_dir / TIMESERIES
    if not path.exists():
        raise FileNotFoundError(f"no time series at {path}")
    with path.open(newline="") as fh:
        header = next(csv.reader(fh), None)
    if not header:
        raise ValueError(f"{path} has no header")
    plotted = tuple(c for c in PLOTTED if c in header)
    out = run_dir / "plot_timeseries.py"
    out.write_text(_PLOT.format(csv=TIMESERIES, columns=tuple(header), plotted=plotted))
    return out


def table_report_csv(rows) -> str:
    """Builtin table with the computed verdict beside the printed one."""
    from .stability import classify_table_row

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["family", "space", "dim", "Lambda", "Theta", "tt_gt_n", "oneform_gt_2n+1",
                "scalar_cubic_positive", "sts_computed", "sts"])
    for r in rows:
        v = classify_table_row(r)
        c = v.conditions
        yn = lambda b: "yes" if b else "no"  # noqa: E731
        w.writerow([r.family, r.label, r.dim_listed, format_rational(r.Lambda), format_rational(r.Theta),
                    yn(c["tt_gt_n"].passed), yn(c["oneform_gt_2n+1"].passed),
                    yn(c["scalar_cubic_positive"].passed), yn(v.strong), yn(r.sts_verdict)])
    return buf.getvalue()
