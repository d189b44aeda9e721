"""Command-line entry point.

Exit codes: 0 success, 1 config error, 2 numerical failure, 3 insufficient
spectral data.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .config import cross_section_for, parse_config
from .diagnostics import contracted_identity, monitor_row
from .flow import FlowConfig, read_checkpoint_meta, run_flow
from .kvtext import ConfigError, format_float, format_rational, parse_rational
from .report import (TIMESERIES, RunReport, emit_plot_script, emit_report, merge_timeseries,
                     read_timeseries, series_verdicts, structured, table_report_csv,
                     write_timeseries)
from .spectra import builtin_table, expand_table, read_cross_section, table_csv, validate
from .stability import (VARIANTS, InsufficientSpectralData, admissible_weights, analyze,
                        indicial_data, mu_exponents)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_SPECTRAL = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(f"riccicone: {msg}", file=sys.stderr)


def _stability_block(cs, gamma: float) -> tuple[dict | None, dict | None]:
    if cs is None:
        return None, None
    try:
        verdict = analyze(cs).as_dict()
    except InsufficientSpectralData as e:
        verdict = {"insufficient": str(e)}
    try:
        idata = indicial_data(cs)
        win = admissible_weights(cs.n, idata.mu0, idata.mu1, gamma)
        weights = dict(win.as_dict(), indicial=idata.as_dict(),
                       sample_exact=None if win.sample is None else list(win.sample))
    except (InsufficientSpectralData, ValueError) as e:
        weights = {"unavailable": str(e)}
    return verdict, weights


def execute_flow(cfg: FlowConfig, cs, out_dir: str | Path, *, resume: str | Path | None = None,
                 t_end: float | None = None, backend: str | None = None) -> tuple[RunReport, int]:
    """Run (or resume) a flow, write the series, report and plot script into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = run_flow(cfg, cs, out_dir=out, resume=resume, t_end=t_end,
                    monitor=lambda tr, s: monitor_row(tr, s, cs), backend=backend)
    rows = traj.series
    if resume is not None:
        meta = read_checkpoint_meta(resume)
        old = read_timeseries(out / TIMESERIES) if (out / TIMESERIES).exists() else []
        rows = merge_timeseries(old, rows, int(meta["step"]), cfg.store_every)
    write_timeseries(out / TIMESERIES, rows)
    emit_plot_script(out)

    stab, weights = _stability_block(cs, cfg.gamma_prime)
    final = traj.states[-1]
    diag = series_verdicts(rows)
    if cs is not None:
        diag["contracted_identity_final"] = contracted_identity(final.g, cs)
    outcome = {"status": traj.status, "t": final.t, "step": final.step_index, "dt": traj.dt,
               "t_end": cfg.t_end if t_end is None else t_end, "failure": traj.failure,
               "resumed_from": None if resume is None else Path(resume).name}
    rep = RunReport("flow", cfg.to_dict(), cfg.digest(), stab, weights, outcome, diag)
    names = {p.name for p in out.iterdir() if p.is_file()} | {"report.txt", "report.json"}
    rep.files = sorted(names)
    emit_report(rep, out)
    return rep, EXIT_OK if traj.status == "completed" else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# subcommands


def cmd_flow_run(args) -> int:
    cfg, cs = parse_config(args.config)
    out = args.out or cfg.out_dir or "run"
    rep, code = execute_flow(cfg, cs, out, backend=args.backend)
    print(f"{rep.outcome['status']} at t = {format_float(rep.outcome['t'])}; "
          f"{rep.diagnostics.get('R_min', {}).get('text', '')}; output in {out}")
    if code:
        _err(f"numerical failure: {rep.outcome['failure']}")
    return code


def cmd_flow_resume(args) -> int:
    ckpt = Path(args.checkpoint)
    try:
        meta = read_checkpoint_meta(ckpt)
        cfg = FlowConfig.from_dict(meta["config"])
    except (OSError, KeyError, ValueError) as e:
        raise ConfigError(f"unreadable checkpoint metadata: {e}", None, str(ckpt)) from None
    if meta.get("config_hash") != cfg.digest():
        raise ConfigError("checkpoint config hash does not match its config", None, str(ckpt))
    cs = cross_section_for(cfg)
    t_end = args.t_end if args.t_end is not None else None
    if t_end is not None and t_end < float(meta["t"]):
        raise ConfigError(f"--t-end {t_end} is before the checkpoint time {meta['t']}")
    out = args.out or ckpt.parent
    rep, code = execute_flow(cfg, cs, out, resume=ckpt, t_end=t_end, backend=args.backend)
    print(f"{rep.outcome['status']} at t = {format_float(rep.outcome['t'])}; output in {out}")
    if code:
        _err(f"numerical failure: {rep.outcome['failure']}")
    return code


def cmd_stability_check(args) -> int:
    try:
        cs = read_cross_section(args.file)
    except OSError as e:
        raise ConfigError(f"cannot read cross-section: {e.strerror}", None, args.file) from None
    rep = validate(cs)
    if not rep.ok:
        raise ConfigError("; ".join(rep.errors), None, args.file)
    verdict = analyze(cs, args.variant)
    if args.json:
        r = RunReport("stability", {"file": str(args.file), "variant": args.variant}, None,
                      verdict.as_dict())
        sys.stdout.write(structured(r))
        return EXIT_OK
    yn = {True: "yes", False: "no", None: "n/a"}
    print(f"cross-section: {cs.name} (n = {cs.n})")
    print(f"tangentially stable: {yn[verdict.tangential]}")
    print(f"strictly tangentially stable: {yn[verdict.strict]}")
    print(f"strongly tangentially stable: {yn[verdict.strong]}")
    for name, c in sorted(verdict.conditions.items()):
        extra = f" [{c.witness}]" if c.witness else ""
        print(f"  {name}: {'pass' if c.passed else 'fail'} ({c.threshold}){extra}")
    for note in verdict.notes:
        print(f"  note: {note}")
    return EXIT_OK


def cmd_stability_table(args) -> int:
    rows = expand_table(args.expand) if args.expand else builtin_table()
    body = table_csv(rows) if args.printed else table_report_csv(rows)
    if args.csv:
        Path(args.csv).write_text(body)
    else:
        sys.stdout.write(body)
    if not args.printed:
        from .stability import classify_table_row
        bad = [r.label for r in rows if classify_table_row(r).strong != r.sts_verdict]
        if bad:
            _err(f"computed verdict differs from the tabulated one for: {', '.join(bad)}")
    return EXIT_OK


def cmd_weights(args) -> int:
    try:
        u0, u1 = parse_rational(args.u0), parse_rational(args.u1)
        gamma = float(Fraction(args.gamma))
        floor = float(Fraction(args.floor))
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"bad numeric argument: {e}") from None
    if args.n < 2:
        raise ConfigError("--n must be >= 2")
    mu0, mu1 = mu_exponents(args.n, u0, u1, args.variant)
    win = admissible_weights(args.n, mu0, mu1, gamma, floor)
    if args.json:
        d = dict(win.as_dict(), sample_exact=None if win.sample is None else
                 [format_rational(v) for v in win.sample])
        sys.stdout.write(json.dumps(d, sort_keys=True, indent=1) + "\n")
        return EXIT_OK
    print(f"mu0 = {format_float(mu0)}")
    print(f"mu1 = {format_float(mu1)}")
    print(f"gamma0 in ({format_float(win.gamma0_interval[0])}, {format_float(win.gamma0_interval[1])})")
    print(f"gamma1 in ({format_float(win.gamma1_interval[0])}, {format_float(win.gamma1_interval[1])})")
    print(f"feasible: {'yes' if win.feasible else 'no'}")
    if win.sample is not None:
        g0, g1, a = win.sample
        print(f"sample: gamma0 = {format_rational(g0)}, gamma1 = {format_rational(g1)}, alpha = {format_rational(a)}")
    return EXIT_OK


def cmd_oracle_selftest(args) -> int:
    from .verify import selftest

    res = selftest(args.n, args.profiles, args.seed)
    ok = True
    for r in res:
        passed = r.passed(args.min_order)
        ok &= passed
        orders = ", ".join(f"{o:.3f}" for o in r.orders)
        print(f"{'PASS' if passed else 'FAIL'} {r.operation}: max error {r.errors[-1]:.3e}, orders {orders}")
    print(f"oracle selftest: {'passed' if ok else 'FAILED'} ({len(res)} comparisons)")
    return EXIT_OK if ok else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="riccicone", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"riccicone {__version__}")
    sub = p.add_subparsers(dest="group", required=True)

    flow = sub.add_parser("flow", help="run or resume a warped-product flow").add_subparsers(dest="cmd", required=True)
    r = flow.add_parser("run", help="run a flow from a config file")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output.dir)")
    r.add_argument("--backend", choices=("cython", "python"))
    r.set_defaults(func=cmd_flow_run)
    r = flow.add_parser("resume", help="continue a flow from a checkpoint")
    r.add_argument("checkpoint")
    r.add_argument("--t-end", type=float)
    r.add_argument("--out")
    r.add_argument("--backend", choices=("cython", "python"))
    r.set_defaults(func=cmd_flow_resume)

    st = sub.add_parser("stability", help="spectral stability").add_subparsers(dest="cmd", required=True)
    r = st.add_parser("check", help="classify a cross-section file")
    r.add_argument("file")
    r.add_argument("--variant", choices=VARIANTS, default="squared")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_stability_check)
    r = st.add_parser("table", help="symmetric-space table with computed verdicts")
    r.add_argument("--csv", help="write to this file instead of stdout")
    r.add_argument("--printed", action="store_true", help="tabulated verdicts only")
    r.add_argument("--expand", type=int, default=0, metavar="SPAN",
                   help="instantiate each family for SPAN parameter values")
    r.set_defaults(func=cmd_stability_table)

    r = sub.add_parser("weights", help="admissible Hoelder weights")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--u0", required=True)
    r.add_argument("--u1", required=True)
    r.add_argument("--gamma", required=True)
    r.add_argument("--floor", default="0")
    r.add_argument("--variant", choices=VARIANTS, default="squared")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_weights)

    orc = sub.add_parser("oracle", help="finite-difference tensor oracle").add_subparsers(dest="cmd", required=True)
    r = orc.add_parser("selftest", help="compare closed forms with the oracle")
    r.add_argument("--n", type=int, default=3)
    r.add_argument("--profiles", type=int, default=3)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--min-order", type=float, default=1.8)
    r.set_defaults(func=cmd_oracle_selftest)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as e:
        _err(f"config error: {e}")
        return EXIT_CONFIG
    except InsufficientSpectralData as e:
        _err(str(e))
        return EXIT_SPECTRAL
    except ValueError as e:
        _err(f"invalid input: {e}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
