"""Command-line entry points.

Subcommands:

  run <config> [--out DIR] [--strict]
  validate <config>
  sweep <config> --vary section.key=v1,v2,... [--out DIR] [--strict]
  bound --T --m --gamma --L --C --F-total
  check-lemmas [--seed N] [--trials N] [--report PATH]

Exit codes: 0 success, 1 usage or configuration error, 2 numerical abort
(including a vacuous bound), 3 failed inequality check (strict-mode run
checks and failed lemma trials).  The PFSI_OUTPUT_DIR environment variable
prepends a root to every relative output directory.
"""

import argparse
import logging
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

from pfsi import io
from pfsi.config import ConfigError, apply_override, format_config, parse_config
from pfsi.core import PhysParams
from pfsi.diagnostics import (
    contact_tolerance,
    detachment_bound,
    detect_detachment,
    detect_point_detachment,
)
from pfsi.driver import run_simulation
from pfsi.lemmas import run_lemma_suite

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_CHECK = 3

#: relative mass drift allowed by the strict run check
STRICT_MASS_TOL = 1e-8
#: energy-residual allowance as a fraction of the initial scheme energy
STRICT_ENERGY_FRACTION = 1e-2


def _now_iso():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


# ---------------------------------------------------------------------------
# strict-mode checks
# ---------------------------------------------------------------------------

def strict_checks(trajectory):
    """Evaluate the three run-level inequality checks on the recorded rows.

    Returns (name, measured, allowed) triples; a check passes when measured
    is at most allowed.  Mass drift is relative to the initial mass, the
    energy residual is checked at every recorded time against a fraction of
    the initial scheme energy, and the contact residual at the final time
    against the first-order consistency tolerance.
    """
    cfg = trajectory.config
    records = trajectory.records
    first, last = records[0], records[-1]
    eps = cfg.scheme.eps

    def scheme_energy(rec):
        return rec.fluid_kinetic + rec.internal + (1.0 - eps) * rec.beam_kinetic + rec.bending

    drift = max(abs(rec.mass - first.mass) for rec in records) / first.mass
    e0 = scheme_energy(first)
    worst_energy = max(
        (scheme_energy(rec) + rec.dissipation_cum) - (e0 + rec.work_cum)
        for rec in records
    )
    return [
        ("mass_drift", drift, STRICT_MASS_TOL),
        ("energy_residual", worst_energy, STRICT_ENERGY_FRACTION * e0 + 1e-12),
        (
            "contact_residual",
            last.contact_residual,
            contact_tolerance(cfg.grid, cfg.scheme, last.t),
        ),
    ]


def _report_strict(trajectory):
    failed = []
    for name, measured, allowed in strict_checks(trajectory):
        ok = measured <= allowed
        print(f"strict {name}: {'pass' if ok else 'FAIL'} ({measured:.6g} vs {allowed:.6g})")
        if not ok:
            failed.append(name)
    return failed


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _load_config(path):
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _execute_run(config, out_dir, strict):
    """Run one configuration and persist everything; returns the exit code."""
    started = _now_iso()
    t0 = time.monotonic()
    trajectory = run_simulation(config)
    out_dir = Path(out_dir)
    io.write_run_outputs(trajectory, out_dir)

    if trajectory.aborted:
        status, code = f"aborted: {trajectory.aborted}", EXIT_NUMERICAL
    elif strict:
        failed = _report_strict(trajectory)
        if failed:
            status, code = f"strict checks failed: {', '.join(failed)}", EXIT_CHECK
        else:
            status, code = "ok", EXIT_OK
    else:
        status, code = "ok", EXIT_OK
    if trajectory.stopped_reason and code == EXIT_OK:
        status = f"ok ({trajectory.stopped_reason})"

    io.write_manifest(
        out_dir,
        format_config(config),
        status,
        code,
        started,
        _now_iso(),
        time.monotonic() - t0,
    )
    print(
        f"{config.scenario_id}: t = {trajectory.final_time:.6g}, "
        f"min eta = {trajectory.records[-1].min_eta:.6g} -> {out_dir} [{status}]"
    )
    return code, trajectory


def _cmd_run(args):
    config = _load_config(args.config)
    out_dir = io.resolve_output_dir(args.out or config.output_dir)
    code, _ = _execute_run(config, out_dir, args.strict)
    return code


def _cmd_validate(args):
    config = _load_config(args.config)
    print(format_config(config), end="")
    return EXIT_OK


def _cmd_bound(args):
    try:
        value = detachment_bound(
            args.T, args.m, args.gamma, args.L, args.C, args.f_total
        )
    except ValueError as exc:
        print(f"bound: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(f"{value:.6g}")
    return EXIT_OK


def _cmd_check_lemmas(args):
    phys = PhysParams(mu=2e-3, lam=0.0, gamma=3.0)
    trials = run_lemma_suite(phys, seed=args.seed, trials=args.trials)
    by_id = {}
    for trial in trials:
        by_id.setdefault(trial.lemma_id, []).append(trial)
    n_failed = 0
    for lemma_id in sorted(by_id):
        group = by_id[lemma_id]
        passed = sum(1 for t in group if t.passed)
        worst = min(t.margin for t in group)
        print(f"{lemma_id:18s} {passed:4d}/{len(group):<4d} worst margin {worst:.3e}")
        n_failed += len(group) - passed
    if args.report:
        io.emit_lemma_report(trials, args.report)
        print(f"report -> {args.report}")
    if n_failed:
        print(f"check-lemmas: {n_failed} trial(s) FAILED", file=sys.stderr)
        return EXIT_CHECK
    print(f"check-lemmas: all {len(trials)} trials pass")
    return EXIT_OK


def _parse_vary(spec):
    dotted, sep, values_text = spec.partition("=")
    if not sep or not values_text:
        raise ConfigError(f"--vary must look like section.key=v1,v2,..., got {spec!r}")
    values = [v.strip() for v in values_text.split(",") if v.strip()]
    if len(values) < 1:
        raise ConfigError(f"--vary {spec!r} lists no values")
    if len(set(values)) != len(values):
        raise ConfigError(f"--vary {spec!r} repeats a value")
    return dotted.strip(), values


def _cmd_sweep(args):
    base = _load_config(args.config)
    dotted, values = _parse_vary(args.vary)
    leaf = dotted.partition(".")[2]
    out_root = io.resolve_output_dir(args.out or base.output_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    started = _now_iso()
    t0 = time.monotonic()

    rows = []
    codes = []
    for value_text in values:
        config = apply_override(base, dotted, value_text)
        sub_dir = out_root / f"{leaf}={value_text}"
        code, trajectory = _execute_run(config, sub_dir, args.strict)
        codes.append(code)
        info_params = trajectory.scenario_info["params"]
        x0 = info_params.get("x0", config.grid.length_L / 2.0)
        last = trajectory.records[-1]
        rows.append(
            {
                "key": dotted,
                "value": value_text,
                "directory": sub_dir.name,
                "status": "ok" if code == EXIT_OK else f"exit-{code}",
                "final_time": trajectory.final_time,
                "min_eta_final": last.min_eta,
                "detach_time_min": detect_detachment(trajectory),
                "detach_time_point": detect_point_detachment(trajectory, x0),
            }
        )

    io.emit_sweep_summary(rows, out_root / "sweep_summary.csv")
    worst = (
        EXIT_NUMERICAL
        if EXIT_NUMERICAL in codes
        else (EXIT_CHECK if EXIT_CHECK in codes else EXIT_OK)
    )
    io.write_manifest(
        out_root,
        format_config(base),
        f"sweep {dotted} over {len(values)} value(s), worst exit {worst}",
        worst,
        started,
        _now_iso(),
        time.monotonic() - t0,
        include_subdirs=False,
    )
    print(f"sweep: {len(values)} run(s) -> {out_root}")
    return worst


# ---------------------------------------------------------------------------
# parser and dispatch
# ---------------------------------------------------------------------------

def _build_parser():
    parser = argparse.ArgumentParser(
        prog="pfsi",
        description="Penalized fluid/beam splitting scheme: runs, sweeps, checks.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configured scenario")
    p_run.add_argument("config", help="path to a config file")
    p_run.add_argument("--out", help="output directory (default: config [output] directory)")
    p_run.add_argument("--strict", action="store_true",
                       help="fail (exit 3) when a run-level inequality check fails")
    p_run.set_defaults(handler=_cmd_run)

    p_val = sub.add_parser("validate", help="parse a config and print it resolved")
    p_val.add_argument("config")
    p_val.set_defaults(handler=_cmd_validate)

    p_sweep = sub.add_parser("sweep", help="run one config across parameter values")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--vary", required=True, metavar="section.key=v1,v2,...",
                         help="parameter to vary and its comma-separated values")
    p_sweep.add_argument("--out", help="output root (one subdirectory per value)")
    p_sweep.add_argument("--strict", action="store_true")
    p_sweep.set_defaults(handler=_cmd_sweep)

    p_bound = sub.add_parser("bound", help="evaluate the detachment lower bound")
    p_bound.add_argument("--T", type=float, required=True, help="time horizon")
    p_bound.add_argument("--m", type=float, required=True, help="fluid mass")
    p_bound.add_argument("--gamma", type=float, required=True, help="adiabatic exponent")
    p_bound.add_argument("--L", type=float, required=True, help="domain circumference")
    p_bound.add_argument("--C", type=float, required=True, help="calibration constant")
    p_bound.add_argument("--F-total", dest="f_total", type=float, required=True,
                         help="cumulative outer-force integral")
    p_bound.set_defaults(handler=_cmd_bound)

    p_lem = sub.add_parser("check-lemmas", help="run the randomized lemma suite")
    p_lem.add_argument("--seed", type=int, default=42)
    p_lem.add_argument("--trials", type=int, default=200)
    p_lem.add_argument("--report", help="also write the trial rows to this CSV path")
    p_lem.set_defaults(handler=_cmd_check_lemmas)

    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; the documented usage code is 1
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
