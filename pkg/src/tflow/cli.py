"""Command-line interface: ``tflow simulate | experiment | inequalities``.

Exit status 0 means every check passed, 1 a failed check, 2 a usage or
configuration error and 3 a failed time step.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

from . import __version__
from .config import load_config
from .errors import ConfigurationError, PositivityError, StepFailure
from .experiments import EXPERIMENTS, ExperimentResult, mean_drift, run_experiment, simulate
from .initial import build_initial
from .io import write_series, write_snapshot
from .observables import conserved_triple, omega_limit_detect

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_STEP = 0, 1, 2, 3


def _snapshot_path(base, step):
    stem, ext = os.path.splitext(base)
    return f"{stem}_{step:08d}{ext or '.tfs'}"


def cmd_simulate(args):
    cfg = load_config(args.config)
    state = build_initial(cfg)
    mom, mass, energy = conserved_triple(state, cfg.laws)
    print(f"conserved: velocity_mean=({mom[0]!r}, {mom[1]!r}) phi_mean={mass!r} energy={energy!r}")
    traj = simulate(cfg, state)
    res = ExperimentResult("simulate")
    recs = traj.records
    dphi, du = mean_drift(recs)
    res.add("max |phi mean drift|", dphi, "<= 1e-12", dphi <= 1e-12)
    res.add("max |velocity mean drift|", du, "<= 1e-12", du <= 1e-12)
    low = min(r.entropy_production_rate for r in recs)
    res.add("min entropy production rate", low, ">= 0", low >= 0)
    jensen = max(-math.log(r.mean_theta) + r.entropy for r in recs)
    res.add("max of -log(mean theta) - mean(-log theta)", jensen, "<= 1e-12", jensen <= 1e-12)
    if cfg.series_path:
        res.artifacts.append(write_series(recs, cfg.series_path))
    if cfg.snapshot_path:
        res.artifacts.append(write_snapshot(traj.final, cfg.snapshot_path))
        for i, snap in enumerate(traj.snapshots, 1):
            res.artifacts.append(write_snapshot(snap, _snapshot_path(cfg.snapshot_path, i * cfg.snapshot_every)))
    v = omega_limit_detect(recs, tol=cfg.omega_tol, window=cfg.omega_window)
    print(f"steps={traj.steps} halvings={traj.halvings} t={traj.final.t!r}")
    print(f"omega-limit: converged={v.converged} theta_inf={v.theta_inf!r} mu_inf={v.mu_inf!r} "
          f"jensen_bound={v.jensen_bound!r} jensen_ok={v.jensen_ok}")
    print(res.report())
    return EXIT_OK if res.passed else EXIT_CHECK


def cmd_experiment(args):
    cfg = load_config(args.config) if args.config else None
    res = run_experiment(args.name, cfg, outdir=args.outdir)
    print(res.report())
    return EXIT_OK if res.passed else EXIT_CHECK


def cmd_inequalities(args):
    from .inequalities import hard_failures, run_all, write_report

    if args.samples < 1:
        raise ConfigurationError(f"--samples must be >= 1, got {args.samples}", key="samples")
    reports = run_all(args.samples, args.seed, n=args.n)
    if args.report:
        with open(args.report, "w", encoding="ascii", newline="") as fh:
            write_report(reports, fh)
    else:
        write_report(reports, sys.stdout)
    bad = hard_failures(reports)
    for rep in bad:
        print(f"[FAIL] {rep.name}: max ratio {rep.max_ratio!r} exceeds its exact bound", file=sys.stderr)
    return EXIT_CHECK if bad else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="tflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"tflow {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configuration file")
    s.add_argument("config", help="path of a key = value configuration")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="run a canned experiment")
    e.add_argument("name", choices=sorted(EXPERIMENTS))
    e.add_argument("--config", help="configuration replacing the canned one")
    e.add_argument("--outdir", help="directory for CSV and snapshot artifacts")
    e.set_defaults(func=cmd_experiment)

    i = sub.add_parser("inequalities", help="sample the functional inequalities")
    i.add_argument("--samples", type=int, default=1000)
    i.add_argument("--seed", type=int, default=0)
    i.add_argument("--n", type=int, default=32, help="grid points per axis")
    i.add_argument("--report", help="CSV output path (default: stdout)")
    i.set_defaults(func=cmd_inequalities)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StepFailure, PositivityError) as exc:
        print(f"step failure: {exc}", file=sys.stderr)
        return EXIT_STEP
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
