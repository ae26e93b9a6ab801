"""Command-line entry point: ``mpmcmc {run,tune,bounds,validate,dataset}``."""

from __future__ import annotations

import argparse
import csv
import os
import sys
from pathlib import Path

from ..bounds import bounds_table
from ..core import MPMCMCError
from ..targets import generate_experiment_data, write_dataset
from .config import load_config
from .experiment import plot_data, run_experiment, tune_step, write_results
from .validation import report_json, validate

WORKERS_ENV = "MPMCMC_WORKERS"


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def resolve_workers(flag, configured: int) -> int:
    """--workers beats the environment variable, which beats the config file."""
    if flag is not None:
        return max(1, flag)
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    return max(1, configured)


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    if args.output:
        cfg = cfg.with_overrides(output=args.output)
    workers = resolve_workers(args.workers, cfg.workers)
    rows = run_experiment(cfg, workers=workers)
    write_results(rows, cfg.output)
    if cfg.plot_data:
        Path(cfg.plot_data).write_text(plot_data(rows))
    failed = [r for r in rows if r.status != "ok"]
    for r in failed:
        print(f"{r.sampler} K={r.K}: {r.status}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {cfg.output}")
    return 0


def cmd_tune(args) -> int:
    cfg = load_config(args.config)
    res = tune_step(cfg, args.sampler, args.k)
    print("sigma,esjd")
    for s, v in zip(res.grid, res.esjd):
        print(f"{s!r},{v!r}")
    print(f"# best sigma = {res.sigma!r}")
    return 0


def cmd_bounds(args) -> int:
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["K", "d", "sigma", "grw_bound", "grw_sup_bound", "mgf_bound"])
    for row in bounds_table(_ints(args.k_grid), args.d, args.m, args.l, _floats(args.sigma_grid)):
        w.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return 0


def cmd_validate(args) -> int:
    report = validate(args.level)
    text = report_json(report)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0 if report["ok"] else 1


def cmd_dataset(args) -> int:
    design, responses, _ = generate_experiment_data(args.seed, args.n, args.d)
    write_dataset(args.out, design, responses)
    print(f"wrote {len(responses)} observations to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mpmcmc", description="Multiproposal MCMC experiments and checks.")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the ESJD experiment described by a config file")
    r.add_argument("config")
    r.add_argument("--workers", type=int, default=None, help=f"worker processes (overrides ${WORKERS_ENV})")
    r.add_argument("--output", default=None, help="results CSV (overrides output.csv)")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("tune", help="print the ESJD step-size scan for one sampler")
    t.add_argument("config")
    t.add_argument("--sampler", required=True)
    t.add_argument("--k", type=int, required=True)
    t.set_defaults(func=cmd_tune)

    b = sub.add_parser("bounds", help="tabulate spectral-gap bounds as CSV")
    b.add_argument("--k-grid", default="1,2,4,8,16,32,64")
    b.add_argument("--d", type=int, required=True)
    b.add_argument("--m", type=float, required=True)
    b.add_argument("--l", type=float, required=True)
    b.add_argument("--sigma-grid", default="0.1,0.5,1")
    b.set_defaults(func=cmd_bounds)

    v = sub.add_parser("validate", help="run the self-check suite; exits nonzero on failure")
    v.add_argument("--level", choices=("quick", "full"), default="quick")
    v.add_argument("--out", default=None, help="also write the JSON report here")
    v.set_defaults(func=cmd_validate)

    d = sub.add_parser("dataset", help="write a synthetic logistic-regression dataset")
    d.add_argument("--seed", type=int, required=True)
    d.add_argument("--out", required=True)
    d.add_argument("--n", type=int, default=50)
    d.add_argument("--d", type=int, default=50)
    d.set_defaults(func=cmd_dataset)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (MPMCMCError, ValueError, OSError) as err:
        print(f"mpmcmc: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
