"""Command-line entry point: ``brwre <subcommand> --config run.toml ...``.

Exit codes: 0 success, 1 assertion or run failure, 2 configuration error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from brwre import __version__, kernels
from brwre.bramson import extract, k_n_relation
from brwre.config import ConfigError, load, replica_seed_sequence
from brwre.environment import sample_environment
from brwre.experiments import (
    CSV_HEADER,
    ExpectationError,
    ReplicaError,
    check_regime,
    classify_report,
    oracle_checks,
    run_convergence,
)
from brwre.simulate import CapExceeded, simulate_tree
from brwre.velocity import RegimeError, velocity

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if v is None:
        return "none"
    return repr(v) if isinstance(v, float) else str(v)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_velocity(args) -> int:
    cfg = load(args.config)
    check_regime(cfg)
    try:
        report = velocity(cfg.offspring, cfg.env).as_dict()
    except RegimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    for k, v in report.items():
        print(f"{k}={_fmt(v)}")
    if args.summary:
        _write_json(args.summary, report)
    return EXIT_OK


def cmd_classify(args) -> int:
    print(classify_report(load(args.config)))
    return EXIT_OK


def _overridden(args):
    cfg = load(args.config)
    return cfg.with_overrides(
        mode=getattr(args, "mode", None),
        n=args.n,
        replicas=getattr(args, "replicas", None),
        seed=args.seed,
    )


def cmd_simulate(args) -> int:
    cfg = _overridden(args)
    check_regime(cfg)
    summary, rows = run_convergence(cfg, args.jobs)
    _write_csv(args.out, CSV_HEADER, rows)
    for cp in summary.checkpoints:
        print(f"n={cp.n} mean_ratio={cp.mean!r} se={cp.se!r}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = _overridden(args)
    check_regime(cfg)
    summary, rows = run_convergence(cfg, args.jobs)
    if args.out:
        _write_csv(args.out, CSV_HEADER, rows)
    data = summary.as_dict()
    if args.summary:
        _write_json(args.summary, data)
    print(f"regime={summary.regime.kind.value}")
    if summary.gamma is not None:
        print(f"gamma={summary.gamma!r}")
    print(f"replicas={summary.replicas}")
    for cp in summary.checkpoints:
        line = f"n={cp.n} mean={cp.mean!r} median={cp.median!r} se={cp.se!r}"
        if cp.abs_error is not None:
            line += f" abs_error={cp.abs_error!r}"
        print(line)
    print(f"stable_fraction={summary.stable_fraction!r}")
    print(f"increasing_fraction={summary.increasing_fraction!r}")
    for k, v in sorted(summary.diagnostics.items()):
        print(f"diag.{k}={v}")
    return EXIT_OK


def cmd_transform(args) -> int:
    cfg = _overridden(args)
    ss = replica_seed_sequence(cfg.seed, 0)
    env_ss, sim_ss = ss.spawn(2)
    env = sample_environment(cfg.env, cfg.n + 1, np.random.default_rng(env_ss))
    gen = simulate_tree(cfg.offspring, env, np.random.default_rng(sim_ss), cfg.n, cfg.population_cap)
    tp = extract(gen)
    _write_csv(args.out, ("site", "Y", "L", "tau_first", "tau_last"), tp.rows())
    traj = gen.minimal_trajectory()
    checks = [k_n_relation(tp, traj, n) for n in range(cfg.n + 1)]
    failed = [c for c in checks if c.verdict == "fail"]
    print(f"sites={tp.n_sites} particles={len(gen)}")
    print(f"k_n=M_n checked={sum(c.verdict != 'censored' for c in checks)} "
          f"censored={sum(c.verdict == 'censored' for c in checks)} failed={len(failed)}")
    for c in failed:
        print(f"FAIL n={c.n} k_n={c.k_n} M_n={c.M_n}")
    return EXIT_FAIL if failed else EXIT_OK


def cmd_oracle_check(args) -> int:
    cfg = load(args.config)
    if args.seed is not None:
        cfg = cfg.with_overrides(seed=args.seed)
    results = oracle_checks(cfg, samples=args.samples)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="brwre", description="Branching random walks in a site-indexed random environment.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({kernels.BACKEND} kernels)")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="TOML experiment file")
        sp.set_defaults(func=func)
        return sp

    sp = add("velocity", cmd_velocity, "solve for t+ and the velocity gamma")
    sp.add_argument("--summary", help="also write the report as JSON")

    add("classify", cmd_classify, "print the regime of the configured model")

    for name, func, help_ in (
        ("simulate", cmd_simulate, "run replicas and write M_n at the checkpoints as CSV"),
        ("convergence", cmd_convergence, "run replicas and summarize M_n/n per checkpoint"),
    ):
        sp = add(name, func, help_)
        sp.add_argument("--mode", choices=("tree", "counts"))
        sp.add_argument("--n", type=int)
        sp.add_argument("--replicas", type=int)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--jobs", type=int, default=1, help="worker processes (output does not depend on it)")
        sp.add_argument("--out", required=(name == "simulate"), help="CSV path")
        if name == "convergence":
            sp.add_argument("--summary", help="JSON summary path")

    sp = add("transform", cmd_transform, "extract (Y_j, L_j) from one tree-mode genealogy")
    sp.add_argument("--n", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", required=True, help="CSV path")

    sp = add("oracle-check", cmd_oracle_check, "compare simulators with exact oracles")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--samples", type=int, default=20_000)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExpectationError as exc:
        print(f"assertion failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ReplicaError, CapExceeded, RegimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
