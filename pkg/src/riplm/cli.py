"""Command-line interface.

Subcommands:

  run          run the configured experiment, write per-trial CSVs, schema,
               and a summary; optionally render figures (--plots)
  check        run the experiment in memory and evaluate the diagnostic
               checks only (prints one line per check)
  bench-oracle compare the exhaustive rank benchmark with the heuristic on
               randomly generated instances
  gradcheck    finite-difference sweep over the analytic gradient
  plot         render figures from an existing run output directory

Exit codes: 0 all checks passed, 1 a hard check failed, 2 config or I/O error.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .benchmarks import rank_benchmark_exhaustive, rank_benchmark_heuristic
from .diagnostics import gradient_check_sweep
from .environments import StochasticEnvSpec, generate_stochastic
from .harness import (
    ConfigError,
    emit_results,
    load_config,
    run_diagnostics,
    run_experiment,
)


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"--seeds: expected comma-separated integers, got {text!r}") from None


def _load(args: argparse.Namespace):
    config = load_config(args.config)
    if args.seeds:
        config = replace(config, seeds=_parse_seeds(args.seeds))
    if args.out:
        config = replace(config, out=args.out)
    if getattr(args, "workers", None):
        config = replace(config, workers=args.workers)
    return config


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load(args)
    if config.out is None:
        raise ConfigError("run.out: an output directory is required (config key or --out)")
    logs = run_experiment(config)
    report = run_diagnostics(logs, config) if config.diagnostics else None
    written = emit_results(logs, report, config.out, config)
    for p in written:
        print(p)
    if report is not None:
        for line in report.lines():
            print(line)
    if config.plots or args.plots:
        from .plotting import render_run_figures

        for p in render_run_figures(config.out):
            print(p)
    return 0 if report is None or report.all_passed else 1


def _cmd_check(args: argparse.Namespace) -> int:
    config = _load(args)
    logs = run_experiment(config)
    report = run_diagnostics(logs, config)
    for line in report.lines():
        print(line)
    if config.out:
        emit_results(logs, report, config.out, config)
    return 0 if report.all_passed else 1


def _cmd_bench_oracle(args: argparse.Namespace) -> int:
    rng_means = np.random.default_rng(args.seed)
    gaps = []
    for k in range(args.trials):
        spec = StochasticEnvSpec(
            means=tuple(rng_means.random(args.n_experts)),
            horizon=args.horizon,
            seed=args.seed + k,
            availability="iid_awake" if args.awake_prob < 1.0 else "always_awake",
            awake_prob=args.awake_prob,
        )
        hist = generate_stochastic(spec)
        heur = rank_benchmark_heuristic(hist, compare_exact=False)
        if args.n_experts <= 10:
            exact = rank_benchmark_exhaustive(hist)
            rel = (heur.value - exact.value) / max(1.0, exact.value)
            gaps.append(rel)
            print(
                f"trial={k} exact={exact.value!r} heuristic={heur.value!r} "
                f"relative_gap={rel!r}"
            )
        else:
            print(f"trial={k} heuristic={heur.value!r} (exact benchmark unavailable for N > 10)")
    if gaps:
        print(f"mean_relative_gap={float(np.mean(gaps))!r} max_relative_gap={float(np.max(gaps))!r}")
    return 0


def _cmd_gradcheck(args: argparse.Namespace) -> int:
    res = gradient_check_sweep(
        instances=args.instances, seed=args.seed, max_n=args.max_n, step=args.step,
        tolerance=args.tol,
    )
    tag = "PASS" if res.passed else "FAIL"
    print(
        f"{tag} gradient_check max_rel_err={res.max_rel_err!r} tol={res.tolerance!r} "
        f"instances={res.instances} step={res.step!r}"
    )
    return 0 if res.passed else 1


def _cmd_plot(args: argparse.Namespace) -> int:
    from .plotting import render_run_figures

    for p in render_run_figures(args.data, args.out):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="riplm", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and emit data files")
    run.add_argument("--config", required=True, help="TOML experiment config")
    run.add_argument("--seeds", help="comma-separated seed list overriding the config")
    run.add_argument("--out", help="output directory overriding the config")
    run.add_argument("--workers", type=int, help="worker processes for trials")
    run.add_argument("--plots", action="store_true", help="also render figures")
    run.set_defaults(func=_cmd_run)

    check = sub.add_parser("check", help="run diagnostic suites only")
    check.add_argument("--config", required=True)
    check.add_argument("--seeds")
    check.add_argument("--out", help="optionally also write the summary here")
    check.add_argument("--workers", type=int)
    check.set_defaults(func=_cmd_check)

    bench = sub.add_parser("bench-oracle", help="exhaustive vs heuristic benchmark comparison")
    bench.add_argument("--n-experts", type=int, default=4)
    bench.add_argument("--horizon", type=int, default=50)
    bench.add_argument("--trials", type=int, default=100)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--awake-prob", type=float, default=1.0)
    bench.set_defaults(func=_cmd_bench_oracle)

    grad = sub.add_parser("gradcheck", help="finite-difference gradient sweep")
    grad.add_argument("--instances", type=int, default=1000)
    grad.add_argument("--seed", type=int, default=20260801)
    grad.add_argument("--max-n", type=int, default=16)
    grad.add_argument("--step", type=float, default=1e-6)
    grad.add_argument("--tol", type=float, default=1e-6)
    grad.set_defaults(func=_cmd_gradcheck)

    plot = sub.add_parser("plot", help="render figures from an existing run directory")
    plot.add_argument("--data", required=True, help="directory holding trial_*.csv")
    plot.add_argument("--out", help="figure directory (defaults to the data directory)")
    plot.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, FileNotFoundError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
