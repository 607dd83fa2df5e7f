"""Command-line front end: single solves, parameter sweeps, oracle validation.

Parameter precedence is CLI flag > CRHETNET_* environment variable > config
file (flat ``key = value`` lines, keys named like the long flags) >
built-in default. Exit codes: 0 success, 1 runtime failure, 2 usage or
config error.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from .baselines import solve_faop, solve_fafp
from .dual_solver import SolverOptions, solve_oaop, write_trace_csv
from .errors import (
    CrhetnetError,
    InfeasibleAssignmentError,
    InstanceTooLargeError,
    InvalidConfigError,
)
from .harness import SweepSpec, emit_csv, emit_plot, run_sweep
from .model import NetworkConfig, build_topology, draw_channels
from .oracle import MAX_BS, MAX_CHANNELS, MAX_GRID, MAX_USERS, brute_force_maxmin

ENV_PREFIX = "CRHETNET_"

PRESETS = {
    "fig2": ("pico_power", (0.25, 0.5, 1.0, 1.5, 2.0), "pr"),
    "fig3": ("interference_threshold", (20.0, 25.0, 30.0, 35.0, 40.0), "pr"),
    "fig4": ("macro_power", (10.0, 15.0, 20.0, 25.0, 30.0), "pr"),
    "fig5": ("pico_power", (0.25, 0.5, 1.0, 1.5, 2.0), "sum_throughput"),
    "fig6": ("interference_threshold", (20.0, 25.0, 30.0, 35.0, 40.0), "sum_throughput"),
    "fig7": ("macro_power", (10.0, 15.0, 20.0, 25.0, 30.0), "sum_throughput"),
    "fig8": ("num_users", (20.0, 40.0, 60.0, 80.0, 100.0), "sum_throughput"),
}

PARAM_ALIASES = {
    "pico_power": "pico_power",
    "macro_power": "macro_power",
    "ith": "interference_threshold",
    "interference_threshold": "interference_threshold",
    "users": "num_users",
    "num_users": "num_users",
}


class UsageError(Exception):
    """Bad flags or config; maps to exit code 2."""


def _parse_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
                key, _, value = line.partition("=")
                values[key.strip().replace("-", "_")] = value.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return values


class _Params:
    """Flag > environment > config file > default resolution."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.file_values = _parse_config_file(args.config) if getattr(args, "config", None) else {}

    def get(self, name: str, type_, default=None, required: bool = False):
        flag = getattr(self.args, name, None)
        if flag is not None:
            return flag
        env_key = ENV_PREFIX + name.upper()
        try:
            if env_key in os.environ:
                return type_(os.environ[env_key])
            if name in self.file_values:
                return type_(self.file_values[name])
        except ValueError as exc:
            raise UsageError(f"bad value for {name}: {exc}") from exc
        if required and default is None:
            raise UsageError(f"missing required parameter --{name.replace('_', '-')}")
        return default


def _add_common_network_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file; flags override it")
    sub.add_argument("--users", type=int, help="number of secondary users")
    sub.add_argument("--channels", type=int, help="number of channels")
    sub.add_argument("--bs", type=int, help="number of base stations (1 macro + picos)")
    sub.add_argument("--macro-power", dest="macro_power", type=float, help="macro budget, watts")
    sub.add_argument("--pico-power", dest="pico_power", type=float, help="per-pico budget, watts")
    sub.add_argument("--ith", type=float, help="interference cap at the primary receiver, watts")
    sub.add_argument("--noise", type=float, help="noise power, watts")
    sub.add_argument("--seed", type=int, help="RNG seed")
    sub.add_argument("--max-iters", dest="max_iters", type=int, help="solver iteration cap")
    sub.add_argument("--step", type=float, help="subgradient step size")
    sub.add_argument(
        "--step-schedule",
        dest="step_schedule",
        choices=("constant", "sqrt"),
        help="constant steps or step/sqrt(iteration)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crhetnet",
        description="Max-min fair power allocation and user assignment in an underlay CR HetNet",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="run one scheme on one realization")
    _add_common_network_flags(solve)
    solve.add_argument("--scheme", choices=("oaop", "faop", "fafp"), default="oaop")
    solve.add_argument("--out", help="write the solve report row as CSV")
    solve.add_argument("--trace", help="write the per-iteration dual trace as CSV")

    sweep = commands.add_parser("sweep", help="Monte-Carlo sweep over one parameter")
    _add_common_network_flags(sweep)
    sweep.add_argument("--preset", help="named sweep: " + "|".join(PRESETS))
    sweep.add_argument("--param", help="swept parameter: " + "|".join(PARAM_ALIASES))
    sweep.add_argument("--values", help="comma-separated sweep values")
    sweep.add_argument("--trials", type=int, help="fading realizations per value (default 100)")
    sweep.add_argument("--schemes", help="comma-separated subset of oaop,faop,fafp")
    sweep.add_argument("--metric", choices=("pr", "sum_throughput", "min_rate"), help="plot metric")
    sweep.add_argument("--out", help="CSV output path")
    sweep.add_argument("--plot", help="SVG output path")
    sweep.add_argument("--threads", type=int, help="concurrent cells (default 1)")

    validate = commands.add_parser("validate", help="compare the joint solver to brute force")
    _add_common_network_flags(validate)
    validate.add_argument("--instances", type=int, help="number of tiny instances (default 50)")
    validate.add_argument("--threshold", type=float, help="worst allowed relative gap (default 0.05)")
    validate.add_argument("--grid", type=int, help="oracle grid points (default 32)")
    validate.add_argument("--report", action="store_true", help="print a per-instance gap table")
    return parser


def _network_config(params: _Params, defaults: dict) -> NetworkConfig:
    return NetworkConfig(
        num_users=params.get("users", int, defaults.get("users"), required=True),
        num_bs=params.get("bs", int, defaults.get("bs"), required=True),
        num_channels=params.get("channels", int, defaults.get("channels"), required=True),
        macro_power=params.get("macro_power", float, defaults["macro_power"]),
        pico_power=params.get("pico_power", float, defaults["pico_power"]),
        interference_threshold=params.get("ith", float, defaults["ith"]),
        noise_psd=params.get("noise", float, defaults["noise"]),
        rng_seed=params.get("seed", int, defaults["seed"]),
    )


def _solver_options(params: _Params) -> SolverOptions:
    return SolverOptions(
        max_iters=params.get("max_iters", int, 500),
        step_delta=params.get("step", float, 0.01),
        step_schedule=params.get("step_schedule", str, "constant"),
    )


_SIV_DEFAULTS = {"macro_power": 20.0, "pico_power": 1.0, "ith": 30.0, "noise": 0.1, "seed": 0}
_TINY_DEFAULTS = {
    "users": 2,
    "channels": 2,
    "bs": 2,
    "macro_power": 2.0,
    "pico_power": 1.0,
    "ith": 3.0,
    "noise": 0.1,
    "seed": 1,
}


def _cmd_solve(args: argparse.Namespace) -> int:
    params = _Params(args)
    config = _network_config(params, _SIV_DEFAULTS)
    options = _solver_options(params)
    topology = build_topology(config)
    channels = draw_channels(config, topology)
    if args.scheme == "oaop":
        report = solve_oaop(config, topology, channels, options)
    elif args.scheme == "faop":
        report = solve_faop(config, topology, channels, options)
    else:
        report = solve_fafp(config, topology, channels)

    print(
        f"scheme={args.scheme} users={config.num_users} channels={config.num_channels} "
        f"bs={config.num_bs} macro_power={config.macro_power} pico_power={config.pico_power} "
        f"ith={config.interference_threshold} noise={config.noise_psd} seed={config.rng_seed} "
        f"max_iters={options.max_iters} step={options.step_delta} schedule={options.step_schedule}"
    )
    print(f"min_rate={report.rates.min_rate!r}")
    print(f"sum_throughput={report.rates.sum_rate!r}")
    print(f"pr={report.rates.pr!r}")
    print(f"iterations={report.iterations}")
    print(f"converged={report.converged}")
    print(f"budget_residual={float(report.residuals['budget'].max())!r}")
    print(f"interference_residual={report.residuals['interference']!r}")

    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["scheme", "users", "channels", "bs", "seed", "min_rate", "sum_throughput", "pr", "iterations", "converged"]
            )
            writer.writerow(
                [
                    args.scheme,
                    config.num_users,
                    config.num_channels,
                    config.num_bs,
                    config.rng_seed,
                    report.rates.min_rate,
                    report.rates.sum_rate,
                    report.rates.pr,
                    report.iterations,
                    report.converged,
                ]
            )
    if args.trace:
        write_trace_csv(report, args.trace, config.num_users, config.num_bs)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    params = _Params(args)
    if args.preset and args.param:
        raise UsageError("give either --preset or --param, not both")
    if args.preset:
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; choose from {'|'.join(PRESETS)}")
        swept, values, preset_metric = PRESETS[args.preset]
    elif args.param:
        if args.param not in PARAM_ALIASES:
            raise UsageError(f"unknown sweep parameter {args.param!r}")
        swept = PARAM_ALIASES[args.param]
        if not args.values:
            raise UsageError("--param requires --values")
        try:
            values = tuple(float(v) for v in args.values.split(","))
        except ValueError as exc:
            raise UsageError(f"bad --values: {exc}") from exc
        preset_metric = "pr"
    else:
        raise UsageError("sweep needs --preset or --param/--values")

    schemes_arg = params.get("schemes", str, "oaop,faop,fafp")
    schemes = tuple(s.strip().upper() for s in schemes_arg.split(",") if s.strip())
    defaults = dict(_SIV_DEFAULTS, users=30, channels=20, bs=5)
    config = _network_config(params, defaults)
    metric = args.metric or preset_metric

    spec = SweepSpec(
        swept_parameter=swept,
        values=values,
        trials=params.get("trials", int, 100),
        base_config=config,
        base_seed=config.rng_seed,
        schemes=schemes,
        metrics=(metric,),
        solver_options=_solver_options(params),
    )
    result = run_sweep(spec, threads=params.get("threads", int, 1))

    print(f"sweep {swept} over {list(values)}: {spec.trials} trials x {len(schemes)} schemes")
    for value in values:
        cells = "  ".join(
            f"{scheme}:{result.mean(value, scheme, metric):.4f}" for scheme in schemes
        )
        print(f"  {swept}={value:g}  mean {metric}:  {cells}")
    if args.out:
        emit_csv(result, args.out)
        print(f"wrote {args.out}")
    if args.plot:
        emit_plot(result, args.plot, metric=metric)
        print(f"wrote {args.plot}")
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    params = _Params(args)
    config = _network_config(params, _TINY_DEFAULTS)
    grid = params.get("grid", int, 32)
    if (
        config.num_users > MAX_USERS
        or config.num_channels > MAX_CHANNELS
        or config.num_bs > MAX_BS
        or grid > MAX_GRID
    ):
        raise UsageError(
            f"validate is limited to {MAX_USERS} users / {MAX_CHANNELS} channels / "
            f"{MAX_BS} BSs / grid {MAX_GRID}"
        )
    instances = params.get("instances", int, 50)
    threshold = params.get("threshold", float, 0.05)
    options = SolverOptions(
        max_iters=params.get("max_iters", int, 500),
        step_delta=params.get("step", float, 0.01),
        step_schedule=params.get("step_schedule", str, "constant"),
    )

    from dataclasses import replace

    worst = 0.0
    rows = []
    for i in range(instances):
        instance = replace(config, rng_seed=(config.rng_seed + i) & (2**64 - 1))
        topology = build_topology(instance)
        channels = draw_channels(instance, topology)
        solver = solve_oaop(instance, topology, channels, options)
        reference = brute_force_maxmin(instance, topology, channels, grid_points=grid)
        ref = reference.rates.min_rate
        gap = max(0.0, (ref - solver.rates.min_rate) / ref) if ref > 0 else 0.0
        worst = max(worst, gap)
        rows.append((instance.rng_seed, solver.rates.min_rate, ref, gap))

    if args.report:
        print(f"{'seed':>12} {'solver':>12} {'oracle':>12} {'gap':>8}")
        for seed, got, ref, gap in rows:
            print(f"{seed:>12} {got:>12.6f} {ref:>12.6f} {gap:>8.4f}")
    print(f"instances={instances} grid={grid} worst_gap={worst:.6f} threshold={threshold}")
    return 0 if worst <= threshold else 1


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        return _cmd_validate(args)
    except (UsageError, InvalidConfigError, InstanceTooLargeError, InfeasibleAssignmentError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 2
    except CrhetnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
