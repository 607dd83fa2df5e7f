"""Monte-Carlo sweep runner with CSV and SVG emission.

A sweep varies one parameter over a value grid; each (value, trial) cell
draws one fading realization from its own derived seed and runs every
requested scheme on that same realization, so scheme comparisons are paired.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .baselines import solve_faop, solve_fafp
from .dual_solver import SolverOptions, SolverReport, solve_oaop
from .errors import CrhetnetError, InvalidConfigError
from .model import NetworkConfig, build_topology, draw_channels
from .rate import percentage_gap

SWEEPABLE = ("pico_power", "macro_power", "interference_threshold", "num_users")
SCHEMES = ("OAOP", "FAOP", "FAFP")
METRICS = ("pr", "sum_throughput", "min_rate")

CSV_HEADER = [
    "sweep_param",
    "value",
    "trial",
    "scheme",
    "min_rate",
    "sum_throughput",
    "pr",
    "iterations",
    "converged",
    "seed",
]


@dataclass(frozen=True)
class SweepSpec:
    """One experiment: which parameter to sweep, over which values, how often."""

    swept_parameter: str
    values: tuple[float, ...]
    trials: int
    base_config: NetworkConfig
    base_seed: int = 0
    schemes: tuple[str, ...] = SCHEMES
    metrics: tuple[str, ...] = METRICS
    solver_options: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.swept_parameter not in SWEEPABLE:
            raise InvalidConfigError(f"cannot sweep {self.swept_parameter!r}; one of {SWEEPABLE}")
        values = tuple(float(v) for v in self.values)
        if len(values) == 0:
            raise InvalidConfigError("sweep needs at least one value")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InvalidConfigError("sweep values must be strictly increasing")
        object.__setattr__(self, "values", values)
        if self.trials < 1:
            raise InvalidConfigError("trials must be >= 1")
        if not self.schemes or any(s not in SCHEMES for s in self.schemes):
            raise InvalidConfigError(f"schemes must be a nonempty subset of {SCHEMES}")
        if not self.metrics or any(m not in METRICS for m in self.metrics):
            raise InvalidConfigError(f"metrics must be a nonempty subset of {METRICS}")


@dataclass(frozen=True, eq=False)
class SweepResult:
    """Raw per-cell rows plus aggregated means/standard errors and pairwise gaps.

    ``summary[(value, scheme)][metric] = (mean, stderr)`` over trials;
    ``gaps[(value, metric, scheme_a, scheme_b)]`` is the symmetric percentage
    gap between the two schemes' means.
    """

    spec: SweepSpec
    rows: tuple[dict, ...]
    summary: dict
    gaps: dict

    def mean(self, value: float, scheme: str, metric: str) -> float:
        return self.summary[(float(value), scheme)][metric][0]


def cell_seed(base_seed: int, value_index: int, trial_index: int) -> int:
    """Derived seed for one (value, trial) cell; distinct cells get distinct seeds."""
    return (base_seed ^ (value_index << 32) ^ trial_index) & (2**64 - 1)


def _cell_config(spec: SweepSpec, value: float, seed: int) -> NetworkConfig:
    if spec.swept_parameter == "num_users":
        return replace(spec.base_config, num_users=int(value), rng_seed=seed)
    return replace(spec.base_config, **{spec.swept_parameter: value}, rng_seed=seed)


def _run_cell(spec: SweepSpec, value_index: int, trial: int) -> list[dict]:
    value = spec.values[value_index]
    seed = cell_seed(spec.base_seed, value_index, trial)
    rows = []
    try:
        config = _cell_config(spec, value, seed)
        topology = build_topology(config)
        channels = draw_channels(config, topology)
    except CrhetnetError:
        config = None
    for scheme in spec.schemes:
        row = {
            "sweep_param": spec.swept_parameter,
            "value": value,
            "trial": trial,
            "scheme": scheme,
            "min_rate": float("nan"),
            "sum_throughput": float("nan"),
            "pr": float("nan"),
            "iterations": 0,
            "converged": False,
            "seed": seed,
        }
        if config is not None:
            try:
                report = _solve(scheme, config, topology, channels, spec.solver_options)
                row.update(
                    min_rate=report.rates.min_rate,
                    sum_throughput=report.rates.sum_rate,
                    pr=report.rates.pr,
                    iterations=report.iterations,
                    converged=report.converged,
                )
            except CrhetnetError:
                pass  # infeasible cell: recorded as NaN metrics, not fatal
        rows.append(row)
    return rows


def _solve(scheme, config, topology, channels, options) -> SolverReport:
    if scheme == "OAOP":
        return solve_oaop(config, topology, channels, options)
    if scheme == "FAOP":
        return solve_faop(config, topology, channels, options)
    return solve_fafp(config, topology, channels)


def run_sweep(spec: SweepSpec, threads: int = 1) -> SweepResult:
    """Run all (value, trial) cells and aggregate; deterministic for a fixed spec."""
    cells = [(vi, t) for vi in range(len(spec.values)) for t in range(spec.trials)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_cell = list(pool.map(lambda c: _run_cell(spec, *c), cells))
    else:
        per_cell = [_run_cell(spec, *c) for c in cells]
    rows = tuple(row for cell in per_cell for row in cell)

    summary = {}
    for value in spec.values:
        for scheme in spec.schemes:
            stats = {}
            for metric in METRICS:
                samples = np.array(
                    [r[metric] for r in rows if r["value"] == value and r["scheme"] == scheme]
                )
                mean = float(samples.mean())
                stderr = float(samples.std(ddof=1) / math.sqrt(samples.size)) if samples.size > 1 else 0.0
                stats[metric] = (mean, stderr)
            summary[(value, scheme)] = stats

    gaps = {}
    for value in spec.values:
        for metric in METRICS:
            for i, sa in enumerate(spec.schemes):
                for sb in spec.schemes[i + 1 :]:
                    gaps[(value, metric, sa, sb)] = percentage_gap(
                        summary[(value, sa)][metric][0], summary[(value, sb)][metric][0]
                    )
    return SweepResult(spec=spec, rows=rows, summary=summary, gaps=gaps)


def convergence_trace(config: NetworkConfig, channels, options: SolverOptions | None = None) -> SolverReport:
    """Single joint solve returning the full per-iteration dual trajectory."""
    topology = build_topology(config)
    return solve_oaop(config, topology, channels, options or SolverOptions())


def emit_csv(result: SweepResult, path) -> None:
    """Write raw sweep rows as RFC-4180 CSV in deterministic order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in result.rows:
            writer.writerow([row[col] for col in CSV_HEADER])


def _format(x: float) -> str:
    return f"{x:.6g}"


def emit_plot(result: SweepResult, path, metric: str | None = None) -> None:
    """Write a self-contained SVG line chart: mean metric vs swept value,
    one polyline per scheme, axis extremes labelled with the data range."""
    metric = metric or result.spec.metrics[0]
    values = result.spec.values
    series = {
        scheme: [result.mean(v, scheme, metric) for v in values] for scheme in result.spec.schemes
    }

    width, height = 640, 480
    left, right, top, bottom = 70, 150, 30, 50
    plot_w, plot_h = width - left - right, height - top - bottom

    xmin, xmax = min(values), max(values)
    finite = [y for ys in series.values() for y in ys if math.isfinite(y)]
    ymin, ymax = (min(finite), max(finite)) if finite else (0.0, 1.0)
    xspan = (xmax - xmin) or 1.0
    yspan = (ymax - ymin) or 1.0

    def px(x):
        return left + (x - xmin) / xspan * plot_w

    def py(y):
        return top + plot_h - (y - ymin) / yspan * plot_h

    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<text x="{left}" y="{height - 15}" font-size="12">{_format(xmin)}</text>',
        f'<text x="{left + plot_w}" y="{height - 15}" font-size="12" text-anchor="end">{_format(xmax)}</text>',
        f'<text x="{left - 8}" y="{py(ymin)}" font-size="12" text-anchor="end">{_format(ymin)}</text>',
        f'<text x="{left - 8}" y="{py(ymax)}" font-size="12" text-anchor="end">{_format(ymax)}</text>',
        f'<text x="{left + plot_w // 2}" y="{height - 15}" font-size="12" text-anchor="middle">'
        f"{result.spec.swept_parameter}</text>",
        f'<text x="18" y="{top + plot_h // 2}" font-size="12" '
        f'transform="rotate(-90 18 {top + plot_h // 2})" text-anchor="middle">{metric}</text>',
    ]
    for i, (scheme, ys) in enumerate(series.items()):
        color = palette[i % len(palette)]
        points = " ".join(
            f"{px(x):.2f},{py(y):.2f}" for x, y in zip(values, ys) if math.isfinite(y)
        )
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{points}"/>')
        ly = top + 18 + 18 * i
        parts.append(
            f'<line x1="{left + plot_w + 12}" y1="{ly - 4}" x2="{left + plot_w + 36}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text x="{left + plot_w + 42}" y="{ly}" font-size="12">{scheme}</text>')
    parts.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(parts) + "\n")
