"""Command-line entry point: run the optimizer, compare strategies, verify claims."""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import bench, bnb
from .errors import InsufficientDataError
from .kernels import KernelSpec
from .lattice import DyadicGrid

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CHECK_FAILED = 3

DEFAULT_MAX_LEVEL = 10
STRATEGIES = ("bnb", "ucb", "random")


def _fmt(value: float) -> str:
    # repr of a Python float is the shortest round-trip decimal
    return repr(float(value))


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip() != ""]


def _parse_seeds(text: str) -> list[int]:
    """Either "A..B" (inclusive range) or "N" (seeds 0..N-1)."""
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    n = int(text)
    if n < 1:
        raise ValueError("seed count must be positive")
    return list(range(n))


def _parse_levels(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(tok) for tok in text.split(",")]


def _read_config_file(path: str) -> dict[str, str]:
    """Flat `section.key = value` lines; '#' starts a comment."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


class _Settings:
    """Resolved options: flags override the config file, which overrides defaults."""

    def __init__(self, args):
        cfg = _read_config_file(args.config) if getattr(args, "config", None) else {}
        self.dim = args.dim if args.dim is not None else int(cfg.get("domain.dim", 1))
        lower = cfg.get("domain.lower")
        upper = cfg.get("domain.upper")
        self.lower = np.asarray(
            _parse_floats(lower) if lower else [0.0] * self.dim, dtype=float
        )
        self.upper = np.asarray(
            _parse_floats(upper) if upper else [1.0] * self.dim, dtype=float
        )
        if self.lower.shape != (self.dim,) or self.upper.shape != (self.dim,):
            raise ValueError("domain bounds do not match --dim")
        self.max_level = (
            args.max_level
            if args.max_level is not None
            else int(cfg.get("lattice.max_level", DEFAULT_MAX_LEVEL))
        )
        family = args.kernel if args.kernel is not None else cfg.get("kernel.family", "se")
        scale = (
            args.output_scale
            if args.output_scale is not None
            else float(cfg.get("kernel.output_scale", 1.0))
        )
        ls_text = (
            args.lengthscale
            if args.lengthscale is not None
            else cfg.get("kernel.lengthscales", "0.3")
        )
        scales = _parse_floats(ls_text)
        if len(scales) == 1 and self.dim > 1:
            scales = scales * self.dim
        self.spec = KernelSpec(family, scale, tuple(scales), self.dim)
        self.alpha = args.alpha
        self.budget = args.budget
        self.half_radius = getattr(args, "half_radius", "off") == "on"
        self.out_dir = Path(
            args.out or os.environ.get("BNBOPT_OUT") or "bnbopt-out"
        )

    def grid(self) -> DyadicGrid:
        return DyadicGrid(self.lower, self.upper, 0, self.max_level)


def _build_objective(name: str, settings: _Settings, seed: int) -> tuple:
    """Returns (objective, run_max_level)."""
    grid = settings.grid()
    if name == "gp-sample":
        # keep the run on the tabulated lattice so every sample is a table hit
        table_level = bench.enumeration_level(grid)
        objective = bench.gp_sample_objective(settings.spec, grid, table_level, seed)
        return objective, table_level
    if name == "quadratic":
        center = settings.lower + 0.5 * (settings.upper - settings.lower)
        return (
            bench.quadratic_objective(center, 1.0, 1.0, settings.lower, settings.upper),
            settings.max_level,
        )
    if name == "boundary":
        return (
            bench.boundary_max_objective(settings.lower, settings.upper),
            settings.max_level,
        )
    raise ValueError(f"unknown objective {name!r}")


def _run_strategy(strategy: str, objective, settings: _Settings, seed: int,
                  run_max_level: int) -> bnb.RunTrace:
    config = bnb.RunConfig(
        alpha=settings.alpha,
        max_evaluations=settings.budget,
        seed=seed,
        max_level=run_max_level,
        half_radius=settings.half_radius,
    )
    grid = DyadicGrid(settings.lower, settings.upper, 0, run_max_level)
    if strategy == "bnb":
        return bnb.run(objective, settings.spec, grid, config)
    if strategy == "ucb":
        return bench.plain_ucb_run(objective, settings.spec, grid, config)
    if strategy == "random":
        return bench.random_run(objective, grid, config)
    raise ValueError(f"unknown strategy {strategy!r}")


def _write_trace_csv(path: Path, trace: bnb.RunTrace, objective) -> None:
    dim = trace.points.shape[1]
    fstar = objective.known_max_value
    incumbents = trace.incumbent_values
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["t", *[f"x{i}" for i in range(dim)], "value", "incumbent_value",
             "simple_regret"]
        )
        for i in range(len(trace)):
            regret = "" if fstar is None else _fmt(fstar - incumbents[i])
            writer.writerow(
                [i + 1, *[_fmt(v) for v in trace.points[i]],
                 _fmt(trace.values[i]), _fmt(incumbents[i]), regret]
            )


def _write_iterations_csv(path: Path, trace: bnb.RunTrace, dim: int) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(
            ["iter", "level", "delta", "new_points", "T", "beta", "sup_lcb",
             *[f"region_center{i}" for i in range(dim)], "region_radius", "kept"]
        )
        for rec in trace.iterations:
            writer.writerow(
                [rec.iteration, rec.level, _fmt(rec.delta), rec.new_points_count,
                 rec.T_after, _fmt(rec.beta_T), _fmt(rec.sup_lcb),
                 *[_fmt(v) for v in rec.region_after.center],
                 _fmt(rec.region_after.radius), rec.kept_count]
            )


def cmd_run(args) -> int:
    settings = _Settings(args)
    seed = args.seed if args.seed is not None else 0
    objective, run_max_level = _build_objective(args.objective, settings, seed)
    started = time.perf_counter()
    trace = _run_strategy("bnb", objective, settings, seed, run_max_level)
    elapsed = time.perf_counter() - started
    settings.out_dir.mkdir(parents=True, exist_ok=True)
    _write_trace_csv(settings.out_dir / "trace.csv", trace, objective)
    _write_iterations_csv(
        settings.out_dir / "iterations.csv", trace, trace.points.shape[1]
    )
    final_regret = (
        float(objective.known_max_value - trace.incumbent_values[-1])
        if objective.known_max_value is not None and len(trace)
        else float("nan")
    )
    print(
        f"T={len(trace)} final_regret={final_regret:.6g} "
        f"truncated={trace.truncated} wall={elapsed:.2f}s"
    )
    return EXIT_OK


def cmd_compare(args) -> int:
    settings = _Settings(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        if s not in STRATEGIES:
            raise ValueError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
    seeds = _parse_seeds(args.seeds)
    settings.out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    for strategy in strategies:
        finals, cumulatives, amps, rates, r2s = [], [], [], [], []
        for seed in seeds:
            objective, run_max_level = _build_objective(
                args.objective, settings, seed
            )
            trace = _run_strategy(strategy, objective, settings, seed, run_max_level)
            _write_trace_csv(
                settings.out_dir / f"{strategy}_seed{seed}_trace.csv",
                trace, objective,
            )
            series = bench.regret_series(trace, objective)
            finals.append(float(series.simple[-1]))
            cumulatives.append(float(series.cumulative[-1]))
            try:
                fitted = bench.fit_rate(series)
            except InsufficientDataError:
                continue
            amps.append(fitted.amplitude)
            rates.append(fitted.rate)
            r2s.append(fitted.r_squared)
        summary_rows.append(
            {
                "strategy": strategy,
                "seeds": len(seeds),
                "median_final_simple_regret": _fmt(float(np.median(finals))),
                "median_final_cumulative_regret": _fmt(float(np.median(cumulatives))),
                "fit_amplitude_median": _fmt(float(np.median(amps))) if amps else "",
                "fit_rate_median": _fmt(float(np.median(rates))) if rates else "",
                "fit_r2_median": _fmt(float(np.median(r2s))) if r2s else "",
                "fits_used": len(rates),
            }
        )
    with (settings.out_dir / "summary.csv").open("w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(summary_rows[0].keys()))
        writer.writeheader()
        writer.writerows(summary_rows)
    for row in summary_rows:
        print(
            f"{row['strategy']}: median final regret "
            f"{row['median_final_simple_regret']}, median cumulative "
            f"{row['median_final_cumulative_regret']}"
        )
    return EXIT_OK


def cmd_verify(args) -> int:
    settings = _Settings(args)
    exp_dir = settings.out_dir / args.target  # one directory per experiment
    exp_dir.mkdir(parents=True, exist_ok=True)
    if args.target == "variance":
        levels = _parse_levels(args.levels)
        result = bench.variance_bound_experiment(
            settings.spec, settings.lower, settings.upper, levels
        )
        with (exp_dir / "variance.csv").open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["level", "delta", "sup_sigma"])
            for lev, d, s in zip(result.levels, result.deltas, result.sup_sigmas):
                writer.writerow([lev, _fmt(d), _fmt(s)])
        decreasing = bool(np.all(np.diff(result.sup_sigmas) < 0.0))
        ok = 1.8 <= result.slope <= 2.2 and decreasing
        print(
            f"variance: slope={result.slope:.4f} (expect [1.8, 2.2]) "
            f"strictly_decreasing={decreasing} levels={list(result.levels)} "
            f"-> {'PASS' if ok else 'FAIL'}"
        )
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    if args.target == "envelope":
        n_seeds = len(_parse_seeds(args.seeds))
        grid = settings.grid()
        level = bench.enumeration_level(grid)
        report = bench.envelope_experiment(
            settings.spec, grid, level, args.alpha, n_seeds, budget=args.budget
        )
        with (exp_dir / "envelope.csv").open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["seed", "max_envelope_ratio", "argmax_retained"])
            for seed, ratio, kept in zip(
                report.seeds, report.max_ratios, report.retained
            ):
                writer.writerow([seed, _fmt(ratio), int(kept)])
        threshold = (
            1.0 - args.alpha
            - 3.0 * math.sqrt(args.alpha * (1.0 - args.alpha) / n_seeds)
        )
        ok = report.coverage >= threshold
        print(
            f"envelope: coverage={report.coverage:.4f} "
            f"threshold={threshold:.4f} retention={report.retention:.4f} "
            f"seeds={n_seeds} -> {'PASS' if ok else 'FAIL'}"
        )
        return EXIT_OK if ok else EXIT_CHECK_FAILED
    raise ValueError(f"unknown verify target {args.target!r}")


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--dim", type=int, default=None, help="domain dimension")
    parser.add_argument("--kernel", choices=["se", "matern52"], default=None)
    parser.add_argument("--lengthscale", default=None,
                        help="comma-separated lengthscales (single value repeats)")
    parser.add_argument("--output-scale", type=float, default=None)
    parser.add_argument("--alpha", type=float, default=0.05)
    parser.add_argument("--budget", type=int, default=200)
    parser.add_argument("--max-level", type=int, default=None)
    parser.add_argument("--out", default=None,
                        help="output directory (default $BNBOPT_OUT or ./bnbopt-out)")
    parser.add_argument("--config", default=None,
                        help="flat section.key = value config file; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bnbopt",
        description="Branch-and-bound Gaussian-process optimizer and benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="one optimizer run, trace written as CSV")
    _add_common(p_run)
    p_run.add_argument("--objective", required=True,
                       choices=["gp-sample", "quadratic", "boundary"])
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--half-radius", choices=["on", "off"], default="off")
    p_run.set_defaults(handler=cmd_run)

    p_cmp = sub.add_parser("compare", help="strategies x seeds regret comparison")
    _add_common(p_cmp)
    p_cmp.add_argument("--objective", default="gp-sample",
                       choices=["gp-sample", "quadratic", "boundary"])
    p_cmp.add_argument("--seeds", default="20",
                       help='"A..B" inclusive range or a count "N"')
    p_cmp.add_argument("--strategies", default="bnb,ucb,random")
    p_cmp.add_argument("--half-radius", choices=["on", "off"], default="off")
    p_cmp.set_defaults(handler=cmd_compare)

    p_ver = sub.add_parser("verify", help="scientific checks (exit 3 on failure)")
    _add_common(p_ver)
    p_ver.add_argument("target", choices=["variance", "envelope"])
    p_ver.add_argument("--levels", default="1..5", help="variance cover levels")
    p_ver.add_argument("--seeds", default="200", help="envelope seed count/range")
    p_ver.set_defaults(handler=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ValueError as exc:
        # bad option values surface as usage errors
        parser.exit(EXIT_USAGE, f"bnbopt: error: {exc}\n")
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"bnbopt: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
