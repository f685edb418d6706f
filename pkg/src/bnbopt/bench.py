"""Objectives, baseline strategies, regret metrics and verification experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import gp
from .bnb import RunConfig, RunTrace, ShrinkEvent, beta, run
from .errors import GridTooLargeError, IllConditionedError, InsufficientDataError
from .kernels import KernelSpec
from .lattice import DyadicGrid

ENUMERATION_CAP = 20_000


@dataclass(frozen=True)
class Objective:
    """Deterministic box-domain objective with an optional known maximum."""

    lower: np.ndarray
    upper: np.ndarray
    fn: Callable[[np.ndarray], float]
    known_max_point: np.ndarray | None = None
    known_max_value: float | None = None
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=float))
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=float))
        if self.known_max_point is not None:
            object.__setattr__(
                self, "known_max_point", np.asarray(self.known_max_point, dtype=float)
            )

    def __call__(self, x) -> float:
        return float(self.fn(np.asarray(x, dtype=float)))


def gp_sample_objective(spec: KernelSpec, grid: DyadicGrid, level: int,
                        seed: int, jitter: float | None = None) -> Objective:
    """Tabulate one prior draw over the level-`level` lattice.

    Evaluation at a table point is an exact lookup; any other point gets the
    posterior-mean interpolant conditioned on the full table. The known
    maximum is the table argmax.
    """
    if not 0 <= level <= grid.max_level:
        raise ValueError("level must lie in [0, grid.max_level]")
    if grid.num_points(level) > ENUMERATION_CAP:
        raise GridTooLargeError(
            f"{grid.num_points(level)} table points exceed the "
            f"{ENUMERATION_CAP} cap"
        )
    pts = grid.points(level)
    vals = gp.sample_prior_on_grid(spec, pts, seed, jitter)
    table = {tuple(p): float(v) for p, v in zip(pts, vals)}
    state: dict = {}

    def interpolant() -> gp.GPPosterior:
        if "post" not in state:
            state["post"] = gp.fit(spec, gp.ObservationSet(pts, vals), jitter)
        return state["post"]

    def evaluate(x: np.ndarray) -> float:
        hit = table.get(tuple(x))
        if hit is not None:
            return hit
        mu, _ = interpolant().predict(x)
        return mu

    imax = int(np.argmax(vals))
    return Objective(
        grid.lower, grid.upper, evaluate, pts[imax].copy(), float(vals[imax]),
        {"name": "gp-sample", "level": level, "seed": seed,
         "kernel": spec.family, "lengthscales": spec.lengthscales},
    )


def quadratic_objective(center, curvature: float, peak: float,
                        lower, upper) -> Objective:
    """Concave bowl peak - curvature * ||x - center||^2 with an interior maximum."""
    center = np.asarray(center, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if not curvature > 0.0:
        raise ValueError("curvature must be strictly positive")
    if not np.all((lower < center) & (center < upper)):
        raise ValueError("center must lie strictly inside the domain box")

    def evaluate(x: np.ndarray) -> float:
        return peak - curvature * float(((x - center) ** 2).sum())

    return Objective(
        lower, upper, evaluate, center.copy(), float(peak),
        {"name": "quadratic", "curvature": float(curvature), "peak": float(peak)},
    )


def boundary_max_objective(lower, upper) -> Objective:
    """Linear ramp maximized at the upper corner: a boundary max with nonzero gradient."""
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)

    def evaluate(x: np.ndarray) -> float:
        return float(np.sum(x))

    return Objective(
        lower, upper, evaluate, upper.copy(), float(np.sum(upper)),
        {"name": "boundary"},
    )


def enumeration_level(grid: DyadicGrid, cap: int = ENUMERATION_CAP) -> int:
    """Deepest level whose full lattice enumeration stays within `cap` points."""
    best = None
    for lev in range(grid.max_level + 1):
        if grid.num_points(lev) <= cap:
            best = lev
        else:
            break
    if best is None:
        raise GridTooLargeError("even the level-0 lattice exceeds the cap")
    return best


def plain_ucb_run(objective, spec: KernelSpec, grid: DyadicGrid,
                  config: RunConfig) -> RunTrace:
    """UCB baseline: always evaluate the unevaluated lattice point with top UCB.

    No region shrinking. The candidate lattice is the deepest level within
    the enumeration cap; ties resolve to the lexicographically first point.
    Stops when the budget is spent or the lattice is exhausted.
    """
    level = enumeration_level(grid)
    pts = grid.points(level)
    lattice_size = grid.num_points(grid.max_level)
    post = gp.fit(spec, gp.ObservationSet.empty(grid.dim), config.jitter)
    available = np.ones(len(pts), dtype=bool)
    points: list[np.ndarray] = []
    values: list[float] = []
    for t in range(1, min(config.max_evaluations, len(pts)) + 1):
        root = math.sqrt(max(beta(t, lattice_size, config.alpha), 0.0))
        cand = pts[available]
        mus, sigmas = post.predict_batch(cand)
        local = int(np.argmax(mus + root * sigmas))
        pick = int(np.flatnonzero(available)[local])
        x = pts[pick]
        fx = float(objective(x))
        post = post.extend(x, fx)
        available[pick] = False
        points.append(x.copy())
        values.append(fx)
    return RunTrace(np.asarray(points), np.asarray(values), [], truncated=False)


def random_run(objective, grid: DyadicGrid, config: RunConfig) -> RunTrace:
    """Uniform without-replacement baseline over the enumerated lattice."""
    level = enumeration_level(grid)
    pts = grid.points(level)
    order = np.random.default_rng(config.seed).permutation(len(pts))
    take = order[: min(config.max_evaluations, len(pts))]
    chosen = pts[take]
    values = np.array([float(objective(p)) for p in chosen])
    return RunTrace(chosen.copy(), values, [], truncated=False)


@dataclass(frozen=True)
class RegretSeries:
    """Incumbent simple regret and running cumulative regret of a trace."""

    simple: np.ndarray
    cumulative: np.ndarray
    dim: int


def regret_series(trace: RunTrace, objective) -> RegretSeries:
    """Regret against the objective's known maximum.

    Simple regret is computed on the incumbent (nonincreasing); cumulative
    regret sums the raw per-step gaps (nondecreasing).
    """
    if objective.known_max_value is None:
        raise ValueError("objective has no known maximum; regret is undefined")
    fstar = float(objective.known_max_value)
    simple = fstar - trace.incumbent_values
    cumulative = np.cumsum(fstar - trace.values)
    return RegretSeries(simple, cumulative, trace.points.shape[1])


@dataclass(frozen=True)
class RateFit:
    """Fit of regret ~ amplitude * exp(-rate * t / (ln t)^(d/4))."""

    amplitude: float
    rate: float
    r_squared: float


def fit_rate(series: RegretSeries) -> RateFit:
    """Least-squares fit of log regret against t / (ln t)^(d/4).

    Entries with zero regret (exactly optimal incumbent) and t < 3 are
    dropped; fewer than 10 usable entries raises InsufficientDataError.
    """
    r = series.simple
    t = np.arange(1, len(r) + 1, dtype=float)
    usable = (r > 0.0) & (t >= 3.0)
    n = int(usable.sum())
    if n < 10:
        raise InsufficientDataError(
            f"only {n} usable regret entries; at least 10 required"
        )
    tt = t[usable]
    x = tt / np.log(tt) ** (series.dim / 4.0)
    y = np.log(r[usable])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (intercept + slope * x)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((resid**2).sum()) / ss_tot
    return RateFit(float(np.exp(intercept)), float(-slope), r2)


@dataclass(frozen=True)
class VarianceScaling:
    """Worst posterior deviation per cover level, with the log-log slope."""

    levels: tuple[int, ...]
    deltas: np.ndarray
    sup_sigmas: np.ndarray
    slope: float


def variance_bound_experiment(spec: KernelSpec, lower, upper, levels,
                              jitter: float | None = None,
                              probe_refine: int = 2) -> VarianceScaling:
    """Fit full-domain covers level by level; record the worst deviation.

    Deviations are probed on a lattice `probe_refine` levels finer than each
    cover. Stops early if a cover becomes numerically unfactorizable and
    reports only the levels that completed. The slope regresses
    ln(sup sigma) on ln(delta); resolution-squared scaling shows as ~2.
    """
    levels = [int(v) for v in levels]
    if levels != sorted(levels):
        raise ValueError("levels must be ascending")
    grid = DyadicGrid(lower, upper, 0, max(max(levels) + probe_refine, 1))
    done: list[int] = []
    deltas: list[float] = []
    sups: list[float] = []
    for lev in levels:
        pts = grid.points(lev)
        try:
            # deviations depend only on the points; values are irrelevant
            post = gp.fit(spec, gp.ObservationSet(pts, np.zeros(len(pts))), jitter)
        except IllConditionedError:
            break
        probes = grid.points(lev + probe_refine)
        _, sigmas = post.predict_batch(probes)
        done.append(lev)
        deltas.append(grid.delta(lev))
        sups.append(float(sigmas.max()))
    if len(done) >= 2:
        slope = float(np.polyfit(np.log(deltas), np.log(sups), 1)[0])
    else:
        slope = float("nan")
    return VarianceScaling(tuple(done), np.asarray(deltas), np.asarray(sups), slope)


@dataclass(frozen=True)
class EnvelopeReport:
    """Per-seed worst envelope ratios and argmax-retention flags."""

    alpha: float
    seeds: tuple[int, ...]
    max_ratios: np.ndarray
    retained: np.ndarray

    @property
    def coverage(self) -> float:
        """Fraction of runs whose envelope held at every shrink candidate."""
        return float(np.mean(self.max_ratios <= 1.0))

    def coverage_at(self, beta_scale: float) -> float:
        """Coverage had beta been scaled by `beta_scale` on the same runs."""
        return float(np.mean(self.max_ratios <= math.sqrt(beta_scale)))

    @property
    def retention(self) -> float:
        """Fraction of runs keeping the true argmax in the region throughout."""
        return float(np.mean(self.retained))


class _EnvelopeAudit:
    """Run observer accumulating the worst envelope ratio and retention flag."""

    _INTERP_TOL = 1e-8

    def __init__(self, objective, grid: DyadicGrid):
        self.objective = objective
        self.grid = grid
        self.max_ratio = 0.0
        self.retained = True

    def __call__(self, event: ShrinkEvent) -> None:
        mus, sigmas = event.posterior.predict_batch(event.candidates)
        f = np.array([self.objective(c) for c in event.candidates])
        resid = np.abs(f - mus)
        env = math.sqrt(max(event.beta, 0.0)) * sigmas
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(
                env > 0.0,
                resid / env,
                np.where(resid <= self._INTERP_TOL, 0.0, np.inf),
            )
        self.max_ratio = max(self.max_ratio, float(ratio.max()))
        xstar = self.objective.known_max_point
        if xstar is not None and not event.region_after.contains(
            xstar, self.grid.lower, self.grid.upper
        ):
            self.retained = False


def envelope_experiment(spec: KernelSpec, grid: DyadicGrid, level: int,
                        alpha: float, n_seeds: int, budget: int = 200,
                        jitter: float | None = None,
                        first_seed: int = 0) -> EnvelopeReport:
    """Draw prior-sample objectives, run the optimizer and audit the envelope.

    For every shrink of every run, compares |f - mu| with sqrt(beta) * sigma
    at all shrink candidates and tracks whether the table argmax stays inside
    the shrunken region. The report's coverage is the fraction of seeds with
    zero violations.
    """
    if n_seeds < 100:
        raise ValueError("n_seeds must be at least 100 for a stable estimate")
    ratios = np.zeros(n_seeds)
    kept_ok = np.zeros(n_seeds, dtype=bool)
    seeds = tuple(range(first_seed, first_seed + n_seeds))
    for i, seed in enumerate(seeds):
        objective = gp_sample_objective(spec, grid, level, seed, jitter)
        audit = _EnvelopeAudit(objective, grid)
        config = RunConfig(alpha=alpha, max_evaluations=budget, jitter=jitter,
                           seed=seed)
        run(objective, spec, grid, config, observer=audit)
        ratios[i] = audit.max_ratio
        kept_ok[i] = audit.retained
    return EnvelopeReport(alpha, seeds, ratios, kept_ok)
