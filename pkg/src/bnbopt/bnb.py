"""Branch-and-bound optimizer: densify the lattice, then shrink the region."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist

from . import gp
from .errors import DimensionError, ResolutionExhausted
from .kernels import KernelSpec
from .lattice import DyadicGrid, RegionBall


@dataclass(frozen=True)
class RunConfig:
    """Knobs for a single optimizer run.

    ``max_level=None`` keeps the grid's own refinement cap. ``half_radius``
    halves the enclosing-ball radius after each shrink (experimental; the
    default keeps the full farthest-pair distance).
    """

    alpha: float = 0.05
    max_evaluations: int = 200
    jitter: float | None = None
    seed: int = 0
    max_level: int | None = None
    half_radius: bool = False

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be at least 1")


@dataclass(frozen=True)
class IterationRecord:
    """Bookkeeping for one densify-then-shrink iteration."""

    iteration: int
    level: int
    delta: float
    new_points_count: int
    T_after: int
    beta_T: float
    sup_lcb: float
    region_before: RegionBall
    region_after: RegionBall
    kept_count: int


@dataclass(frozen=True)
class ShrinkEvent:
    """Snapshot handed to a run observer after each shrink."""

    posterior: gp.GPPosterior
    beta: float
    candidates: np.ndarray
    kept: np.ndarray
    region_before: RegionBall
    region_after: RegionBall
    level: int
    T: int


@dataclass
class RunTrace:
    """Complete record of one run: evaluations in order plus shrink bookkeeping."""

    points: np.ndarray
    values: np.ndarray
    iterations: list[IterationRecord]
    truncated: bool = False
    _best_index: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if pts.ndim != 2 or vals.shape != (pts.shape[0],):
            raise ValueError("points must be (T, dim) with matching values")
        self.points = pts
        self.values = vals
        best = np.zeros(len(vals), dtype=int)
        bi = 0
        for i in range(len(vals)):
            if vals[i] > vals[bi]:
                bi = i
            best[i] = bi
        self._best_index = best

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def evaluations(self) -> list[tuple[int, np.ndarray, float]]:
        """(t, point, value) triples with t running from 1."""
        return [
            (i + 1, self.points[i].copy(), float(self.values[i]))
            for i in range(len(self))
        ]

    @property
    def incumbent_values(self) -> np.ndarray:
        """Best value seen up to each step (running maximum)."""
        return self.values[self._best_index]

    def incumbent(self, t: int) -> tuple[np.ndarray, float]:
        """Best (point, value) among evaluations 1..t; ties go to the earliest."""
        if not 1 <= t <= len(self):
            raise IndexError(f"t must lie in [1, {len(self)}], got {t}")
        i = int(self._best_index[t - 1])
        return self.points[i].copy(), float(self.values[i])


def beta(T: int, lattice_size: float, alpha: float) -> float:
    """Confidence multiplier 2 * ln(lattice_size * T^2 / alpha).

    ``lattice_size`` is the number of lattice points at the finest level of
    the run's grid, fixed for the whole run.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if not lattice_size > 0:
        raise ValueError("lattice_size must be positive")
    return 2.0 * math.log(float(lattice_size) * float(T) * float(T) / alpha)


def initial_region(grid: DyadicGrid) -> RegionBall:
    """Circumscribed ball of the domain box."""
    center = 0.5 * (grid.lower + grid.upper)
    return RegionBall(center, 0.5 * float(np.linalg.norm(grid.upper - grid.lower)))


_PROBE_CAP = 4096


def _probe_level(grid: DyadicGrid, region: RegionBall, cap: int = _PROBE_CAP) -> int:
    """Deepest level whose region cover stays within `cap` points.

    Shrink candidates live on this lattice, never coarser than one level
    past the sampled one. As the region contracts, the probe level reaches
    the finest lattice, where the surviving set is exactly the fine lattice
    points whose UCB still clears the best LCB.
    """
    floor_level = min(grid.level + 1, grid.max_level)
    for lev in range(grid.max_level, floor_level, -1):
        if grid.cover_window_size(region, lev) <= cap:
            return lev
    return floor_level


def _evaluate_cover(post, cover, objective, max_new):
    """Evaluate unseen cover points in order; True flag = stopped at the cap."""
    seen = {tuple(p) for p in post.obs.points}
    new = []
    for p in cover:
        key = tuple(p)
        if key in seen:
            continue
        if max_new is not None and len(new) >= max_new:
            return post, new, True
        value = float(objective(p))
        post = post.extend(p, value)
        seen.add(key)
        new.append((p.copy(), value))
    return post, new, False


def densify(post: gp.GPPosterior, region: RegionBall, grid: DyadicGrid,
            objective, max_new: int | None = None):
    """Evaluate every not-yet-observed cover point of the region, in lattice order.

    Returns the extended posterior and the list of (point, value) pairs
    added; idempotent at a fixed level and region. ``max_new`` caps the
    number of fresh evaluations.
    """
    cover = grid.cover_points(region)
    post, new, _ = _evaluate_cover(post, cover, objective, max_new)
    return post, new


def shrink(post: gp.GPPosterior, beta_value: float, candidates,
           half_radius: bool = False):
    """Keep candidates whose UCB clears the best LCB; enclose them in a ball.

    The comparison is non-strict (ucb >= sup lcb) so the LCB argmax itself
    always survives and ``kept`` is never empty. The ball is centred midway
    between the farthest kept pair with radius equal to their full distance
    (halved when ``half_radius``). Returns (kept, new_region, sup_lcb).
    """
    cands = np.asarray(candidates, dtype=float)
    if cands.ndim != 2 or cands.shape[0] == 0:
        raise ValueError("candidates must be a nonempty (n, dim) array")
    if beta_value < 0.0:
        raise ValueError("beta must be nonnegative")
    root = math.sqrt(beta_value)
    mus, sigmas = post.predict_batch(cands)
    ucbs = mus + root * sigmas
    lcbs = mus - root * sigmas
    sup_lcb = float(lcbs.max())
    kept = cands[ucbs >= sup_lcb]
    if kept.shape[0] == 1:
        return kept, RegionBall(kept[0].copy(), 0.0), sup_lcb
    dists = cdist(kept, kept)
    i, j = np.unravel_index(int(np.argmax(dists)), dists.shape)
    radius = float(dists[i, j])
    if half_radius:
        radius *= 0.5
    return kept, RegionBall(0.5 * (kept[i] + kept[j]), radius), sup_lcb


def run(objective, spec: KernelSpec, grid: DyadicGrid, config: RunConfig,
        observer: Callable[[ShrinkEvent], None] | None = None) -> RunTrace:
    """Alternate lattice refinement, dense sampling and region shrinking.

    Terminates when the region no longer meets the lattice, its radius hits
    zero, the evaluation budget is spent (truncated if that happens mid
    densify), or the lattice cannot be refined further. Deterministic for a
    fixed configuration.
    """
    if spec.dim != grid.dim:
        raise DimensionError(
            f"kernel dimension {spec.dim} != grid dimension {grid.dim}"
        )
    obj_lower = getattr(objective, "lower", None)
    if obj_lower is not None and not (
        np.allclose(obj_lower, grid.lower)
        and np.allclose(objective.upper, grid.upper)
    ):
        raise ValueError("objective domain does not match the grid domain")
    if config.max_level is not None and config.max_level != grid.max_level:
        grid = replace(grid, max_level=config.max_level)
    lattice_size = grid.num_points(grid.max_level)
    post = gp.fit(spec, gp.ObservationSet.empty(grid.dim), config.jitter)
    region = initial_region(grid)
    points: list[np.ndarray] = []
    values: list[float] = []
    iterations: list[IterationRecord] = []
    truncated = False
    iteration = 0

    while len(values) < config.max_evaluations:
        try:
            grid = grid.refine()
        except ResolutionExhausted:
            break
        iteration += 1
        cover = grid.cover_points(region)
        if cover.shape[0] == 0:
            break
        remaining = config.max_evaluations - len(values)
        post, new, hit_cap = _evaluate_cover(post, cover, objective, remaining)
        for p, fx in new:
            points.append(p)
            values.append(fx)
        if hit_cap:
            truncated = True
            break
        T = len(values)
        beta_T = beta(T, lattice_size, config.alpha)
        # Probe candidates on a finer lattice than the samples: between
        # samples the uncertainty still admits the maximum, so the surviving
        # set reflects the confidence bounds there, not just at the sampled
        # points. Earlier evaluations still in the region are unioned in
        # (nesting makes them a subset of the probe cover in practice).
        probe = replace(grid, level=_probe_level(grid, region))
        probe_cover = probe.cover_points(region)
        if probe_cover.shape[0] == 0:
            break
        probe_keys = {tuple(p) for p in probe_cover}
        extra = [
            p
            for p in post.obs.points
            if tuple(p) not in probe_keys
            and region.contains(p, grid.lower, grid.upper)
        ]
        candidates = np.vstack([probe_cover, extra]) if extra else probe_cover
        kept, new_region, sup_lcb = shrink(
            post, beta_T, candidates, half_radius=config.half_radius
        )
        iterations.append(
            IterationRecord(
                iteration=iteration,
                level=grid.level,
                delta=grid.delta(),
                new_points_count=len(new),
                T_after=T,
                beta_T=beta_T,
                sup_lcb=sup_lcb,
                region_before=region,
                region_after=new_region,
                kept_count=int(kept.shape[0]),
            )
        )
        if observer is not None:
            observer(
                ShrinkEvent(post, beta_T, candidates, kept, region, new_region,
                            grid.level, T)
            )
        region = new_region
        if region.radius == 0.0:
            # the ball pinpoints a single lattice point: sample it before
            # stopping so the conclusion is actually observed
            key = tuple(region.center)
            if (
                len(values) < config.max_evaluations
                and key not in {tuple(p) for p in post.obs.points}
            ):
                fx = float(objective(region.center))
                post = post.extend(region.center, fx)
                points.append(region.center.copy())
                values.append(fx)
            break

    pts = np.asarray(points) if points else np.zeros((0, grid.dim))
    return RunTrace(pts, np.asarray(values), iterations, truncated)
