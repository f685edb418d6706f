"""Exact noise-free Gaussian-process posterior with confidence-bound surrogates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.spatial.distance import pdist

from . import kernels
from .errors import DuplicateObservationError, IllConditionedError

DEFAULT_JITTER_FACTOR = 1e-10
JITTER_CAP_FACTOR = 1e-6
DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class ObservationSet:
    """Observed (point, value) pairs; duplicate points are rejected."""

    points: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array of shape (n, dim)")
        if vals.shape != (pts.shape[0],):
            raise ValueError("points and values must have matching lengths")
        if pts.shape[0] > 1 and np.unique(pts, axis=0).shape[0] != pts.shape[0]:
            raise DuplicateObservationError(
                "observation points must be pairwise distinct"
            )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)

    @classmethod
    def empty(cls, dim: int) -> "ObservationSet":
        return cls(np.zeros((0, dim)), np.zeros(0))

    def __len__(self) -> int:
        return self.points.shape[0]


def _factor(K: np.ndarray, jitter: float, scale: float, points: np.ndarray):
    """Cholesky of K + jitter*I, escalating jitter tenfold up to the cap.

    Returns (lower_factor, jitter_actually_used).
    """
    cap = JITTER_CAP_FACTOR * scale
    j = float(jitter)
    n = K.shape[0]
    eye = np.eye(n)
    while True:
        try:
            return np.linalg.cholesky(K + j * eye), j
        except np.linalg.LinAlgError:
            nxt = j * 10.0 if j > 0.0 else 0.01 * DEFAULT_JITTER_FACTOR * scale
            if nxt > cap:
                dmin = float(pdist(points).min()) if n > 1 else math.inf
                raise IllConditionedError(
                    f"Gram matrix not factorizable at jitter {j:g} "
                    f"(cap {cap:g}); closest point pair distance {dmin:g}",
                    min_pair_distance=dmin,
                    jitter=j,
                ) from None
            j = nxt


@dataclass(frozen=True)
class GPPosterior:
    """Posterior after exact observations of a zero-mean GP.

    ``chol`` is the lower-triangular factor of gram(points) + jitter*I and
    ``weights`` solves (gram + jitter*I) w = values. Instances are immutable;
    :meth:`extend` returns a new posterior.
    """

    spec: kernels.KernelSpec
    obs: ObservationSet
    jitter: float
    chol: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.obs)

    def predict(self, x) -> tuple[float, float]:
        """Posterior mean and standard deviation at a single point."""
        p = kernels.as_point(self.spec, x)
        mus, sigmas = self.predict_batch(p[None, :])
        return float(mus[0]), float(sigmas[0])

    def predict_batch(self, xs) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized posterior mean/deviation over an (m, dim) array."""
        x = kernels.as_points(self.spec, xs)
        m = x.shape[0]
        if len(self) == 0:
            return np.zeros(m), np.full(m, math.sqrt(self.spec.output_scale))
        kx = kernels.pairwise(self.spec, self.obs.points, x)
        mus = kx.T @ self.weights
        v = solve_triangular(self.chol, kx, lower=True, check_finite=False)
        var = self.spec.output_scale - np.einsum("ij,ij->j", v, v)
        # negative roundoff clamped before the square root
        return mus, np.sqrt(np.clip(var, 0.0, None))

    def ucb(self, x, beta: float) -> float:
        """Upper confidence bound mu + sqrt(beta) * sigma."""
        if beta < 0.0:
            raise ValueError("beta must be nonnegative")
        mu, sigma = self.predict(x)
        return mu + math.sqrt(beta) * sigma

    def lcb(self, x, beta: float) -> float:
        """Lower confidence bound mu - sqrt(beta) * sigma."""
        if beta < 0.0:
            raise ValueError("beta must be nonnegative")
        mu, sigma = self.predict(x)
        return mu - math.sqrt(beta) * sigma

    def extend(self, x, fx: float) -> "GPPosterior":
        """Posterior with one extra observation, via a rank-one factor append.

        Costs O(n^2) instead of a full O(n^3) refit; falls back to a refit
        (with jitter escalation) if the appended pivot is not positive.
        """
        p = kernels.as_point(self.spec, x)
        n = len(self)
        if n:
            gap = float(np.sqrt(((self.obs.points - p) ** 2).sum(axis=1)).min())
            if gap < DUPLICATE_TOL:
                raise DuplicateObservationError(
                    f"point already observed (distance {gap:g})"
                )
        new_obs = ObservationSet(
            np.vstack([self.obs.points, p[None, :]]),
            np.append(self.obs.values, float(fx)),
        )
        if n == 0:
            return fit(self.spec, new_obs, self.jitter)
        k = kernels.cross(self.spec, self.obs.points, p)
        c = solve_triangular(self.chol, k, lower=True, check_finite=False)
        pivot = self.spec.output_scale + self.jitter - float(c @ c)
        if pivot <= 0.0:
            return fit(self.spec, new_obs, self.jitter)
        chol = np.zeros((n + 1, n + 1))
        chol[:n, :n] = self.chol
        chol[n, :n] = c
        chol[n, n] = math.sqrt(pivot)
        weights = cho_solve((chol, True), new_obs.values, check_finite=False)
        return GPPosterior(self.spec, new_obs, self.jitter, chol, weights)


def fit(spec: kernels.KernelSpec, obs: ObservationSet,
        jitter: float | None = None) -> GPPosterior:
    """Factor the jittered Gram matrix and solve for the mean weights.

    ``jitter=None`` uses 1e-10 * output_scale; a failed factorization
    escalates the jitter tenfold up to 1e-6 * output_scale before raising
    :class:`IllConditionedError`.
    """
    if jitter is None:
        jitter = DEFAULT_JITTER_FACTOR * spec.output_scale
    if jitter < 0.0:
        raise ValueError("jitter must be nonnegative")
    pts = kernels.as_points(spec, obs.points)
    if len(obs) == 0:
        return GPPosterior(spec, obs, float(jitter), np.zeros((0, 0)), np.zeros(0))
    K = kernels.gram(spec, pts)
    chol, used = _factor(K, jitter, spec.output_scale, pts)
    weights = cho_solve((chol, True), obs.values, check_finite=False)
    return GPPosterior(spec, obs, used, chol, weights)


def sample_prior_on_grid(spec: kernels.KernelSpec, grid_points, seed: int,
                         jitter: float | None = None) -> np.ndarray:
    """One zero-mean prior draw at the given points, deterministic per seed."""
    pts = kernels.as_points(spec, grid_points)
    if jitter is None:
        jitter = DEFAULT_JITTER_FACTOR * spec.output_scale
    if pts.shape[0] == 0:
        return np.zeros(0)
    if np.unique(pts, axis=0).shape[0] != pts.shape[0]:
        raise DuplicateObservationError("grid points must be distinct")
    K = kernels.gram(spec, pts)
    chol, _ = _factor(K, jitter, spec.output_scale, pts)
    z = np.random.default_rng(seed).standard_normal(pts.shape[0])
    return chol @ z
