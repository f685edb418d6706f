"""Dyadic lattices over axis-aligned boxes, and ball-shaped search regions."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError, GridTooLargeError, ResolutionExhausted

DEFAULT_MAX_LEVEL = 24
_ENUM_CAP = 2_000_000


@dataclass(frozen=True)
class RegionBall:
    """Closed Euclidean ball; membership additionally clips to a domain box."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float)
        if c.ndim != 1:
            raise ValueError("center must be a 1-d point")
        if not self.radius >= 0.0:
            raise ValueError("radius must be nonnegative")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "radius", float(self.radius))

    def contains(self, x, lower, upper) -> bool:
        """True when x lies in the ball and inside the [lower, upper] box."""
        p = np.asarray(x, dtype=float)
        if np.any(p < lower) or np.any(p > upper):
            return False
        return float(np.sqrt(((p - self.center) ** 2).sum())) <= self.radius


@dataclass(frozen=True)
class DyadicGrid:
    """Nested lattice of dyadic points over the box [lower, upper].

    Level-``l`` points are ``lower + k * (upper - lower) / 2^l`` for integer
    multi-indices ``k`` in ``[0, 2^l]^dim``; every point of level ``l`` is a
    point of level ``l + 1``, bitwise, so refinement never moves a sample.
    """

    lower: np.ndarray
    upper: np.ndarray
    level: int = 0
    max_level: int = DEFAULT_MAX_LEVEL

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float)
        up = np.asarray(self.upper, dtype=float)
        if lo.ndim != 1 or lo.shape != up.shape:
            raise ValueError("lower and upper must be 1-d arrays of equal shape")
        if not np.all(lo < up):
            raise ValueError("lower must be strictly below upper componentwise")
        if self.max_level < 1:
            raise ValueError("max_level must be at least 1")
        if not 0 <= self.level <= self.max_level:
            raise ValueError("level must lie in [0, max_level]")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def spacing(self, level: int | None = None) -> np.ndarray:
        """Per-axis cell edge length at the given (default current) level."""
        lev = self.level if level is None else level
        return (self.upper - self.lower) / float(2**lev)

    def delta(self, level: int | None = None) -> float:
        """Cell diagonal at the given (default current) level.

        Exactly halves for each level increment (division by a power of two).
        """
        lev = self.level if level is None else level
        return float(np.linalg.norm(self.upper - self.lower)) / float(2**lev)

    def num_points(self, level: int | None = None) -> int:
        lev = self.level if level is None else level
        return (2**lev + 1) ** self.dim

    def points(self, level: int | None = None) -> np.ndarray:
        """All lattice points at the level, in lexicographic order."""
        lev = self.level if level is None else level
        if not 0 <= lev <= self.max_level:
            raise ValueError("level must lie in [0, max_level]")
        if self.num_points(lev) > _ENUM_CAP:
            raise GridTooLargeError(
                f"{self.num_points(lev)} lattice points exceed the "
                f"{_ENUM_CAP} enumeration cap"
            )
        h = self.spacing(lev)
        axes = [
            self.lower[i] + np.arange(2**lev + 1) * h[i] for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def refine(self) -> "DyadicGrid":
        """One level finer; the coarse points are a subset of the fine points."""
        if self.level >= self.max_level:
            raise ResolutionExhausted(
                f"grid already at its maximum level {self.max_level}"
            )
        return replace(self, level=self.level + 1)

    def cover_window_size(self, region: RegionBall, level: int | None = None) -> int:
        """Upper bound on the cover enumeration size at a level, in O(dim) time."""
        lev = self.level if level is None else level
        c = np.asarray(region.center, dtype=float)
        outside = np.maximum(self.lower - c, 0.0) + np.maximum(c - self.upper, 0.0)
        if float(np.sqrt((outside**2).sum())) > region.radius:
            return 0
        reach = region.radius + self.delta(lev)
        h = self.spacing(lev)
        k_lo = np.maximum(np.floor((c - reach - self.lower) / h).astype(int) - 1, 0)
        k_hi = np.minimum(np.ceil((c + reach - self.lower) / h).astype(int) + 1, 2**lev)
        if np.any(k_lo > k_hi):
            return 0
        return int(np.prod(k_hi - k_lo + 1))

    def cover_points(self, region: RegionBall) -> np.ndarray:
        """Current-level lattice points within the region dilated by one cell diagonal.

        Every point of the (ball-and-box) region then lies in a cell whose
        corners are all returned, so it is within ``delta()`` of a returned
        point. A region disjoint from the box yields an empty array. Requires
        ``level >= 1``.
        """
        if self.level < 1:
            raise ValueError("cover_points requires level >= 1")
        c = np.asarray(region.center, dtype=float)
        if c.shape != (self.dim,):
            raise DimensionError(
                f"region center has shape {c.shape}, expected ({self.dim},)"
            )
        outside = np.maximum(self.lower - c, 0.0) + np.maximum(c - self.upper, 0.0)
        if float(np.sqrt((outside**2).sum())) > region.radius:
            return np.zeros((0, self.dim))
        reach = region.radius + self.delta()
        h = self.spacing()
        n_cells = 2**self.level
        # index window is a superset (padded by one cell); the exact distance
        # filter below decides membership
        k_lo = np.maximum(np.floor((c - reach - self.lower) / h).astype(int) - 1, 0)
        k_hi = np.minimum(np.ceil((c + reach - self.lower) / h).astype(int) + 1, n_cells)
        if np.any(k_lo > k_hi):
            return np.zeros((0, self.dim))
        if int(np.prod(k_hi - k_lo + 1)) > _ENUM_CAP:
            raise GridTooLargeError("cover enumeration exceeds the size cap")
        axes = [
            self.lower[i] + np.arange(k_lo[i], k_hi[i] + 1) * h[i]
            for i in range(self.dim)
        ]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        dist = np.sqrt(((pts - c) ** 2).sum(axis=1))
        return pts[dist <= reach]

    def check_divisibility(self) -> bool:
        """Verify the generated points sit exactly on the power-of-two index lattice.

        True by construction; returns False only if point generation has been
        tampered with (e.g. an origin offset), in which case doubling a point
        would leave the lattice.
        """
        pts = self.points()
        span = self.upper - self.lower
        idx = (pts - self.lower) / span * float(2**self.level)
        k = np.rint(idx)
        if float(np.max(np.abs(idx - k))) > 1e-9:
            return False
        if np.any(k < 0) or np.any(k > 2**self.level):
            return False
        recon = self.lower + k * (span / float(2**self.level))
        tol = 1e-12 * float(np.max(np.abs(span)) + np.max(np.abs(self.lower)))
        return bool(np.max(np.abs(recon - pts)) <= tol)

    def check_fineness(self, rho0: float) -> bool:
        """True when the finest cell diagonal fits inside a ball of radius rho0."""
        if not rho0 > 0.0:
            raise ValueError("rho0 must be strictly positive")
        return self.delta(self.max_level) < rho0
