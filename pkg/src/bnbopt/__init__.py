"""Branch-and-bound Gaussian-process optimization for deterministic objectives."""

from .bench import (
    EnvelopeReport,
    Objective,
    RateFit,
    RegretSeries,
    VarianceScaling,
    boundary_max_objective,
    enumeration_level,
    envelope_experiment,
    fit_rate,
    gp_sample_objective,
    plain_ucb_run,
    quadratic_objective,
    random_run,
    regret_series,
    variance_bound_experiment,
)
from .bnb import (
    IterationRecord,
    RunConfig,
    RunTrace,
    ShrinkEvent,
    beta,
    densify,
    initial_region,
    run,
    shrink,
)
from .errors import (
    DimensionError,
    DuplicateObservationError,
    GridTooLargeError,
    IllConditionedError,
    InsufficientDataError,
    ResolutionExhausted,
)
from .gp import GPPosterior, ObservationSet, fit, sample_prior_on_grid
from .kernels import KernelSpec, cross, evaluate, gram, smoothness_constant
from .lattice import DyadicGrid, RegionBall

__version__ = "0.1.0"

__all__ = [
    "DimensionError",
    "DuplicateObservationError",
    "DyadicGrid",
    "EnvelopeReport",
    "GPPosterior",
    "GridTooLargeError",
    "IllConditionedError",
    "InsufficientDataError",
    "IterationRecord",
    "KernelSpec",
    "Objective",
    "ObservationSet",
    "RateFit",
    "RegionBall",
    "RegretSeries",
    "ResolutionExhausted",
    "RunConfig",
    "RunTrace",
    "ShrinkEvent",
    "VarianceScaling",
    "beta",
    "boundary_max_objective",
    "cross",
    "densify",
    "enumeration_level",
    "envelope_experiment",
    "evaluate",
    "fit",
    "fit_rate",
    "gp_sample_objective",
    "gram",
    "initial_region",
    "plain_ucb_run",
    "quadratic_objective",
    "random_run",
    "regret_series",
    "run",
    "sample_prior_on_grid",
    "shrink",
    "smoothness_constant",
    "variance_bound_experiment",
]
