"""Walk-on-half-spaces Monte Carlo for isotropic stable first passage."""

from wohs.kernels import (
    Barrier,
    Direction,
    LadderKind,
    Point,
    StableParams,
    ball_hitting_density,
    cauchy_density,
    double_density,
    green_halfspace,
    jump_density,
    ladder_potentials,
    overshoot_density,
    overshoot_density_conditioned,
    pcr_density,
    triple_density,
)
from wohs.numerics import (
    ConvergenceError,
    DomainError,
    QuadSpec,
    TabulatedCdf,
    adaptive_quad,
    build_inverse_cdf,
    gamma_fn,
    incomplete_j,
    stable_constants,
)
from wohs.samplers import (
    ConditionedSamplerCache,
    RngStream,
    beta_sample,
    mv_cauchy,
    overshoot_first_coord,
    overshoot_first_coord_conditioned,
    overshoot_point,
)
from wohs.walk_engine import (
    CrossingEvent,
    HittingEstimate,
    Measure,
    Mode,
    WalkConfig,
    WalkResult,
    WalkStatus,
    batch_walk,
    hitting_probability_estimate,
    walk_slab,
)

__version__ = "0.1.0"
