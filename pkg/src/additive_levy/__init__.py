"""Fourier-integral criteria for additive Lévy processes, with Monte Carlo cross-checks."""
from .exponent import (
    AdditiveProcess,
    InvalidExponentError,
    LevyExponent,
    UsageError,
    brownian,
    conjugate,
    custom,
    drift,
    eval_exponent,
    isotropic_stable,
    pair_difference,
    re_resolvent,
    stable_subordinator,
    zero_exponent,
)
from .integrand import (
    MultipointChain,
    MultipointDimension,
    QLambdaR,
    RangeProduct,
    RieszWeighted,
    SingularPointError,
    SubordinatorIntersection,
    conjugate_permutation_sum,
    cyclic_transform,
    inverse_cyclic_transform,
    q_lambda_r,
    sector_ratio,
    signed_family_sum,
)
from .quadrature import (
    CONVERGES,
    CRITICAL,
    DIVERGES,
    ConvergenceVerdict,
    QuadratureOptions,
    ShellTable,
    decide_convergence,
    shell_table,
)
from .analysis import (
    DimensionResult,
    expected_range_scale,
    hausdorff_dimension_range,
    multiple_points_exist,
    multipoint_dimension,
    range_positivity,
    stable_oracle,
    subordinator_intersection,
)
from .simulate import (
    SimulationConfig,
    box_counting_dimension,
    occupation_fourier,
    range_volume,
    sample_increments,
)
from .config import ConfigError, load_config, parse_config

__version__ = "0.1.0"
