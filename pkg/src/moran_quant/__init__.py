"""Moran-set cylinder measures, stopping-time antichains, and optimal
quantization diagnostics."""

__version__ = "0.1.0"

from .antichain import (
    ConstantsLedger,
    LambdaAntichain,
    NeighborStructure,
    build_lambda,
    comparability_check,
    constants_ledger,
    covering_M,
    growth_check,
    neighbor_sets,
    stopping_base,
)
from .coding import (
    Alphabet,
    Word,
    concat,
    is_maximal_antichain,
    parse_word,
    relation,
    truncate,
    word_str,
)
from .errors import (
    BudgetError,
    ConfigError,
    InvalidWordError,
    MoranQuantError,
    NoWitnessError,
    PreconditionError,
)
from .gersho import (
    cell_bound_check,
    coverage_check,
    energy_sum_check,
    incidence_check,
    kappa_stats,
    ratio_table,
    voronoi_cells,
)
from .geometry import (
    Cell,
    LevelSpec,
    MoranSystem,
    SeparationWitness,
    binary_full,
    cantor,
    carpet4,
    contraction_ratio,
    demo_periodic,
    interior_witness,
    periodic,
    realize,
    system_bounds,
    verify_construction,
)
from .measure import (
    CylinderMeasure,
    DiscretizedMeasure,
    ball_mass,
    default_radii,
    discretize,
    doubling_profile,
    doubling_stability,
    energy,
    frostman_check,
    frostman_exponent,
    geometric_radii,
    mass,
    rescale_conditional,
)
from .quantizer import (
    Codebook,
    ErrorCurve,
    LloydConfig,
    brute_force,
    distortion,
    error_curve,
    lloyd,
    self_similar_variance,
)
