"""Intrinsically Lipschitz sections of quotient maps: constants, slopes and their calculus."""

from .constants import (
    BASE_TO_MOVING,
    DEFAULT_TOL,
    MOVING_TO_BASE,
    ScaleSchedule,
    SlopeEstimate,
    Tolerance,
    asymptotic_slope_at,
    cone_contains,
    global_constant,
    is_lipschitz_wrt,
    min_constant_wrt,
    slope_at,
)
from .metric import MetricSpace, koranyi_distance, validate_metric
from .models import (
    GridSpec,
    make_abs_value_model,
    make_circle_model,
    make_explicit_model,
    make_heisenberg_model,
    make_linear_projection_model,
    make_rng,
    random_section,
)
from .quotient import fiber_distance, fiber_ratio_bound
from .sections import (
    GeneralizedMap,
    PreconditionError,
    Section,
    SectionError,
    WeightFunction,
    affine_combine,
    convex_combine,
    evaluate,
    pointwise_inverse,
    pointwise_max,
    pointwise_min,
    pointwise_product,
    pointwise_square,
    sup_norm,
    validate_section,
)
from .verify import (
    InequalityReport,
    check_affine,
    check_chain,
    check_convex_membership,
    check_equivalence_families,
    check_ils_set_convex,
    check_inverse,
    check_leibniz,
    check_maxmin,
    check_product,
    check_square,
    check_strong_leibniz,
    check_strong_product,
    check_vector_closure,
    run_document,
)

__version__ = "0.1.0"
