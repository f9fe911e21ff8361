"""Finite-dimensional rough-path numerics.

Level-2 rough paths with the consistency relation built into the data
layout, controlled paths and their calculus, compensated-sum rough
integrals, flat and mild (semigroup) differential-equation solvers, and
enhanced Brownian motion.
"""

__version__ = "0.1.0"

from .controlled import (
    ControlledIntegrand,
    ControlledPath,
    FunctionModel,
    compose_bilinear,
    compose_function,
    compose_linear,
    controlled_norms,
    controlled_seminorm,
    pair,
    project,
    remainder,
    validate_function_model,
)
from .errors import (
    ChenDefectError,
    DataError,
    GridError,
    NumericalBlowup,
    RoughPathsError,
    ShapeError,
)
from .grids import (
    SampledPath,
    TimeGrid,
    holder_seminorm,
    increment,
    localized_seminorm,
    read_path_csv,
    two_param_holder_seminorm,
    write_path_csv,
)
from .integrate import (
    EXACT,
    Partition,
    compensated_sum,
    drift_integral,
    drift_integral_path,
    expansion_defect,
    integral_as_controlled,
    rough_integral,
    sewing_rate_diagnostic,
)
from .noise import NoiseConfig, enhanced_bm, ito_enhance, sample_bm, strat_enhance, strat_shift
from .rde import (
    RDEProblem,
    RDESolution,
    apriori_bound_check,
    make_preset_problem,
    residual_check,
    solve_picard,
    solve_step_scheme,
)
from .rough import (
    RawLevel2,
    RoughPath,
    bracket_one_param,
    bracket_two_param,
    chen_defect,
    is_weakly_geometric,
    lift_piecewise_linear,
    max_chen_defect,
    perturbed_lift,
    rough_metric,
    rough_norm,
    rough_seminorm,
    second_level,
)
from .semigroup import (
    MatrixSemigroup,
    RPDEProblem,
    drift_convolution,
    mild_residual_check,
    rough_convolution,
    semigroup_apply,
    solve_mild_picard,
    solve_mild_step,
)
from .tensor import anti, euclidean_norm, frobenius_norm, outer, sym
