"""Finite-dimensional laboratory for Lipschitz maps, random vector sums and type/cotype constants."""

__version__ = "0.1.0"

from .errors import CapacityError, ConstructionError, InputError, LipsumsError
from .spaces import INF, LinearMap, NormedSpace, VectorTuple, lp, min_gain, operator_norm, weighted_lp
from .randomsum import (
    GAUSSIAN,
    RADEMACHER,
    NoiseSpec,
    SumEstimate,
    first_absolute_moment,
    sample_noise,
    second_moment_exact_rademacher,
    second_moment_mc,
)
from .geometry import (
    Embedding,
    coordinate_embedding,
    embedded_basis,
    equiangular_embedding,
    random_embedding,
    separation_check,
)
from .lipfun import (
    LipschitzFn,
    McShaneScalar,
    NormFunctional,
    RayBump,
    SectorBump,
    finite_data_quotient,
    lip_constant_lower_mc,
    lip_constant_upper,
    sector_indicator,
)
from .constants import (
    ConstantEstimate,
    WitnessSearchConfig,
    cotype2_lower,
    growth_curve,
    rbound_lower,
    transfer_counterexample_search,
    transfer_ratio,
    type2_lower,
    type2_normalized_sup,
)
from .radonify import SimpleFunction, ell_norm, from_tuple, lift, lift_lipschitz_ratio

__all__ = [
    "__version__",
    "CapacityError",
    "ConstructionError",
    "InputError",
    "LipsumsError",
    "INF",
    "LinearMap",
    "NormedSpace",
    "VectorTuple",
    "lp",
    "min_gain",
    "operator_norm",
    "weighted_lp",
    "GAUSSIAN",
    "RADEMACHER",
    "NoiseSpec",
    "SumEstimate",
    "first_absolute_moment",
    "sample_noise",
    "second_moment_exact_rademacher",
    "second_moment_mc",
    "Embedding",
    "coordinate_embedding",
    "embedded_basis",
    "equiangular_embedding",
    "random_embedding",
    "separation_check",
    "LipschitzFn",
    "McShaneScalar",
    "NormFunctional",
    "RayBump",
    "SectorBump",
    "finite_data_quotient",
    "lip_constant_lower_mc",
    "lip_constant_upper",
    "sector_indicator",
    "ConstantEstimate",
    "WitnessSearchConfig",
    "cotype2_lower",
    "growth_curve",
    "rbound_lower",
    "transfer_counterexample_search",
    "transfer_ratio",
    "type2_lower",
    "type2_normalized_sup",
    "SimpleFunction",
    "ell_norm",
    "from_tuple",
    "lift",
    "lift_lipschitz_ratio",
]
