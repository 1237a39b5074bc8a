"""Exact simulation of classical-classical-quantum multiple access channels,
transmission codes and simultaneous identification codes built from them."""

from .channel import (
    BlockChannel,
    CcqChannel,
    ExplicitBlockChannel,
    MemorylessBlockChannel,
    classical_channel_embedding,
    depolarizing_channel,
    evaluate_block,
    noiseless_channel,
    random_channel,
)
from .codes import (
    DeterministicCode,
    ErrorReport,
    IdCode,
    SimultaneousIdCode,
    StochasticEncoder,
    StochasticTransmissionCode,
    avg_error,
    id_error_first,
    id_error_second,
    max_error,
    verify_simultaneous,
)
from .construction import (
    RatePoint,
    SubsetFamily,
    build_subset_family,
    construct_sim_id_code,
    derandomize_literal,
    derandomize_pointmass,
    family_overlap,
    growth_check,
    id_rate_pair,
    lober_bound_log2,
    lober_condition,
    mix_encoders,
)
from .errors import (
    CcqError,
    DimensionLimitError,
    NumericalError,
    ParameterError,
    ShapeError,
    UndefinedQuantityError,
    ValidationError,
)
from .harness import ExperimentConfig, generate_random_code, run_experiment
from .linalg import Povm, check_density, hermitian_eig, inv_sqrt_psd, kron, validate_povm
from .measurement import build_square_root_measurement

__version__ = "0.1.0"
