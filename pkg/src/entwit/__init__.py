"""Entanglement witnesses for composite quantum measurements, with
swap-steering (one-sided device-independent) and star-network
(device-independent) certification pipelines at desk scale."""

from .linalg import (
    Operator,
    PureVector,
    hermitian_eig,
    identity,
    is_psd,
    partial_trace,
    partial_transpose,
    permute_factors,
    tensor_many,
    tensor_product,
    tensor_vector,
    trace_inner,
)
from .objects import (
    Measurement,
    TomographicBasis,
    bell_basis,
    bell_states,
    born,
    computational_basis,
    max_entangled,
    mu_states,
    tomographic_basis,
)
from .sampling import (
    Seed,
    minimize_over_products,
    random_density_matrix,
    random_product_state,
    random_pure_state,
    random_unitary,
    refine_product_state,
)
from .separability import (
    ElementVerdict,
    MeasurementVerdict,
    classify_element,
    classify_measurement,
    ppt_check,
)
from .witness import (
    Witness,
    attach_beta,
    beta_coefficients,
    builtin_wbm,
    builtin_wbm_prime,
    min_over_product_states,
    verify_witness,
    wbm_prime_search,
    witness_from_element,
)
from .steering import (
    CorrelationTable,
    SohsModel,
    SohsSource,
    alice_effect,
    functional_S,
    quantum_correlations,
    quantum_value_closed_form,
    sohs_correlations,
    steering_sweep,
    steering_threshold,
    steering_witness_for,
    white_noise_source,
)
from .star import (
    BellFunctional,
    DiReport,
    OptimizerBudget,
    StarLocalModel,
    StarTable,
    chsh,
    di_detect,
    functional_E,
    lhv_bound,
    local_model_correlations,
    mermin,
    optimize_bell_value,
    star_quantum_correlations,
)

__version__ = "0.1.0"
