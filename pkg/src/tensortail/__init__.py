"""Einstein-product tensor algebra, spectral tail bounds and their
Monte Carlo verification."""

from .tensor_core import (
    DenseTensor,
    HermitianTensor,
    Shape,
    ShapeMismatchError,
    add,
    conjugate_transpose,
    einstein_product,
    frobenius_norm,
    hadamard_product,
    hermitian,
    identity,
    inner_product,
    load_tensor,
    refold,
    save_tensor,
    scale,
    tensor,
    tensor_from_json,
    tensor_to_json,
    trace,
    unfold,
    zero,
)
from .spectral import (
    PsdVerdict,
    Spectrum,
    hermitian_dilation,
    hermitian_eig,
    lambda_max,
    lambda_min,
    perspective_map,
    psd_compare,
    relative_entropy,
    spectral_norm,
    tensor_exp,
    tensor_function,
    tensor_log,
    tensor_power,
)
from .bounds import (
    BoundParams,
    BoundValue,
    azuma_mcdiarmid_bound,
    bernstein_bounded,
    bernstein_subexponential,
    binary_divergence,
    chernoff_expectation_bounds,
    chernoff_i_lower,
    chernoff_i_upper,
    chernoff_ii_lower,
    chernoff_ii_upper,
    expectation_norm_sandwich,
    gauss_integral,
    gaussian_series_bound,
    master_bound_numeric,
    nonuniform_gaussian_sigma,
    rectangular_series_params,
    subexp_expectation_upper,
)
from .ensembles import (
    EnsembleSpec,
    RngState,
    compute_params,
    mcdiarmid_instance,
    random_hermitian,
    random_pd,
    sample_azuma_sequence,
    sample_centered_bounded,
    sample_hadamard_gaussian,
    sample_psd_bounded,
    sample_series,
    sample_subexponential,
)
from .montecarlo import (
    TailEstimate,
    TailVerdict,
    clopper_pearson_upper,
    empirical_cumulants,
    estimate_expectation,
    estimate_tail,
    theta_grid,
    verify,
)

__version__ = "0.1.0"
