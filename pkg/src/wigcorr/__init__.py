"""Numerical verification of characteristic-polynomial correlators of
Hermitian Wigner matrices: Monte Carlo estimators in signed-log arithmetic,
exact and asymptotic integral representations evaluated by quadrature, and
the closed-form sine-kernel limit they converge to.
"""

from .detmc import (
    Estimate,
    SpectralConfig,
    charpoly_product,
    estimate_accumulator,
    estimate_correlator,
    merge_estimates,
    signed_log_det,
)
from .ensembles import (
    EntryLaw,
    RngStream,
    empirical_moments,
    make_diag_law,
    make_entry_law,
    sample_wigner,
)
from .hciz import (
    haar_unitary,
    hciz_determinant_form,
    hciz_mc_average,
    ratio_constancy_report,
)
from .oracle import exact_correlator, kappa4_slope
from .saddle import (
    ContourSpec,
    QuadratureError,
    cauchy_det_identity_check,
    f2_contour_normalized,
    f2_exact_integral,
    phase_function,
    saddle_configuration_sum,
    saddle_data,
    self_normalized_ratio,
    verify_landscape,
)
from .signedlog import LogPhase, SignedLog, SignedLogAccumulator, signed_log_sum
from .theory import (
    SineKernelValue,
    TheoryParams,
    diagonal_normalizer,
    exponent_drift,
    f2_pair_asymptotic,
    limit_ratio,
    semicircle_density,
    sine_kernel_ratio,
    vandermonde,
)

__version__ = "0.1.0"

__all__ = [
    "Estimate",
    "SpectralConfig",
    "charpoly_product",
    "estimate_accumulator",
    "estimate_correlator",
    "merge_estimates",
    "signed_log_det",
    "EntryLaw",
    "RngStream",
    "empirical_moments",
    "make_diag_law",
    "make_entry_law",
    "sample_wigner",
    "haar_unitary",
    "hciz_determinant_form",
    "hciz_mc_average",
    "ratio_constancy_report",
    "exact_correlator",
    "kappa4_slope",
    "ContourSpec",
    "QuadratureError",
    "cauchy_det_identity_check",
    "f2_contour_normalized",
    "f2_exact_integral",
    "phase_function",
    "saddle_configuration_sum",
    "saddle_data",
    "self_normalized_ratio",
    "verify_landscape",
    "LogPhase",
    "SignedLog",
    "SignedLogAccumulator",
    "signed_log_sum",
    "SineKernelValue",
    "TheoryParams",
    "diagonal_normalizer",
    "exponent_drift",
    "f2_pair_asymptotic",
    "limit_ratio",
    "semicircle_density",
    "sine_kernel_ratio",
    "vandermonde",
]
