"""Quantum-noise spectra of mirrorless four-wave mixing in a double-Lambda medium."""

__version__ = "0.1.0"

from .greens import (  # noqa: E402
    SQL,
    KernelRow,
    SpectrumPoint,
    ThresholdSingularity,
    asymptotic_s_plus,
    bandwidth_model,
    ideal_floor,
    kernels,
    m_function,
    optimal_squeezing,
    optimal_theta,
    output_spectrum,
    spectrum_point,
    squeezing_spectrum,
)
from .langevin import McEstimate, NoiseRealization, mc_spectrum, sample_noise, solve_bvp_sample  # noqa: E402
from .params import (  # noqa: E402
    CouplingMatrix,
    DiffusionTable,
    MediumParams,
    ParameterError,
    coupling_matrix,
    coupling_matrix_generic,
    derived_scales,
    diffusion_table,
    kappa_from_density,
    make_params,
)
from .threshold import (  # noqa: E402
    BracketFailure,
    NoThreshold,
    SweepSpec,
    ThresholdResult,
    find_threshold,
    kappa_l_for_m_sq,
    numerical_floor,
    optimal_detuning,
    oscillation_possible,
    pre_threshold_saturation_point,
    sweep,
)
