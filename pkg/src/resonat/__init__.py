"""Resonance expansions of high-contrast Helmholtz Green functions and
sub-wavelength inverse-source imaging."""

__version__ = "0.1.0"

from .grids import (
    ConstantProfile,
    DomainGrid,
    MeasurementSurface,
    RadialBumpProfile,
    RefractiveProfile,
    WaveContext,
    build_ball_grid,
    build_disk_grid,
    build_measurement_surface,
    sample_profile,
)
from .kernels import far_field_g0, g0, im_g0, sinc_psf, sinc_psf_fwhm
from .volume import (
    DiscreteOperator,
    apply_kd,
    assemble_kd,
    green_matrix,
    operator_from_matrix,
    radiate,
    singular_values,
    solve_green_direct,
)
from .spectral import (
    ChainIndex,
    CoefficientMatrix,
    SpectralSystem,
    build_d_matrix,
    build_h_matrix,
    build_r_matrix,
    eigendecompose,
    resolvent_chain_coefficients,
    synthetic_jordan_system,
    verify_resonant_mode,
)
from .expansion import (
    ExpansionCoefficients,
    GreenField,
    PsfProfile,
    alpha_expansion,
    beta_expansion,
    homogeneous_expansion,
    mode_mixing_report,
    psf_from_samples,
    psf_profile,
    reconstruct_green,
    truncation_error_curve,
)
from .imaging import (
    ForwardMap,
    GridDensity,
    ImagingResult,
    MeasurementData,
    PointSources,
    build_forward_map,
    homogeneous_hk_residual,
    l1_reconstruct,
    l2_minimum_norm,
    resolution_metrics,
    synthesize_data,
    time_reversal,
)
