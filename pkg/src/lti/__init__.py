"""Limited-angle tomographic imaging toolkit.

Reconstructs images from missing-wedge tomographic measurements by combining
a ray-traced Radon operator, a bandlimited shearlet Parseval frame, a
visibility classification of shearlet subbands against the measured wedge,
a weighted l1-analysis ADMM solver, and an invisible-coefficient inference
stage that fuses recovered and inferred subbands.
"""

from .metrics import MetricReport, MetricRow, evaluate, psnr, relative_error, ssim
from .phantom import EllipseSpec, make_circle, make_random_ellipses, render_ellipses
from .pipeline import (
    CoefficientOverlapError,
    ExperimentConfig,
    ExperimentError,
    ExternalInferencer,
    InferenceCommandError,
    InferenceError,
    InferenceOutputError,
    InferenceTimeoutError,
    OracleInferencer,
    OracleStudy,
    ZeroInferencer,
    fbp_oracle_replace,
    oracle_experiment,
    records_for,
    run_experiment,
    step1,
    step2,
    step3,
    subband_mosaic,
)
from .shearlet import (
    ConfigurationError,
    ShearletSystem,
    SubbandIndex,
    adjoint,
    build_system,
    default_levels,
    forward,
    ordering_hash,
    subband_count,
    subband_list,
    subband_orientation,
)
from .solver import (
    AdmmParams,
    GradientAnalysis,
    PRESET_NAMES,
    ShearletAnalysis,
    admm_solve,
    cg_solve,
    objective,
    preset_params,
    soft_threshold,
)
from .tensorio import (
    KIND_COEFFS,
    KIND_IMAGE,
    KIND_SINOGRAM,
    SubbandRecord,
    TensorFile,
    TensorFormatError,
    read_tensor,
    write_coeffs,
    write_image,
    write_sinogram,
    write_tensor,
)
from .tomo import (
    FilterKind,
    GeometryError,
    NoiseSpec,
    ScanGeometry,
    default_geometry,
    fbp,
    radon_adjoint,
    radon_forward,
    simulate_measurements,
    system_matrix,
)
from .visibility import (
    VisibilityMask,
    mask_restrict,
    orientation_classify,
    quantile_classify,
    wedge_classify,
)

__version__ = "0.1.0"

__all__ = [
    "AdmmParams",
    "CoefficientOverlapError",
    "ConfigurationError",
    "EllipseSpec",
    "ExperimentConfig",
    "ExperimentError",
    "ExternalInferencer",
    "FilterKind",
    "GeometryError",
    "GradientAnalysis",
    "InferenceCommandError",
    "InferenceError",
    "InferenceOutputError",
    "InferenceTimeoutError",
    "KIND_COEFFS",
    "KIND_IMAGE",
    "KIND_SINOGRAM",
    "MetricReport",
    "MetricRow",
    "NoiseSpec",
    "OracleInferencer",
    "OracleStudy",
    "PRESET_NAMES",
    "ScanGeometry",
    "ShearletAnalysis",
    "ShearletSystem",
    "SubbandIndex",
    "SubbandRecord",
    "TensorFile",
    "TensorFormatError",
    "VisibilityMask",
    "ZeroInferencer",
    "adjoint",
    "admm_solve",
    "build_system",
    "cg_solve",
    "default_geometry",
    "default_levels",
    "evaluate",
    "fbp",
    "fbp_oracle_replace",
    "forward",
    "make_circle",
    "make_random_ellipses",
    "mask_restrict",
    "objective",
    "oracle_experiment",
    "orientation_classify",
    "ordering_hash",
    "preset_params",
    "psnr",
    "quantile_classify",
    "radon_adjoint",
    "radon_forward",
    "read_tensor",
    "records_for",
    "relative_error",
    "render_ellipses",
    "run_experiment",
    "simulate_measurements",
    "soft_threshold",
    "ssim",
    "step1",
    "step2",
    "step3",
    "subband_count",
    "subband_list",
    "subband_mosaic",
    "subband_orientation",
    "system_matrix",
    "wedge_classify",
    "write_coeffs",
    "write_image",
    "write_sinogram",
    "write_tensor",
]
