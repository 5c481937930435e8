"""Mono-static array sensing simulator.

Models a co-located transmit/receive pair of uniform rectangular arrays,
synthesizes joint beamforming weights whose combined response matches a
desired sum-co-array taper, and quantifies angular sensing capability through
noisy imaging, CFAR detection, and Monte Carlo missed-detection sweeps.
"""

__version__ = "0.1.0"

from .angular import (
    DEFAULT_REFERENCE_SPACING,
    NafGrid,
    NafPoint,
    SteeringMatrix,
    angles_to_naf,
    make_grid,
    naf_to_angles,
    oversampled_bins,
    steering_matrix,
    toroidal_distance,
    wrap_naf,
)
from .beamsynth import (
    AcquisitionSet,
    ConvergenceError,
    PsfMap,
    effective_weights,
    factorize,
    joint_psf,
    single_psf,
)
from .detection import (
    CfarConfig,
    Detection,
    MatchCounts,
    auto_cfar_config,
    cancel_target,
    cfar_detect,
    cfar_mask,
    detect_all,
    match_truth,
    refine_peak,
)
from .geometry import (
    ArrayGeometry,
    ArrayPair,
    ConstraintError,
    SumCoArray,
    coarray_dims,
    make_ura,
    sum_coarray,
    validate_pair,
)
from .imaging import (
    NafImage,
    NoiseModel,
    Scenario,
    acquire_pixel,
    point_source_image,
    reconstruct,
)
from .montecarlo import (
    ExperimentConfig,
    PmdCurve,
    PmdPoint,
    TrialOutcome,
    place_targets,
    run_trial,
    sweep,
    wilson_interval,
)
from .windowing import (
    TaperSpec,
    WeightGrid,
    chebyshev_1d,
    chebyshev_2d,
    half_mainlobe_width,
    resolution,
)

__all__ = [
    "__version__",
    "DEFAULT_REFERENCE_SPACING",
    "ArrayGeometry",
    "ArrayPair",
    "SumCoArray",
    "ConstraintError",
    "make_ura",
    "validate_pair",
    "sum_coarray",
    "coarray_dims",
    "NafPoint",
    "NafGrid",
    "SteeringMatrix",
    "angles_to_naf",
    "naf_to_angles",
    "steering_matrix",
    "make_grid",
    "oversampled_bins",
    "toroidal_distance",
    "wrap_naf",
    "TaperSpec",
    "WeightGrid",
    "chebyshev_1d",
    "chebyshev_2d",
    "half_mainlobe_width",
    "resolution",
    "AcquisitionSet",
    "PsfMap",
    "ConvergenceError",
    "effective_weights",
    "factorize",
    "single_psf",
    "joint_psf",
    "Scenario",
    "NoiseModel",
    "NafImage",
    "acquire_pixel",
    "reconstruct",
    "point_source_image",
    "CfarConfig",
    "Detection",
    "MatchCounts",
    "auto_cfar_config",
    "cfar_mask",
    "cfar_detect",
    "refine_peak",
    "cancel_target",
    "detect_all",
    "match_truth",
    "ExperimentConfig",
    "TrialOutcome",
    "PmdPoint",
    "PmdCurve",
    "place_targets",
    "run_trial",
    "sweep",
    "wilson_interval",
]
