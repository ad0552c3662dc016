"""Estimate a loudspeaker's room average power response from its echo path.

Estimators map an echo-path log-power spectrum to the room curve; the
estimate then drives a minimum-phase room-compensation filter design. A
synthetic image-source room simulator supplies training data.

``BACKEND`` names the image-source kernel in use: ``"cython"`` when the
compiled extension imported, ``"python"`` otherwise.
"""

__version__ = "0.1.0"

from ._backend import BACKEND
from .equalizer import (
    EqDesign,
    EqFilter,
    TargetCurve,
    design_eq_filter,
    design_eq_magnitude,
    flat_target,
    smooth_fractional_octave,
)
from .errors import (
    DegenerateDistribution,
    EmptyGroup,
    InsufficientDecay,
    InvalidInput,
    RoomCurveError,
    SingularSystem,
    VersionError,
)
from .estimators import (
    Dataset,
    GlobalPcaModel,
    LocalPcaModel,
    LocalPrediction,
    LsModel,
    PcaBasis,
    pca,
    predict,
    predict_global_pca,
    predict_local_pca,
    predict_ls,
    project,
    reconstruct,
    train_global_pca,
    train_linear_map,
    train_local_pca,
    train_ls,
)
from .evaluation import (
    ErrorSurface,
    EstimatorSpec,
    Report,
    cross_validate,
    error_spectrum,
    percentile_curve,
    summarize,
)
from .features import FeatureKind, GroupThresholds, fit_normal_thresholds, lf_rolloff, rt30
from .roomsim import (
    DatasetRecord,
    GenerationConfig,
    RoomSpec,
    average_power_response,
    generate_dataset,
    simulate_rir,
)
from .spectra import ImpulseResponse, LogPowerSpectrum, log_power_spectrum, min_phase_fir
from .storage import load_dataset, load_model, save_dataset, save_model

__all__ = [name for name in dir() if not name.startswith("_")]
