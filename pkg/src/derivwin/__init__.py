"""Derivative-window MFCC front end and GMM-UBM speaker verification toolkit."""

from .errors import DerivwinError, FormatError, ValidationError
from .evalmetrics import DcfParams, DetCurve, Trial, TrialSet, det_curve, eer, export_det, min_dcf
from .features import FeatureMatrix, MfccConfig, build_mel_filterbank, extract, frame_signal, read_features, write_features
from .gmm import (
    AdaptationConfig,
    GmmModel,
    ScoringConfig,
    em_train,
    map_adapt,
    read_model,
    score_utterance,
    train_ubm,
    vq_init,
    write_model,
    zt_norm,
)
from .spectral import derivative_decomposition, multitaper_power, spectrum, verify_freq_diff_property
from .windows import Base, Normalize, Window, WindowMetrics, WindowSpec, apply_window, make_window, window_metrics

__version__ = "0.1.0"
