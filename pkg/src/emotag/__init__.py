"""Emotion tagging for short music parts.

The toolkit decodes and standardizes WAV audio, extracts an 87-value
acoustic feature vector per 15-second part, quantifies how well emotion
labels separate under Fisher's criterion, and trains a one-vs-one SVM
to tag new parts. The :mod:`emotag.cli` module exposes the same pipeline
as the ``emotag`` command.
"""

from .analysis import (
    LabelSummary,
    SeparabilityMatrix,
    fisher_separability,
    label_summary,
    pairwise_max_separability,
)
from .audio import (
    CANONICAL_RATE,
    PART_SECONDS,
    AudioBuffer,
    AudioDecodeError,
    AudioPart,
    decode_wav,
    extract_part,
    normalize_peak,
    prepare_part,
    resample,
)
from .classifier import (
    EmotionClassifier,
    EvalReport,
    ModelFormatError,
    load_model,
    loocv,
    save_model,
)
from .config import PipelineConfig
from .dataset import EMOTION_LABELS, FeatureTable, read_feature_csv, write_feature_csv
from .features import (
    FEATURE_GROUPS,
    FEATURE_NAMES,
    N_FEATURES,
    FeatureExtractor,
    FeatureVector,
    extract_features,
)
from .musical import OnsetEnvelope, inharmonicity, mode_strength, onset_envelope, tempo_and_clarity
from .spectral import (
    FramePlan,
    Spectrogram,
    SubBandPlan,
    compute_spectrogram,
    frame_signal,
    magnitude_spectrum,
    make_subband_plan,
)
from .svm import BinarySvmModel, Standardizer, smo_solve, train_binary

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "AudioDecodeError",
    "AudioPart",
    "BinarySvmModel",
    "CANONICAL_RATE",
    "EMOTION_LABELS",
    "EmotionClassifier",
    "EvalReport",
    "FEATURE_GROUPS",
    "FEATURE_NAMES",
    "FeatureExtractor",
    "FeatureTable",
    "FeatureVector",
    "FramePlan",
    "LabelSummary",
    "ModelFormatError",
    "N_FEATURES",
    "OnsetEnvelope",
    "PART_SECONDS",
    "PipelineConfig",
    "SeparabilityMatrix",
    "Spectrogram",
    "Standardizer",
    "SubBandPlan",
    "compute_spectrogram",
    "decode_wav",
    "extract_features",
    "extract_part",
    "fisher_separability",
    "frame_signal",
    "inharmonicity",
    "label_summary",
    "load_model",
    "loocv",
    "magnitude_spectrum",
    "make_subband_plan",
    "mode_strength",
    "normalize_peak",
    "onset_envelope",
    "pairwise_max_separability",
    "prepare_part",
    "read_feature_csv",
    "resample",
    "save_model",
    "smo_solve",
    "tempo_and_clarity",
    "train_binary",
    "write_feature_csv",
]
