"""talkerqa: no-reference quality assessment for AI-generated talking-head video.

The toolkit covers the full loop: decoding clip fixtures, building the
composite quality representation (first frame + temporal slice + tone-lip
consistency planes), training and cross-validating a quality regressor,
processing subjective study ratings into MOSs, and serving a rating study
over HTTP.
"""

from .evaluation import (
    CrossValidationReport,
    FoldSplit,
    MetricsReport,
    UndefinedCorrelationError,
    compute_metrics,
    krcc,
    make_folds,
    plcc,
    rmse,
    run_cross_validation,
    srcc,
)
from .fscd import (
    FscdComposite,
    RankDeficiencyError,
    RegressorModel,
    assemble_composite,
    extract_features,
    load_composite,
    load_model,
    predict,
    save_composite,
    save_model,
    train_regressor,
)
from .media import (
    AudioTrack,
    ClipBundle,
    FrameSequence,
    MediaError,
    load_clip,
    load_ppm,
    load_wav,
    save_clip,
    save_ppm,
    save_wav,
)
from .slicing import KeypointSet, MouthCenter, extract_yt_slice, mouth_centroid, scale_center
from .subjective import (
    DistortionTaxonomy,
    MosEntry,
    RatingRecord,
    StudyResult,
    load_ratings,
    process_ratings,
    write_mos_csv,
)
from .sync import BaselineSyncScorer, MfccConfig, SyncScore, SyncScorer, compute_mfcc

__version__ = "0.1.0"

__all__ = [
    "AudioTrack",
    "BaselineSyncScorer",
    "ClipBundle",
    "CrossValidationReport",
    "DistortionTaxonomy",
    "FoldSplit",
    "FrameSequence",
    "FscdComposite",
    "KeypointSet",
    "MediaError",
    "MetricsReport",
    "MfccConfig",
    "MosEntry",
    "MouthCenter",
    "RankDeficiencyError",
    "RatingRecord",
    "RegressorModel",
    "StudyResult",
    "SyncScore",
    "SyncScorer",
    "UndefinedCorrelationError",
    "assemble_composite",
    "compute_metrics",
    "compute_mfcc",
    "extract_features",
    "extract_yt_slice",
    "krcc",
    "load_clip",
    "load_composite",
    "load_model",
    "load_ppm",
    "load_ratings",
    "load_wav",
    "make_folds",
    "mouth_centroid",
    "plcc",
    "predict",
    "process_ratings",
    "rmse",
    "run_cross_validation",
    "save_clip",
    "save_composite",
    "save_model",
    "save_ppm",
    "save_wav",
    "scale_center",
    "srcc",
    "train_regressor",
    "write_mos_csv",
]
