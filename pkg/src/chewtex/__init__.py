"""Food-texture attribute recognition from chewing audio."""

__version__ = "0.1.0"

from .corpus import (
    ATTRIBUTES,
    AttributeLabels,
    AudioRecording,
    BoutAnnotation,
    ChewAnnotation,
    Corpus,
    builtin_label_table,
    derive_bouts,
    load_annotations,
    load_corpus,
    load_wav,
    write_corpus,
)
from .dsp import (
    DspConfig,
    FilterSpec,
    apply_filter,
    design_highpass,
    downsample,
    preprocess_corpus,
    preprocess_recording,
)
from .features import (
    BandPlan,
    FeatureVector,
    band_energies,
    condition_number,
    default_band_plan,
    extract_matrix,
    extract_segment_features,
    feature_names,
    fractal_dimension,
    higher_moments,
    window_bout,
)
from .evaluate import (
    EvaluationReport,
    FoldResult,
    SweepResult,
    first_n_sweep,
    lofto_splits,
    loso_splits,
    run_protocol,
)
from .metrics import ConfusionCounts, positive_prior, prior_weight, weighted_accuracy
from .pipeline import (
    AttributeModel,
    BoutPrediction,
    ChewPrediction,
    MajorityModel,
    TrainConfig,
    load_model,
    predict_bout,
    predict_chews,
    save_model,
    train_bout_level,
    train_chew_level,
    vote_bout,
)
from .synth import SynthConfig, synth_corpus
