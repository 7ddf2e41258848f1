"""emodrift: semantic drift detection for words and emoji across time slices.

The pipeline: ingest raw posts into (month x platform) corpus slices, train
one skip-gram embedding model per slice over a shared vocabulary, gate each
model with analogy sanity checks, flag pairwise distance shifts that deviate
from the baseline by more than beta standard deviations, attribute each
flagged pair to the member implicated in more pairs, and characterize drift
trajectories (trend, cohesiveness, seasonal reversion) over time. A synthetic
harness with planted drifts verifies the detector end to end.
"""

__version__ = "0.1.0"

from .analogy import AnalogyItem, analogy, load_suite, run_suite
from .drift import (
    Attribution,
    DriftComparison,
    DriftIndicator,
    DistanceMatrix,
    ShiftMatrix,
    attribute_shift,
    baseline_shift,
    compare_models,
    drift_indicator,
    drifted_tokens,
    normality_check,
    pairwise_distances,
)
from .emoji_data import EmojiData, default_emoji_data, load_emoji_data
from .ingest import (
    CleanDocument,
    Normalizer,
    Platform,
    RawPost,
    SliceGrid,
    SliceKey,
    partition,
    read_posts,
)
from .series import (
    PatternClass,
    SimilaritySeries,
    TrendFit,
    classify_pattern,
    cohesiveness,
    linear_trend,
    neighbor_overlap,
    similarity_series,
)
from .shapiro import DegenerateSampleError, shapiro_wilk
from .synth import Benchmark, DriftSpec, DriftStyle, GeneratorConfig, generate, run_benchmark, score
from .tokenizer import Token, Tokenizer, TokenKind
from .trainer import (
    EmbeddingModel,
    Hyperparams,
    load_model,
    save_model,
    sgns_pair_grads,
    sgns_pair_loss,
    train_skipgram,
)
from .vocab import SharedVocabulary, build_vocab

__all__ = [
    "AnalogyItem",
    "Attribution",
    "Benchmark",
    "CleanDocument",
    "DegenerateSampleError",
    "DistanceMatrix",
    "DriftComparison",
    "DriftIndicator",
    "DriftSpec",
    "DriftStyle",
    "EmbeddingModel",
    "EmojiData",
    "GeneratorConfig",
    "Hyperparams",
    "Normalizer",
    "PatternClass",
    "Platform",
    "RawPost",
    "SharedVocabulary",
    "ShiftMatrix",
    "SimilaritySeries",
    "SliceGrid",
    "SliceKey",
    "Token",
    "TokenKind",
    "Tokenizer",
    "TrendFit",
    "analogy",
    "attribute_shift",
    "baseline_shift",
    "build_vocab",
    "classify_pattern",
    "cohesiveness",
    "compare_models",
    "default_emoji_data",
    "drift_indicator",
    "drifted_tokens",
    "generate",
    "linear_trend",
    "load_emoji_data",
    "load_model",
    "load_suite",
    "neighbor_overlap",
    "normality_check",
    "pairwise_distances",
    "partition",
    "read_posts",
    "run_benchmark",
    "run_suite",
    "save_model",
    "score",
    "sgns_pair_grads",
    "sgns_pair_loss",
    "shapiro_wilk",
    "similarity_series",
    "train_skipgram",
]
