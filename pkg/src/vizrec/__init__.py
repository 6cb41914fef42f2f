"""Visualization-type recommendation for two-column tabular datasets.

The pipeline characterizes a dataset with a fixed statistical feature
catalog, retrieves nearest labeled demonstrations from a clustered pool,
and asks a chat LLM to score four chart types (line, scatter, bar, box),
with offline-reproducible caching and mock backends.
"""

from .catalog import CATALOG_VERSION, FeatureMap, FeatureSchema, schema_for
from .errors import (
    ConfigError,
    CorpusError,
    GatewayError,
    ParseError,
    SchemaError,
    TranscriptError,
    TransportError,
    VizRecError,
)
from .estimator import FeatureVectorizer, VisualizationRecommender
from .features import extract_cross_column_features, extract_features, extract_single_column_features
from .gateway import (
    API_KEY_ENV,
    ChatRequest,
    ChatResponse,
    Gateway,
    LiveProvider,
    MockProvider,
    RecordingProvider,
    RequestSettings,
    ResponseCache,
    cache_key,
)
from .pipeline import (
    AblationAxis,
    BootstrapConfig,
    Metrics,
    Recommendation,
    accept_scores,
    bootstrap_example,
    bootstrap_retrieval_set,
    build_demonstration,
    compose_hint,
    evaluate_hits_at_2,
    explanation_consistency,
    prune_retrieval_set,
    recommend,
    recommend_all,
    run_ablation,
)
from .prompts import (
    DEFAULT_TEMPLATES,
    Explanation,
    FeatureDescription,
    ScoreVector,
    TemplateSet,
    describe_dataset,
    parse_scores,
    serialize_features,
)
from .retrieval import (
    BootstrapOutcome,
    BootstrapStatus,
    Ordering,
    RetrievalConfig,
    RetrievalEntry,
    RetrievalSet,
    build_retrieval_set,
    cosine_similarity,
    load_retrieval_set,
    nearest_demonstrations,
    save_retrieval_set,
    truncate_retrieval_set,
)
from .tabular import (
    CANONICAL_TYPES,
    Column,
    LabeledCorpusRecord,
    TabularDataset,
    VisualizationType,
    load_corpus,
    write_corpus,
)
from .vectorize import (
    FeatureVector,
    StandardizationStats,
    compute_standardization_stats,
    vectorize,
)

__version__ = "0.1.0"

__all__ = [
    "API_KEY_ENV",
    "AblationAxis",
    "BootstrapConfig",
    "BootstrapOutcome",
    "BootstrapStatus",
    "CANONICAL_TYPES",
    "CATALOG_VERSION",
    "ChatRequest",
    "ChatResponse",
    "Column",
    "ConfigError",
    "CorpusError",
    "DEFAULT_TEMPLATES",
    "Explanation",
    "FeatureDescription",
    "FeatureMap",
    "FeatureSchema",
    "FeatureVector",
    "FeatureVectorizer",
    "Gateway",
    "GatewayError",
    "LabeledCorpusRecord",
    "LiveProvider",
    "Metrics",
    "MockProvider",
    "Ordering",
    "ParseError",
    "Recommendation",
    "RecordingProvider",
    "RequestSettings",
    "ResponseCache",
    "RetrievalConfig",
    "RetrievalEntry",
    "RetrievalSet",
    "SchemaError",
    "ScoreVector",
    "StandardizationStats",
    "TabularDataset",
    "TemplateSet",
    "TranscriptError",
    "TransportError",
    "VisualizationRecommender",
    "VisualizationType",
    "VizRecError",
    "accept_scores",
    "bootstrap_example",
    "bootstrap_retrieval_set",
    "build_demonstration",
    "build_retrieval_set",
    "cache_key",
    "compose_hint",
    "compute_standardization_stats",
    "cosine_similarity",
    "describe_dataset",
    "evaluate_hits_at_2",
    "explanation_consistency",
    "extract_cross_column_features",
    "extract_features",
    "extract_single_column_features",
    "load_corpus",
    "load_retrieval_set",
    "nearest_demonstrations",
    "parse_scores",
    "prune_retrieval_set",
    "recommend",
    "recommend_all",
    "run_ablation",
    "save_retrieval_set",
    "schema_for",
    "serialize_features",
    "truncate_retrieval_set",
    "vectorize",
    "write_corpus",
]
