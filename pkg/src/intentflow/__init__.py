"""Batch toolkit for unsupervised intent induction over dialogue corpora.

Submodules:
  corpus      canonical corpus model, JSON round trip, MultiWOZ conversion
  embed       binary embedding interchange (UTTEMB01) and cosine similarity
  mask        gazetteer entity masking and the pair-similarity study
  manifold    neighborhood-graph dimensionality reduction
  clustering  density clustering with soft memberships and validity
  evaluate    extended BCubed against dialogue-act annotations
  summarize   class-based TF-IDF cluster summaries
  flows       sequential pattern mining over per-dialogue label sequences
  pipeline    config-driven end-to-end runs with hashed artifacts
"""

from .clustering import ClusterParams, ClusterResult, cluster, relative_validity
from .corpus import (
    Corpus,
    CorpusStats,
    Dialogue,
    Utterance,
    UtteranceKey,
    convert_multiwoz,
    corpus_stats,
    domain_combination_histogram,
    filter_utterances,
    iter_utterances,
    load_corpus,
    write_corpus,
)
from .embed import (
    EmbeddingMatrix,
    cosine_similarity,
    load_embeddings,
    write_embeddings,
)
from .errors import (
    ConfigError,
    CorpusError,
    EmbeddingFormatError,
    GazetteerError,
    MissingAssignmentError,
    ParameterError,
    UndefinedScoreError,
    UndefinedSimilarityError,
    ValidationError,
)
from .evaluate import BCubedScores, LabeledItem, bcubed, evaluate_clustering
from .flows import SequenceDB, SequentialPattern, build_sequence_db, frequent, topk
from .manifold import NeighborGraph, ReductionParams, knn_graph, reduce
from .mask import (
    Gazetteer,
    build_gazetteer,
    mask_corpus,
    mask_text,
    pair_similarity_study,
)
from .pipeline import GridSpec, PipelineConfig, grid_search, run_pipeline
from .summarize import ClusterSummary, summarize_clusters, top_words

__version__ = "0.1.0"

__all__ = [
    "BCubedScores",
    "ClusterParams",
    "ClusterResult",
    "ClusterSummary",
    "ConfigError",
    "Corpus",
    "CorpusError",
    "CorpusStats",
    "Dialogue",
    "EmbeddingFormatError",
    "EmbeddingMatrix",
    "Gazetteer",
    "GazetteerError",
    "GridSpec",
    "LabeledItem",
    "MissingAssignmentError",
    "NeighborGraph",
    "ParameterError",
    "PipelineConfig",
    "ReductionParams",
    "SequenceDB",
    "SequentialPattern",
    "UndefinedScoreError",
    "UndefinedSimilarityError",
    "Utterance",
    "UtteranceKey",
    "ValidationError",
    "bcubed",
    "build_gazetteer",
    "build_sequence_db",
    "cluster",
    "convert_multiwoz",
    "corpus_stats",
    "cosine_similarity",
    "domain_combination_histogram",
    "evaluate_clustering",
    "filter_utterances",
    "frequent",
    "grid_search",
    "iter_utterances",
    "knn_graph",
    "load_corpus",
    "load_embeddings",
    "mask_corpus",
    "mask_text",
    "pair_similarity_study",
    "reduce",
    "relative_validity",
    "run_pipeline",
    "summarize_clusters",
    "top_words",
    "topk",
    "write_corpus",
    "write_embeddings",
]
