"""Semantic similarity scanning between authored passages and source books.

The library segments both texts into sentences and word n-grams, embeds
every segment's tokens, scores all segment pairs with a greedy
token-matching metric (precision, recall, F1 over best-match cosines), and
renders ranked pairs, streak diagnostics, and heatmaps for scholarly review.
"""

from .corpus import (
    InstanceSpec,
    Manifest,
    PassageSelector,
    TextDocument,
    extract_passage,
    load_document,
    load_manifest,
    normalize_text,
    resolve_selector,
)
from .embeddings import (
    EmbeddedSegment,
    EmbeddingStore,
    EmbeddingStoreHeader,
    SegmentRef,
    fnv1a64,
    hash_embed,
    open_store,
    write_store,
)
from .errors import (
    BadMagic,
    CorruptRecord,
    DimMismatch,
    EmptyAfterStrip,
    EmptySegment,
    EncodingError,
    InfluenceScanError,
    ManifestError,
    MarkerNotFound,
    MissingEmbeddings,
    NormViolation,
    SelectorOutOfRange,
    VersionMismatch,
)
from .matrix import (
    RankedPair,
    SimilarityMatrix,
    StreakDiagnostic,
    build_bundle,
    bundle_to_json,
    compare_all,
    detect_streaks,
    diagonal_alignment,
    matrix_from_bundle,
    matrix_to_csv,
    streaks_from_bundle,
    top_pairs,
)
from .report import (
    DEFAULT_ANCHORS,
    ReportSpec,
    export_tables,
    render_heatmap,
    render_pair_report,
    value_to_color,
)
from .score import IdfWeights, ScoreTriple, bertscore, compute_idf, cosine_matrix, f1_score
from .segment import (
    Segment,
    SegmentationConfig,
    segment_passage,
    segments_from_jsonl,
    segments_to_jsonl,
    split_ngrams,
    split_sentences,
    word_tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "BadMagic",
    "CorruptRecord",
    "DEFAULT_ANCHORS",
    "DimMismatch",
    "EmbeddedSegment",
    "EmbeddingStore",
    "EmbeddingStoreHeader",
    "EmptyAfterStrip",
    "EmptySegment",
    "EncodingError",
    "IdfWeights",
    "InfluenceScanError",
    "InstanceSpec",
    "Manifest",
    "ManifestError",
    "MarkerNotFound",
    "MissingEmbeddings",
    "NormViolation",
    "PassageSelector",
    "RankedPair",
    "ReportSpec",
    "ScoreTriple",
    "Segment",
    "SegmentRef",
    "SegmentationConfig",
    "SelectorOutOfRange",
    "SimilarityMatrix",
    "StreakDiagnostic",
    "TextDocument",
    "VersionMismatch",
    "bertscore",
    "build_bundle",
    "bundle_to_json",
    "compare_all",
    "compute_idf",
    "cosine_matrix",
    "detect_streaks",
    "diagonal_alignment",
    "export_tables",
    "extract_passage",
    "f1_score",
    "fnv1a64",
    "hash_embed",
    "load_document",
    "load_manifest",
    "matrix_from_bundle",
    "matrix_to_csv",
    "normalize_text",
    "open_store",
    "render_heatmap",
    "render_pair_report",
    "resolve_selector",
    "segment_passage",
    "segments_from_jsonl",
    "segments_to_jsonl",
    "split_ngrams",
    "split_sentences",
    "streaks_from_bundle",
    "top_pairs",
    "value_to_color",
    "word_tokenize",
    "write_store",
]
