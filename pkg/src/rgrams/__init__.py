"""r-gram toolkit: pair-merge grammars, segmentation, statistics, embeddings."""

from .corpus import (
    DEFAULT_SEPARATORS,
    BoundedSequence,
    NormalizationOptions,
    SymbolTable,
    decode_terminals,
    encode,
    encode_file,
    normalize,
)
from .embed import (
    EmbeddingMatrix,
    EmbedVocab,
    TrainConfig,
    VectorSet,
    build_vocab,
    export_vectors,
    import_vectors,
    train_skipgram,
)
from .errors import (
    CorpusDecodeError,
    DomainError,
    GrammarFileError,
    GrammarVersionError,
    SegmentedFileError,
    ToolError,
    UnknownSymbolError,
    VectorFileError,
)
from .evaluate import (
    AnalogyQuery,
    SuiteResult,
    analogy,
    analogy_suite,
    cosine,
    nearest_neighbors,
    similarity_suite,
    spearman,
)
from .grammar import (
    OOV_BASE,
    Grammar,
    Rule,
    apply,
    apply_with_report,
    decode,
    load,
    read_segmented,
    save,
    write_segmented,
)
from .repair import (
    MergeEvent,
    PairMerger,
    PairRecord,
    StopCriteria,
    pair_count,
    train,
    train_naive,
)
from .stats import (
    FlatnessReport,
    RankedDistribution,
    checkpoint_curves,
    compression_ratio,
    flatness,
    rank_frequency,
)

__version__ = "0.1.0"

__all__ = [
    "AnalogyQuery",
    "BoundedSequence",
    "CorpusDecodeError",
    "DEFAULT_SEPARATORS",
    "DomainError",
    "EmbedVocab",
    "EmbeddingMatrix",
    "FlatnessReport",
    "Grammar",
    "GrammarFileError",
    "GrammarVersionError",
    "MergeEvent",
    "NormalizationOptions",
    "OOV_BASE",
    "PairMerger",
    "PairRecord",
    "RankedDistribution",
    "Rule",
    "SegmentedFileError",
    "StopCriteria",
    "SuiteResult",
    "SymbolTable",
    "ToolError",
    "TrainConfig",
    "UnknownSymbolError",
    "VectorFileError",
    "VectorSet",
    "analogy",
    "analogy_suite",
    "apply",
    "apply_with_report",
    "build_vocab",
    "checkpoint_curves",
    "compression_ratio",
    "cosine",
    "decode",
    "decode_terminals",
    "encode",
    "encode_file",
    "export_vectors",
    "flatness",
    "import_vectors",
    "load",
    "nearest_neighbors",
    "normalize",
    "pair_count",
    "rank_frequency",
    "read_segmented",
    "save",
    "similarity_suite",
    "spearman",
    "train",
    "train_naive",
    "train_skipgram",
    "write_segmented",
]
