"""Reference-free machine-translation quality estimation from contextual
embeddings, with the surrounding evaluation stack (edit-rate labeling,
alignment error rate, correlation and stability reports)."""

from .aligneval import aer, corpus_aer, extract_alignment, layer_sweep, pool_to_words
from .aligntrain import (
    LossConfig,
    SentencePair,
    ToyEncoderParams,
    TrainConfig,
    alignment_loss,
    expand_to_subwords,
    load_checkpoint,
    regularization_loss,
    save_checkpoint,
    total_loss,
    toy_encode,
    train,
)
from .core import ScoreSeries, cosine_similarity_matrix, l2_normalize_rows, pearson
from .dataio import (
    EmbeddingSet,
    QERecord,
    SentenceEmbedding,
    WordAlignment,
    intersect_alignments,
    parse_pharaoh,
    read_dataset,
    read_embeddings,
    write_dataset,
    write_embeddings,
)
from .errors import EmbQEError, InputDataError, NumericalError
from .harness import EvalReport, StabilityCurve, evaluate, score_distribution, size_stability
from .scorer import QEScore, ScorerConfig, greedy_match_score, score_dataset
from .ter import TERConfig, TERResult, hter_label, levenshtein, ter
from .vocab import (
    DEFAULT_UNK,
    TokenizerPolicy,
    Vocabulary,
    build_vocabulary,
    load_vocabulary,
    replace_untranslated,
    write_vocabulary,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_UNK",
    "EmbQEError",
    "EmbeddingSet",
    "EvalReport",
    "InputDataError",
    "LossConfig",
    "NumericalError",
    "QERecord",
    "QEScore",
    "ScoreSeries",
    "ScorerConfig",
    "SentenceEmbedding",
    "SentencePair",
    "StabilityCurve",
    "TERConfig",
    "TERResult",
    "TokenizerPolicy",
    "ToyEncoderParams",
    "TrainConfig",
    "Vocabulary",
    "WordAlignment",
    "aer",
    "alignment_loss",
    "build_vocabulary",
    "corpus_aer",
    "cosine_similarity_matrix",
    "evaluate",
    "expand_to_subwords",
    "extract_alignment",
    "greedy_match_score",
    "hter_label",
    "intersect_alignments",
    "l2_normalize_rows",
    "layer_sweep",
    "levenshtein",
    "load_checkpoint",
    "load_vocabulary",
    "parse_pharaoh",
    "pearson",
    "pool_to_words",
    "read_dataset",
    "read_embeddings",
    "regularization_loss",
    "replace_untranslated",
    "save_checkpoint",
    "score_dataset",
    "score_distribution",
    "size_stability",
    "ter",
    "total_loss",
    "toy_encode",
    "train",
    "write_dataset",
    "write_embeddings",
    "write_vocabulary",
]
