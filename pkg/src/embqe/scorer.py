"""Greedy-matching QE scores over contextual token embeddings.

Rows are L2-normalized, so the pairwise inner products are cosines.  Recall
averages, over source tokens, the best similarity any hypothesis token
offers; precision does the same from the hypothesis side.  Recall is the
default reported score.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ScoreSeries, cosine_similarity_matrix
from .dataio import EmbeddingSet, QERecord
from .errors import EmptySentenceError, LayerMismatchError, MissingEmbeddingError
from .vocab import Vocabulary

SCORE_KINDS = ("precision", "recall", "f1")


@dataclass
class QEScore:
    precision: float
    recall: float
    f1: float


@dataclass
class ScorerConfig:
    layer: int = 8
    score_kind: str = "recall"
    exclude_special: bool = True
    apply_unk: bool = False

    def __post_init__(self):
        if self.score_kind not in SCORE_KINDS:
            raise ValueError(f"score_kind must be one of {SCORE_KINDS}")

    def method_tag(self) -> str:
        tag = f"greedy-{self.score_kind}@L{self.layer}"
        return tag + "+unk" if self.apply_unk else tag


def greedy_match_score(x, y) -> QEScore:
    """Precision/recall/F1 by greedy matching of source rows ``x`` against
    hypothesis rows ``y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size == 0 or x.shape[0] == 0:
        raise EmptySentenceError("source")
    if y.size == 0 or y.shape[0] == 0:
        raise EmptySentenceError("hypothesis")
    sim = cosine_similarity_matrix(x, y)
    recall = float(sim.max(axis=1).mean())
    precision = float(sim.max(axis=0).mean())
    denom = precision + recall
    f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return QEScore(precision=precision, recall=recall, f1=f1)


def score_sentence_pair(
    src_emb, hyp_emb, config: ScorerConfig | None = None
) -> QEScore:
    """Score one pair of SentenceEmbedding records under the config."""
    config = config or ScorerConfig()
    if config.exclude_special:
        x = src_emb.content_matrix()
        y = hyp_emb.content_matrix()
    else:
        x = src_emb.matrix
        y = hyp_emb.matrix
    return greedy_match_score(x, y)


def score_dataset(
    records: list[QERecord],
    src_set: EmbeddingSet,
    hyp_set: EmbeddingSet,
    config: ScorerConfig | None = None,
    vocab: Vocabulary | None = None,
) -> ScoreSeries:
    """One score per record, in dataset order.

    ``vocab`` is provenance only: replacement must already have happened
    before the hypothesis embeddings were produced (see
    :func:`embqe.vocab.replace_untranslated`), so scoring never re-tokenizes.
    """
    config = config or ScorerConfig()
    for name, es in (("source", src_set), ("hypothesis", hyp_set)):
        if es.layer != config.layer:
            raise LayerMismatchError(
                f"{name} embeddings carry layer {es.layer}, config wants {config.layer}"
            )
    values = []
    labels: list[float] | None = []
    for rec in records:
        src = src_set.get(rec.id)
        if src is None:
            raise MissingEmbeddingError(rec.id)
        hyp = hyp_set.get(rec.id)
        if hyp is None:
            raise MissingEmbeddingError(rec.id)
        score = score_sentence_pair(src, hyp, config)
        values.append(getattr(score, config.score_kind))
        if labels is not None and rec.gold_score is not None:
            labels.append(rec.gold_score)
        else:
            labels = None
    return ScoreSeries(values=values, labels=labels)
