"""Word alignment extraction from embedding similarities, and its evaluation.

Subword-level cosine similarities are pooled to word level by taking the
maximum over each word-pair block.  Alignments are then read off the word
similarity matrix either by mutual argmax (a pair is kept when each side is
the other's best match) or by iterative global greedy selection.  Quality
is reported as the alignment error rate

    AER = 1 - (|A & S| + |A & P|) / (|A| + |S|)

with sure links S, possible links P and predicted links A; corpus figures
are micro-averaged by tagging every link with its sentence id and unioning
the tagged sets.
"""

from __future__ import annotations

import numpy as np

from .core import cosine_similarity_matrix
from .dataio import EmbeddingSet, SentenceEmbedding, WordAlignment
from .errors import EmptyAlignmentError, EmptyMatrixError, MissingEmbeddingError

EXTRACTION_METHODS = ("mutual", "greedy")


def pool_to_words(
    sim: np.ndarray, src_word_ids: list[int], tgt_word_ids: list[int]
) -> np.ndarray:
    """Max-pool a subword similarity matrix into a word similarity matrix.

    ``src_word_ids``/``tgt_word_ids`` assign each subword row/column to a
    word index; they must cover words 0..W-1.
    """
    sim = np.asarray(sim, dtype=np.float64)
    if sim.size == 0:
        raise EmptyMatrixError("similarity matrix has no entries")
    if sim.shape != (len(src_word_ids), len(tgt_word_ids)):
        raise EmptyMatrixError(
            f"similarity shape {sim.shape} does not match word maps "
            f"({len(src_word_ids)}, {len(tgt_word_ids)})"
        )
    n_words = max(src_word_ids) + 1
    m_words = max(tgt_word_ids) + 1
    pooled = np.full((n_words, m_words), -np.inf)
    src = np.asarray(src_word_ids)
    tgt = np.asarray(tgt_word_ids)
    for wi in range(n_words):
        rows = sim[src == wi]
        for wj in range(m_words):
            pooled[wi, wj] = rows[:, tgt == wj].max()
    return pooled


def word_similarity(
    src_sent: SentenceEmbedding, tgt_sent: SentenceEmbedding
) -> np.ndarray:
    """Word-level cosine similarity of two sentences, specials excluded."""
    src_words = src_sent.content_word_ids()
    tgt_words = tgt_sent.content_word_ids()
    if not src_words or not tgt_words:
        raise EmptyMatrixError(
            f"sentence pair ({src_sent.sid}) has no content tokens on one side"
        )
    sim = cosine_similarity_matrix(src_sent.content_matrix(), tgt_sent.content_matrix())
    return pool_to_words(sim, src_words, tgt_words)


def extract_alignment(
    word_sim: np.ndarray, method: str = "mutual"
) -> frozenset[tuple[int, int]]:
    """Read word links off a word similarity matrix.

    ``mutual`` keeps (i, j) iff j is the best target for i and i the best
    source for j; argmax ties resolve to the smaller index.  ``greedy``
    repeatedly takes the globally best remaining cell and retires its row
    and column, so it always yields min(n, m) links.
    """
    word_sim = np.asarray(word_sim, dtype=np.float64)
    if word_sim.ndim != 2 or word_sim.size == 0:
        raise EmptyMatrixError("word similarity matrix has no entries")
    if method not in EXTRACTION_METHODS:
        raise ValueError(f"method must be one of {EXTRACTION_METHODS}")
    n, m = word_sim.shape
    if method == "mutual":
        best_tgt = word_sim.argmax(axis=1)  # first occurrence = smaller index
        best_src = word_sim.argmax(axis=0)
        return frozenset(
            (i, int(best_tgt[i])) for i in range(n) if best_src[best_tgt[i]] == i
        )
    links: set[tuple[int, int]] = set()
    masked = word_sim.copy()
    for _ in range(min(n, m)):
        flat = masked.argmax()  # ties: first in row-major order, i.e. smallest (i, j)
        i, j = divmod(int(flat), m)
        links.add((i, j))
        masked[i, :] = -np.inf
        masked[:, j] = -np.inf
    return frozenset(links)


def aer_counts(
    predicted: frozenset[tuple[int, int]] | set[tuple[int, int]],
    gold: WordAlignment,
) -> tuple[int, int, int, int]:
    """(|A & S|, |A & P|, |A|, |S|) for one sentence."""
    a = set(predicted)
    return (
        len(a & gold.sure),
        len(a & gold.possible),
        len(a),
        len(gold.sure),
    )


def aer(
    predicted: frozenset[tuple[int, int]] | set[tuple[int, int]],
    gold: WordAlignment,
) -> float:
    hit_s, hit_p, n_a, n_s = aer_counts(predicted, gold)
    if n_a + n_s == 0:
        raise EmptyAlignmentError("both predicted and sure links are empty")
    return 1.0 - (hit_s + hit_p) / (n_a + n_s)


def corpus_aer(
    predicted: dict[int, frozenset[tuple[int, int]]],
    gold: dict[int, WordAlignment],
) -> float:
    """Micro-averaged AER: links are tagged with their sentence id and the
    single-sentence formula is applied to the unions."""
    a: set[tuple[int, int, int]] = set()
    s: set[tuple[int, int, int]] = set()
    p: set[tuple[int, int, int]] = set()
    for sid, align in gold.items():
        s |= {(sid, i, j) for i, j in align.sure}
        p |= {(sid, i, j) for i, j in align.possible}
        a |= {(sid, i, j) for i, j in predicted.get(sid, frozenset())}
    if not a and not s:
        raise EmptyAlignmentError("corpus has no predicted and no sure links")
    return 1.0 - (len(a & s) + len(a & p)) / (len(a) + len(s))


def align_corpus(
    src_set: EmbeddingSet,
    tgt_set: EmbeddingSet,
    sids: list[int],
    method: str = "mutual",
) -> dict[int, frozenset[tuple[int, int]]]:
    """Extract word links for every requested sentence id."""
    out = {}
    for sid in sids:
        src_sent = src_set.get(sid)
        tgt_sent = tgt_set.get(sid)
        if src_sent is None or tgt_sent is None:
            raise MissingEmbeddingError(sid)
        out[sid] = extract_alignment(word_similarity(src_sent, tgt_sent), method)
    return out


def layer_sweep(
    layer_sets: dict[int, tuple[EmbeddingSet, EmbeddingSet]],
    gold: dict[int, WordAlignment],
    method: str = "mutual",
) -> dict[int, float]:
    """Corpus AER per layer, over the sentences present in ``gold``."""
    sids = sorted(gold)
    results = {}
    for layer in sorted(layer_sets):
        src_set, tgt_set = layer_sets[layer]
        predicted = align_corpus(src_set, tgt_set, sids, method)
        results[layer] = corpus_aer(predicted, gold)
    return results
