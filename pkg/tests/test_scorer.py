"""Greedy-matching score tests, including an exhaustive per-token oracle."""

import numpy as np
import numpy.testing as npt
import pytest

from embqe.core import cosine_similarity_matrix
from embqe.dataio import SPECIAL_WORD_ID, EmbeddingSet, QERecord, SentenceEmbedding
from embqe.errors import EmptySentenceError, LayerMismatchError, MissingEmbeddingError
from embqe.scorer import QEScore, ScorerConfig, greedy_match_score, score_dataset


def brute_force_score(x, y):
    """Independent oracle: per-token loops, no vectorized shortcuts."""
    sim = cosine_similarity_matrix(x, y)
    recall = sum(max(sim[i, j] for j in range(sim.shape[1])) for i in range(sim.shape[0]))
    recall /= sim.shape[0]
    precision = sum(max(sim[i, j] for i in range(sim.shape[0])) for j in range(sim.shape[1]))
    precision /= sim.shape[1]
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


class TestGreedyMatchScore:
    def test_identical_inputs_score_one(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(4, 6))
        score = greedy_match_score(x, x.copy())
        npt.assert_allclose([score.precision, score.recall, score.f1], 1.0, atol=1e-12)

    def test_known_similarity_matrix(self):
        # cross-cosines are exactly [[1, 0.6], [0, 0.8]]
        x = np.array([[1.0, 0.0], [0.0, 1.0]])
        y = np.array([[1.0, 0.0], [0.6, 0.8]])
        score = greedy_match_score(x, y)
        npt.assert_allclose(score.recall, 0.9, atol=1e-12)
        npt.assert_allclose(score.precision, 0.9, atol=1e-12)
        npt.assert_allclose(score.f1, 0.9, atol=1e-12)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            n, m, d = rng.integers(1, 7), rng.integers(1, 7), rng.integers(1, 9)
            x = rng.normal(size=(n, d))
            y = rng.normal(size=(m, d))
            score = greedy_match_score(x, y)
            p, r, f1 = brute_force_score(x, y)
            npt.assert_allclose([score.precision, score.recall, score.f1], [p, r, f1],
                                atol=1e-12)

    def test_hypothesis_order_irrelevant(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(3, 5))
        y = rng.normal(size=(4, 5))
        shuffled = y[[2, 0, 3, 1]]
        assert greedy_match_score(x, y) == greedy_match_score(x, shuffled)

    def test_precision_recall_duality(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(3, 4))
        y = rng.normal(size=(5, 4))
        assert greedy_match_score(x, y).precision == greedy_match_score(y, x).recall

    def test_single_source_token(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(1, 4))
        y = rng.normal(size=(3, 4))
        sim = cosine_similarity_matrix(x, y)
        score = greedy_match_score(x, y)
        npt.assert_allclose(score.recall, sim.max(), atol=1e-12)
        npt.assert_allclose(score.precision, sim.mean(), atol=1e-12)

    def test_duplicating_matched_token_never_hurts_recall(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(3, 4))
        y = rng.normal(size=(2, 4))
        base = greedy_match_score(x, y).recall
        extended = greedy_match_score(x, np.vstack([y, x[0]])).recall
        assert extended >= base - 1e-12

    def test_f1_zero_when_orthogonal(self):
        score = greedy_match_score(np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]]))
        assert score == QEScore(precision=0.0, recall=0.0, f1=0.0)

    def test_empty_sides_rejected(self):
        with pytest.raises(EmptySentenceError):
            greedy_match_score(np.zeros((0, 3)), np.ones((2, 3)))
        with pytest.raises(EmptySentenceError):
            greedy_match_score(np.ones((2, 3)), np.zeros((0, 3)))


def _sets_for(records, rng, layer=8, special=False):
    """Build matching source/hypothesis embedding sets for the given records."""
    src, hyp = [], []
    for rec in records:
        n, m = 3, 4
        s_mat = rng.normal(size=(n, 6)).astype(np.float32)
        h_mat = rng.normal(size=(m, 6)).astype(np.float32)
        s_ids, h_ids = [0, 1, 2], [0, 1, 1, 2]
        if special:
            s_mat = np.vstack([np.full((1, 6), 9.0, dtype=np.float32), s_mat])
            s_ids = [SPECIAL_WORD_ID] + s_ids
        src.append(SentenceEmbedding(rec.id, [f"s{i}" for i in range(len(s_ids))], s_ids, s_mat))
        hyp.append(SentenceEmbedding(rec.id, [f"h{i}" for i in range(m)], h_ids, h_mat))
    return (
        EmbeddingSet(layer=layer, dim=6, encoder="toy", sentences=src),
        EmbeddingSet(layer=layer, dim=6, encoder="toy", sentences=hyp),
    )


class TestScoreDataset:
    records = [QERecord(0, "a", "b", gold_score=0.1), QERecord(1, "c", "d", gold_score=0.9)]

    def test_order_and_determinism(self):
        rng = np.random.default_rng(6)
        src, hyp = _sets_for(self.records, rng)
        first = score_dataset(self.records, src, hyp, ScorerConfig(layer=8))
        second = score_dataset(self.records, src, hyp, ScorerConfig(layer=8))
        assert first.values == second.values
        assert len(first.values) == 2

    def test_gold_labels_carried(self):
        rng = np.random.default_rng(7)
        src, hyp = _sets_for(self.records, rng)
        series = score_dataset(self.records, src, hyp, ScorerConfig(layer=8))
        assert series.labels == [0.1, 0.9]

    def test_partial_gold_leaves_labels_unset(self):
        records = [QERecord(0, "a", "b", gold_score=0.1), QERecord(1, "c", "d")]
        rng = np.random.default_rng(8)
        src, hyp = _sets_for(records, rng)
        assert score_dataset(records, src, hyp, ScorerConfig(layer=8)).labels is None

    def test_special_rows_excluded_by_default(self):
        rng = np.random.default_rng(9)
        src_plain, hyp = _sets_for(self.records, rng)
        rng = np.random.default_rng(9)
        src_special, hyp2 = _sets_for(self.records, rng, special=True)
        a = score_dataset(self.records, src_plain, hyp, ScorerConfig(layer=8))
        b = score_dataset(self.records, src_special, hyp2, ScorerConfig(layer=8))
        npt.assert_allclose(a.values, b.values, atol=1e-12)

    def test_score_kind_selection(self):
        rng = np.random.default_rng(10)
        src, hyp = _sets_for(self.records, rng)
        r = score_dataset(self.records, src, hyp, ScorerConfig(layer=8, score_kind="recall"))
        p = score_dataset(self.records, src, hyp, ScorerConfig(layer=8, score_kind="precision"))
        assert r.values != p.values

    def test_missing_embedding(self):
        rng = np.random.default_rng(11)
        src, hyp = _sets_for(self.records[:1], rng)
        with pytest.raises(MissingEmbeddingError):
            score_dataset(self.records, src, hyp, ScorerConfig(layer=8))

    def test_layer_mismatch(self):
        rng = np.random.default_rng(12)
        src, hyp = _sets_for(self.records, rng, layer=10)
        with pytest.raises(LayerMismatchError):
            score_dataset(self.records, src, hyp, ScorerConfig(layer=8))

    def test_method_tag_names_kind_and_layer(self):
        tag = ScorerConfig(layer=10, score_kind="f1", apply_unk=True).method_tag()
        assert "f1" in tag and "10" in tag
