"""Round-trip and error-path tests for the file formats."""

import struct

import numpy as np
import numpy.testing as npt
import pytest

from embqe.dataio import (
    QEEMB_MAGIC,
    SPECIAL_WORD_ID,
    WMT_COLUMN_MAP,
    EmbeddingSet,
    QERecord,
    SentenceEmbedding,
    WordAlignment,
    format_pharaoh,
    intersect_alignments,
    parse_pharaoh,
    read_dataset,
    read_embeddings,
    read_pharaoh_file,
    write_dataset,
    write_embeddings,
    write_pharaoh_file,
)
from embqe.errors import (
    BadMagicError,
    BadPairError,
    DatasetFormatError,
    DimMismatchError,
    MissingColumnError,
    NonNumericScoreError,
    RaggedRowError,
    TruncatedFileError,
)


@pytest.fixture
def dataset_file(tmp_path):
    p = tmp_path / "data.tsv"
    p.write_text(
        "id\tsource\thypothesis\tpost_edit\tgold_score\n"
        "0\tein Haus\ta house\ta home\t0.25\n"
        "1\tzwei Katzen\ttwo cats\t\t\n",
        encoding="utf-8",
    )
    return p


class TestDatasetReader:
    def test_basic_fields(self, dataset_file):
        records = read_dataset(dataset_file)
        assert [r.id for r in records] == [0, 1]
        assert records[0].source == "ein Haus"
        assert records[0].gold_score == 0.25
        assert records[1].gold_score is None
        assert records[1].post_edit == ""

    def test_round_trip(self, tmp_path, dataset_file):
        records = read_dataset(dataset_file)
        out = tmp_path / "copy.tsv"
        write_dataset(records, out)
        assert read_dataset(out) == records

    def test_missing_required_column(self, tmp_path):
        p = tmp_path / "bad.tsv"
        p.write_text("id\tsource\n0\tx\n")
        with pytest.raises(MissingColumnError):
            read_dataset(p)

    def test_wmt_column_names(self, tmp_path):
        p = tmp_path / "wmt.tsv"
        p.write_text("segid\toriginal\tmt\tpe\thter\n7\tsrc text\tmt text\tpe text\t0.5\n")
        (rec,) = read_dataset(p, column_map=WMT_COLUMN_MAP)
        assert rec == QERecord(7, "src text", "mt text", "pe text", 0.5)

    def test_ragged_row_reports_line(self, tmp_path):
        p = tmp_path / "ragged.tsv"
        p.write_text("id\tsource\thypothesis\n0\ta\tb\n1\tmissing\n")
        with pytest.raises(RaggedRowError) as err:
            read_dataset(p)
        assert "3" in str(err.value)

    def test_duplicate_id(self, tmp_path):
        p = tmp_path / "dup.tsv"
        p.write_text("id\tsource\thypothesis\n5\ta\tb\n5\tc\td\n")
        with pytest.raises(DatasetFormatError):
            read_dataset(p)

    def test_empty_hypothesis(self, tmp_path):
        p = tmp_path / "empty.tsv"
        p.write_text("id\tsource\thypothesis\n0\ta\t\n")
        with pytest.raises(DatasetFormatError):
            read_dataset(p)

    def test_non_numeric_score(self, tmp_path):
        p = tmp_path / "nan.tsv"
        p.write_text("id\tsource\thypothesis\tgold_score\n0\ta\tb\tgood\n")
        with pytest.raises(NonNumericScoreError):
            read_dataset(p)

    def test_crlf_terminators_stripped(self, tmp_path):
        p = tmp_path / "crlf.tsv"
        p.write_bytes(b"id\tsource\thypothesis\r\n0\ta\tb\r\n")
        (rec,) = read_dataset(p)
        assert rec.hypothesis == "b"


def _embedding_set():
    rng = np.random.default_rng(11)
    sentences = [
        SentenceEmbedding(
            sid=0,
            tokens=["<s>", "Ha", "us", "</s>"],
            word_ids=[SPECIAL_WORD_ID, 0, 0, SPECIAL_WORD_ID],
            matrix=rng.normal(size=(4, 5)).astype(np.float32),
        ),
        SentenceEmbedding(
            sid=3,
            tokens=["Kat", "zen", "!"],
            word_ids=[0, 0, 1],
            matrix=rng.normal(size=(3, 5)).astype(np.float32),
        ),
    ]
    return EmbeddingSet(layer=8, dim=5, encoder="toy", sentences=sentences)


class TestEmbeddingFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        es = _embedding_set()
        path = tmp_path / "emb.qeemb"
        write_embeddings(es, path)
        loaded = read_embeddings(path)
        assert loaded.layer == 8 and loaded.dim == 5 and loaded.encoder == "toy"
        for orig, back in zip(es.sentences, loaded.sentences):
            assert back.sid == orig.sid
            assert back.tokens == orig.tokens
            assert back.word_ids == orig.word_ids
            npt.assert_array_equal(back.matrix, orig.matrix)

    def test_write_is_deterministic(self, tmp_path):
        es = _embedding_set()
        a, b = tmp_path / "a.qeemb", tmp_path / "b.qeemb"
        write_embeddings(es, a)
        write_embeddings(es, b)
        assert a.read_bytes() == b.read_bytes()

    def test_magic_checked(self, tmp_path):
        p = tmp_path / "bad.qeemb"
        p.write_bytes(b"NOTQE1" + b"\x00" * 16)
        with pytest.raises(BadMagicError):
            read_embeddings(p)

    def test_truncation_detected(self, tmp_path):
        es = _embedding_set()
        path = tmp_path / "emb.qeemb"
        write_embeddings(es, path)
        data = path.read_bytes()
        path.write_bytes(data[:-7])
        with pytest.raises(TruncatedFileError):
            read_embeddings(path)

    def test_per_sentence_dim_checked(self, tmp_path):
        path = tmp_path / "dim.qeemb"
        header = b'{"dim": 4, "encoder": "x", "layer": 0, "sentences": 1}'
        payload = QEEMB_MAGIC + struct.pack("<I", len(header)) + header
        payload += struct.pack("<III", 0, 1, 3)  # sentence claims dim 3
        with open(path, "wb") as f:
            f.write(payload)
        with pytest.raises(DimMismatchError):
            read_embeddings(path)

    def test_validate_rejects_decreasing_word_ids(self):
        s = SentenceEmbedding(
            sid=0, tokens=["a", "b"], word_ids=[1, 0],
            matrix=np.zeros((2, 2), dtype=np.float32),
        )
        es = EmbeddingSet(layer=0, dim=2, encoder="x", sentences=[s])
        with pytest.raises(DimMismatchError):
            es.validate()

    def test_content_helpers_drop_specials(self):
        es = _embedding_set()
        s = es.get(0)
        assert s.content_word_ids() == [0, 0]
        assert s.content_matrix().shape == (2, 5)

    def test_get_unknown_sid(self):
        assert _embedding_set().get(99) is None


class TestPharaoh:
    def test_parse_sure_and_possible(self):
        wa = parse_pharaoh("0-0 1?2 3-1")
        assert wa.sure == {(0, 0), (3, 1)}
        assert wa.possible == {(0, 0), (3, 1), (1, 2)}

    def test_sure_subset_of_possible_enforced(self):
        wa = WordAlignment(sure=frozenset({(1, 1)}), possible=frozenset())
        assert (1, 1) in wa.possible

    def test_possible_as_sure_flag(self):
        wa = parse_pharaoh("0-0 1?2", possible_as_sure=True)
        assert wa.sure == {(0, 0), (1, 2)}

    def test_bad_item_rejected(self):
        for bad in ("1_2", "a-2", "1-", "-2", "1--2"):
            with pytest.raises(BadPairError):
                parse_pharaoh(bad)

    def test_format_round_trip(self):
        wa = parse_pharaoh("2-3 0-0 1?4")
        assert format_pharaoh(wa) == "0-0 2-3 1?4"
        assert parse_pharaoh(format_pharaoh(wa)) == wa

    def test_file_round_trip(self, tmp_path):
        alignments = [parse_pharaoh("0-0 1-1"), parse_pharaoh(""), parse_pharaoh("2?0")]
        p = tmp_path / "align.txt"
        write_pharaoh_file(alignments, p)
        assert read_pharaoh_file(p) == alignments

    def test_intersection_examples(self):
        a = parse_pharaoh("0-0 1-1")
        b = parse_pharaoh("1-1 2-2")
        assert intersect_alignments(a, b).sure == {(1, 1)}
        disjoint = intersect_alignments(parse_pharaoh("0-0"), parse_pharaoh("1-1"))
        assert disjoint.sure == frozenset()

    def test_intersection_commutes(self):
        a = parse_pharaoh("0-0 1-1 2?2")
        b = parse_pharaoh("1-1 2-2 0?0")
        assert intersect_alignments(a, b) == intersect_alignments(b, a)
