"""Readers and writers for every file that crosses the toolkit boundary.

Formats:

* QE datasets: TSV with a header naming ``id``, ``source``, ``hypothesis``
  and optionally ``post_edit`` and ``gold_score``.
* Embedding files (``QEEMB1``): magic ``QEEMB1`` | u32-LE-length-prefixed
  UTF-8 JSON manifest ``{"layer", "dim", "sentences", "encoder"}`` | per
  sentence: sid (u32 LE), subword count n (u32 LE), dim d (u32 LE), n
  length-prefixed UTF-8 token texts, n word indices (u32 LE, 0xFFFFFFFF
  marks special tokens), n*d IEEE-754 binary32 LE values row-major.
* Word alignments: Pharaoh text, ``i-j`` for sure pairs and ``i?j`` for
  possible-only pairs, 0-based indices.

Vocabulary TSV lives with the vocabulary builder in :mod:`embqe.vocab`.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable

import numpy as np

from .errors import (
    BadMagicError,
    BadPairError,
    DatasetFormatError,
    DimMismatchError,
    MissingColumnError,
    NonNumericScoreError,
    RaggedRowError,
    TruncatedFileError,
)

QEEMB_MAGIC = b"QEEMB1"
SPECIAL_WORD_ID = -1
_SPECIAL_U32 = 0xFFFFFFFF

# Column-name presets for converting WMT-style files to the canonical header.
WMT_COLUMN_MAP = {
    "index": "id",
    "segid": "id",
    "original": "source",
    "translation": "hypothesis",
    "mt": "hypothesis",
    "pe": "post_edit",
    "mean": "gold_score",
    "hter": "gold_score",
}

_REQUIRED_COLUMNS = ("id", "source", "hypothesis")
_OPTIONAL_COLUMNS = ("post_edit", "gold_score")


# --- QE datasets -----------------------------------------------------------

@dataclass
class QERecord:
    """One source/hypothesis pair with optional post-edit and gold score."""

    id: int
    source: str
    hypothesis: str
    post_edit: str | None = None
    gold_score: float | None = None


def read_dataset(path, column_map: dict[str, str] | None = None) -> list[QERecord]:
    """Read a TSV dataset into records, preserving text byte-exactly.

    ``column_map`` renames file columns to the canonical names before
    interpretation (see ``WMT_COLUMN_MAP``).  Unknown columns are ignored.
    """
    raw = Path(path).read_bytes().decode("utf-8")
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise MissingColumnError("empty file has no header")

    header = [_strip_eol(c) for c in lines[0].split("\t")]
    if column_map:
        header = [column_map.get(c, c) for c in header]
    positions = {name: i for i, name in enumerate(header)}
    for name in _REQUIRED_COLUMNS:
        if name not in positions:
            raise MissingColumnError(f"dataset header lacks column {name!r}")

    records: list[QERecord] = []
    seen_ids: set[int] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        fields = [_strip_eol(f) for f in line.split("\t")]
        if len(fields) != len(header):
            raise RaggedRowError(line_no)
        try:
            rid = int(fields[positions["id"]])
        except ValueError:
            raise DatasetFormatError(f"line {line_no}: id is not an integer")
        if rid in seen_ids:
            raise DatasetFormatError(f"line {line_no}: duplicate id {rid}")
        seen_ids.add(rid)
        hypothesis = fields[positions["hypothesis"]]
        if hypothesis == "":
            raise DatasetFormatError(f"line {line_no}: empty hypothesis")
        post_edit = None
        if "post_edit" in positions:
            post_edit = fields[positions["post_edit"]]
        gold = None
        if "gold_score" in positions:
            text = fields[positions["gold_score"]]
            if text != "":
                try:
                    gold = float(text)
                except ValueError:
                    raise NonNumericScoreError(line_no, text)
        records.append(
            QERecord(
                id=rid,
                source=fields[positions["source"]],
                hypothesis=hypothesis,
                post_edit=post_edit,
                gold_score=gold,
            )
        )
    return records


def write_dataset(records: Iterable[QERecord], path) -> None:
    """Write records as a canonical TSV, emitting only the populated columns."""
    records = list(records)
    has_pe = any(r.post_edit is not None for r in records)
    has_gold = any(r.gold_score is not None for r in records)
    columns = list(_REQUIRED_COLUMNS)
    if has_pe:
        columns.append("post_edit")
    if has_gold:
        columns.append("gold_score")
    out = ["\t".join(columns)]
    for r in records:
        row = [str(r.id), r.source, r.hypothesis]
        if has_pe:
            row.append(r.post_edit if r.post_edit is not None else "")
        if has_gold:
            row.append(repr(r.gold_score) if r.gold_score is not None else "")
        out.append("\t".join(row))
    Path(path).write_text("\n".join(out) + "\n", encoding="utf-8")


def _strip_eol(text: str) -> str:
    return text.rstrip("\r\n")


# --- embedding sets --------------------------------------------------------

@dataclass
class SentenceEmbedding:
    """Per-sentence token texts, subword-to-word map and embedding matrix."""

    sid: int
    tokens: list[str]
    word_ids: list[int]
    matrix: np.ndarray  # (n, dim) float32

    def content_mask(self) -> np.ndarray:
        """Boolean mask selecting non-special rows."""
        return np.asarray(self.word_ids) != SPECIAL_WORD_ID

    def content_matrix(self) -> np.ndarray:
        return self.matrix[self.content_mask()]

    def content_word_ids(self) -> list[int]:
        return [w for w in self.word_ids if w != SPECIAL_WORD_ID]


@dataclass
class EmbeddingSet:
    """All sentence embeddings exported for one layer of one encoder."""

    layer: int
    dim: int
    encoder: str
    sentences: list[SentenceEmbedding] = field(default_factory=list)

    def __post_init__(self):
        self._by_id = {s.sid: s for s in self.sentences}

    def get(self, sid: int) -> SentenceEmbedding | None:
        return self._by_id.get(sid)

    def validate(self) -> None:
        """Check per-sentence shape and word-map invariants."""
        for s in self.sentences:
            n = len(s.tokens)
            if len(s.word_ids) != n or s.matrix.shape[0] != n:
                raise DimMismatchError(
                    f"sentence {s.sid}: tokens/word map/matrix lengths disagree"
                )
            if s.matrix.ndim != 2 or s.matrix.shape[1] != self.dim:
                raise DimMismatchError(
                    f"sentence {s.sid}: matrix dim {s.matrix.shape} vs manifest dim {self.dim}"
                )
            content = s.content_word_ids()
            if content:
                if content[0] != 0:
                    raise DimMismatchError(
                        f"sentence {s.sid}: word indices must start at 0"
                    )
                if any(b < a for a, b in zip(content, content[1:])):
                    raise DimMismatchError(
                        f"sentence {s.sid}: word indices must be non-decreasing"
                    )


def write_embeddings(es: EmbeddingSet, path) -> None:
    """Serialize an EmbeddingSet to the QEEMB1 binary layout."""
    es.validate()
    header = json.dumps(
        {
            "layer": es.layer,
            "dim": es.dim,
            "sentences": len(es.sentences),
            "encoder": es.encoder,
        },
        sort_keys=True,
        ensure_ascii=False,
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(QEEMB_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for s in es.sentences:
            n = len(s.tokens)
            f.write(struct.pack("<III", s.sid, n, es.dim))
            for tok in s.tokens:
                data = tok.encode("utf-8")
                f.write(struct.pack("<I", len(data)))
                f.write(data)
            encoded = [
                _SPECIAL_U32 if w == SPECIAL_WORD_ID else w for w in s.word_ids
            ]
            f.write(struct.pack(f"<{n}I", *encoded) if n else b"")
            f.write(np.ascontiguousarray(s.matrix, dtype="<f4").tobytes())


def read_embeddings(path) -> EmbeddingSet:
    """Load a QEEMB1 file written by :func:`write_embeddings` or the bridge."""
    with open(path, "rb") as f:
        magic = f.read(len(QEEMB_MAGIC))
        if magic != QEEMB_MAGIC:
            raise BadMagicError(f"{path}: expected magic {QEEMB_MAGIC!r}")
        header_len = struct.unpack("<I", _read_exact(f, 4))[0]
        try:
            manifest = json.loads(_read_exact(f, header_len).decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BadMagicError(f"{path}: unreadable manifest: {exc}")
        dim = int(manifest["dim"])
        sentences = []
        for _ in range(int(manifest["sentences"])):
            sid, n, d = struct.unpack("<III", _read_exact(f, 12))
            if d != dim:
                raise DimMismatchError(
                    f"sentence {sid}: dim {d} vs manifest dim {dim}"
                )
            tokens = []
            for _ in range(n):
                tok_len = struct.unpack("<I", _read_exact(f, 4))[0]
                tokens.append(_read_exact(f, tok_len).decode("utf-8"))
            raw_ids = struct.unpack(f"<{n}I", _read_exact(f, 4 * n)) if n else ()
            word_ids = [
                SPECIAL_WORD_ID if w == _SPECIAL_U32 else w for w in raw_ids
            ]
            values = np.frombuffer(
                _read_exact(f, 4 * n * dim), dtype="<f4"
            ).reshape(n, dim)
            sentences.append(
                SentenceEmbedding(
                    sid=sid, tokens=tokens, word_ids=word_ids, matrix=values
                )
            )
    es = EmbeddingSet(
        layer=int(manifest["layer"]),
        dim=dim,
        encoder=str(manifest["encoder"]),
        sentences=sentences,
    )
    es.validate()
    return es


def _read_exact(f: BinaryIO, count: int) -> bytes:
    data = f.read(count)
    if len(data) != count:
        raise TruncatedFileError(f"wanted {count} bytes, file ended after {len(data)}")
    return data


# --- word alignments -------------------------------------------------------

@dataclass
class WordAlignment:
    """Sure and possible word-index pairs; sure is always a subset of possible."""

    sure: frozenset[tuple[int, int]]
    possible: frozenset[tuple[int, int]]

    def __post_init__(self):
        self.sure = frozenset(self.sure)
        self.possible = frozenset(self.possible) | self.sure


_PAIR_RE = re.compile(r"^(\d+)([-?])(\d+)$")


def parse_pharaoh(line: str, possible_as_sure: bool = False) -> WordAlignment:
    """Parse one Pharaoh line; ``i-j`` items are sure, ``i?j`` possible-only.

    With ``possible_as_sure`` every item is treated as sure (for gold files
    that do not distinguish the two).
    """
    sure = set()
    possible = set()
    for item in line.split():
        m = _PAIR_RE.match(item)
        if not m:
            raise BadPairError(item)
        pair = (int(m.group(1)), int(m.group(3)))
        if m.group(2) == "-" or possible_as_sure:
            sure.add(pair)
        possible.add(pair)
    return WordAlignment(sure=frozenset(sure), possible=frozenset(possible))


def format_pharaoh(wa: WordAlignment) -> str:
    """Render an alignment back to Pharaoh text, sorted for determinism."""
    items = [f"{i}-{j}" for i, j in sorted(wa.sure)]
    items += [f"{i}?{j}" for i, j in sorted(wa.possible - wa.sure)]
    return " ".join(items)


def read_pharaoh_file(path, possible_as_sure: bool = False) -> list[WordAlignment]:
    """One alignment per line, in file order."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return [parse_pharaoh(line, possible_as_sure) for line in lines]


def write_pharaoh_file(alignments: Iterable[WordAlignment], path) -> None:
    lines = [format_pharaoh(wa) for wa in alignments]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def intersect_alignments(forward: WordAlignment, backward: WordAlignment) -> WordAlignment:
    """Keep only pairs present in both directions (both given source-to-target)."""
    return WordAlignment(
        sure=forward.sure & backward.sure,
        possible=forward.possible & backward.possible,
    )
