"""Export per-layer hidden states of a pretrained encoder to QEEMB1 files.

The QEEMB1 layout is the embedding interchange format of the scoring
toolkit; it is reproduced here byte-for-byte so the two packages share only
the file format, not code: ``QEEMB1`` magic, a little-endian u32 length
followed by a UTF-8 JSON header with sorted keys, then per sentence a
``<III`` (id, token count, dim) record, length-prefixed UTF-8 token texts,
u32 word indices (``0xFFFFFFFF`` marks special tokens), and the float32
matrix rows.

Layer indexing convention: layer 0 is the embedding output, layers 1..N
are the transformer block outputs.  The convention is recorded in the
export manifest so downstream runs can tell which counting was used.
"""

from __future__ import annotations

import json
import re
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyLine, EncoderUnavailable, LayerOutOfRange, QEBridgeError

QEEMB_MAGIC = b"QEEMB1"
SPECIAL_U32 = 0xFFFFFFFF
DEFAULT_UNK = "⟨unk⟩"  # ⟨unk⟩, matching the scoring toolkit default
LAYER_CONVENTION = "0 = embedding output; 1..num_hidden_layers = block outputs"

# Same word segmentation the scoring toolkit applies before vocabulary
# lookups: runs of word characters, or single non-space symbols.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass(frozen=True)
class ExportRequest:
    input_path: str
    encoder: str
    layers: list[int]
    out_prefix: str
    vocab_path: str | None = None
    unk_symbol: str = DEFAULT_UNK
    batch_size: int = 8

    def __post_init__(self):
        if not self.layers:
            raise LayerOutOfRange("at least one layer must be requested")
        if self.batch_size < 1:
            raise QEBridgeError(f"batch size {self.batch_size} must be >= 1")


@dataclass
class _Sentence:
    sid: int
    tokens: list[str]
    word_ids: list[int]
    rows: dict[int, np.ndarray] = field(default_factory=dict)  # layer -> (n, d)


def _load_tokenizer(encoder: str):
    try:
        from transformers import AutoTokenizer

        tokenizer = AutoTokenizer.from_pretrained(encoder)
    except Exception as exc:  # transformers raises a zoo of types here
        raise EncoderUnavailable(f"{encoder}: {exc}") from exc
    if not tokenizer.is_fast:
        raise EncoderUnavailable(
            f"{encoder}: a fast tokenizer is required for word maps"
        )
    return tokenizer


def _load_model(encoder: str):
    try:
        from transformers import AutoModel

        model = AutoModel.from_pretrained(encoder)
    except Exception as exc:
        raise EncoderUnavailable(f"{encoder}: {exc}") from exc
    model.eval()
    return model


def _split_words(text: str, line_no: int) -> list[str]:
    words = text.split()
    if not words:
        raise EmptyLine(line_no)
    return words


def _map_batch(tokenizer, word_lists: list[list[str]]):
    """Tokenize pre-split words; returns the encoding plus per-sentence
    (token texts, word indices) with special tokens mapped to -1."""
    enc = tokenizer(
        word_lists, is_split_into_words=True, padding=True, return_tensors="pt"
    )
    per_sentence = []
    lengths = enc["attention_mask"].sum(dim=1).tolist()
    for b, n in enumerate(lengths):
        ids = enc["input_ids"][b, :n].tolist()
        tokens = tokenizer.convert_ids_to_tokens(ids)
        word_ids = [
            -1 if w is None else int(w) for w in enc.word_ids(batch_index=b)[:n]
        ]
        per_sentence.append((tokens, word_ids))
    return enc, per_sentence


def _check_onto(word_ids: list[int], word_count: int, line_no: int) -> None:
    content = [w for w in word_ids if w >= 0]
    if sorted(set(content)) != list(range(word_count)):
        raise QEBridgeError(
            f"line {line_no}: subword map does not cover all {word_count} words"
        )


def tokenize_map(text: str, encoder: str) -> tuple[list[str], list[int]]:
    """Subword texts and their whitespace-word indices for one sentence.

    Special tokens carry index -1; real subwords carry the 0-based index of
    the whitespace word they came from.
    """
    tokenizer = _load_tokenizer(encoder)
    words = _split_words(text, 1)
    _, per_sentence = _map_batch(tokenizer, [words])
    tokens, word_ids = per_sentence[0]
    _check_onto(word_ids, len(words), 1)
    return tokens, word_ids


def _load_vocab_words(path: str) -> set[str]:
    """Word set of a ``word<TAB>count`` vocabulary file."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line:
            words.add(line.split("\t", 1)[0])
    return words


def _replace_unknown(text: str, vocab: set[str], unk_symbol: str) -> str:
    tokens = _TOKEN_RE.findall(text)
    kept = [t if t == unk_symbol or t in vocab else unk_symbol for t in tokens]
    return " ".join(kept)


def _write_qeemb(path, layer: int, dim: int, encoder: str,
                 sentences: list[_Sentence]) -> None:
    header = json.dumps(
        {"layer": layer, "dim": dim, "sentences": len(sentences),
         "encoder": encoder},
        sort_keys=True,
        ensure_ascii=False,
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(QEEMB_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        for s in sentences:
            n = len(s.tokens)
            f.write(struct.pack("<III", s.sid, n, dim))
            for tok in s.tokens:
                data = tok.encode("utf-8")
                f.write(struct.pack("<I", len(data)))
                f.write(data)
            encoded = [SPECIAL_U32 if w < 0 else w for w in s.word_ids]
            f.write(struct.pack(f"<{n}I", *encoded) if n else b"")
            f.write(np.ascontiguousarray(s.rows[layer], dtype="<f4").tobytes())


def export_embeddings(req: ExportRequest) -> list[str]:
    """Run the encoder over the input file and write one QEEMB1 file per
    requested layer plus a JSON manifest; returns the written paths."""
    import torch

    tokenizer = _load_tokenizer(req.encoder)
    model = _load_model(req.encoder)
    depth = int(model.config.num_hidden_layers)
    for layer in req.layers:
        if layer < 0 or layer > depth:
            raise LayerOutOfRange(
                f"layer {layer} outside 0..{depth} for {req.encoder}"
            )

    raw_lines = Path(req.input_path).read_text(encoding="utf-8").splitlines()
    vocab = _load_vocab_words(req.vocab_path) if req.vocab_path else None
    word_lists = []
    for line_no, line in enumerate(raw_lines, start=1):
        if vocab is not None:
            line = _replace_unknown(line, vocab, req.unk_symbol)
        word_lists.append(_split_words(line, line_no))

    sentences: list[_Sentence] = []
    for lo in range(0, len(word_lists), req.batch_size):
        chunk = word_lists[lo : lo + req.batch_size]
        enc, per_sentence = _map_batch(tokenizer, chunk)
        with torch.no_grad():
            out = model(**enc, output_hidden_states=True)
        lengths = enc["attention_mask"].sum(dim=1).tolist()
        for b, (tokens, word_ids) in enumerate(per_sentence):
            sid = lo + b
            _check_onto(word_ids, len(chunk[b]), sid + 1)
            sent = _Sentence(sid=sid, tokens=tokens, word_ids=word_ids)
            for layer in req.layers:
                sent.rows[layer] = (
                    out.hidden_states[layer][b, : lengths[b]].numpy()
                )
            sentences.append(sent)

    dim = int(model.config.hidden_size)
    written = []
    layer_files = {}
    for layer in req.layers:
        path = f"{req.out_prefix}.layer{layer}.qeemb"
        _write_qeemb(path, layer, dim, req.encoder, sentences)
        layer_files[str(layer)] = path
        written.append(path)
    manifest_path = f"{req.out_prefix}.manifest.json"
    manifest = {
        "dim": dim,
        "encoder": req.encoder,
        "files": layer_files,
        "layer_convention": LAYER_CONVENTION,
        "layers": list(req.layers),
        "sentences": len(sentences),
        "unk_replaced": vocab is not None,
    }
    Path(manifest_path).write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    written.append(manifest_path)
    return written
