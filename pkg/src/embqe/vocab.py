"""Target-language vocabulary construction and untranslated-word replacement.

A hypothesis word that never clears the frequency threshold in a monolingual
corpus of the target language is assumed untranslated and replaced with the
unknown token before the hypothesis is encoded, so the replacement is visible
to the embedding model.
"""

from __future__ import annotations

import re
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DatasetFormatError, InvalidEncodingError

DEFAULT_UNK = "⟨unk⟩"  # ⟨unk⟩; override to match the encoder in use

# Word characters stay together; every other non-space character is detached
# as a single-character token.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


@dataclass(frozen=True)
class TokenizerPolicy:
    """Deterministic whitespace-plus-punctuation word tokenization."""

    lowercase: bool = False

    @property
    def tag(self) -> str:
        return "ws-punct-lc" if self.lowercase else "ws-punct"

    def tokenize(self, text: str) -> list[str]:
        if self.lowercase:
            text = text.lower()
        return _TOKEN_RE.findall(text)


DEFAULT_POLICY = TokenizerPolicy()


def policy_from_tag(tag: str) -> TokenizerPolicy:
    """Reconstruct the tokenizer a Vocabulary was built with from its tag."""
    if tag == "ws-punct":
        return TokenizerPolicy(lowercase=False)
    if tag == "ws-punct-lc":
        return TokenizerPolicy(lowercase=True)
    raise DatasetFormatError(f"unknown tokenizer policy tag {tag!r}")


@dataclass
class Vocabulary:
    """Word counts plus the membership rule ``cmp(count, threshold)``."""

    counts: Counter
    threshold: int = 2
    cmp: str = "gt"  # "gt": count > threshold, "ge": count >= threshold
    policy_tag: str = DEFAULT_POLICY.tag

    def __post_init__(self):
        if self.threshold < 1:
            raise DatasetFormatError("vocabulary threshold must be >= 1")
        if self.cmp not in ("gt", "ge"):
            raise DatasetFormatError(f"unknown comparison {self.cmp!r}")

    def __contains__(self, word: str) -> bool:
        count = self.counts.get(word, 0)
        return count > self.threshold if self.cmp == "gt" else count >= self.threshold

    def members(self) -> set[str]:
        return {w for w in self.counts if w in self}


@dataclass
class ReplacementResult:
    """Word list after substitution plus a per-word replacement mask."""

    tokens: list[str]
    replaced_mask: list[bool]
    unk_symbol: str


def count_words(
    lines: Iterable[str | bytes],
    policy: TokenizerPolicy = DEFAULT_POLICY,
    first_line: int = 1,
) -> Counter:
    """Count word tokens over a line stream in one pass.

    Bytes lines are decoded as UTF-8; a decode failure raises
    InvalidEncodingError with the 1-based line number.
    """
    counts: Counter = Counter()
    for line_no, line in enumerate(lines, start=first_line):
        if isinstance(line, bytes):
            try:
                line = line.decode("utf-8")
            except UnicodeDecodeError:
                raise InvalidEncodingError(line_no)
        counts.update(policy.tokenize(line))
    return counts


def build_vocabulary(
    lines: Iterable[str | bytes],
    threshold: int = 2,
    cmp: str = "gt",
    policy: TokenizerPolicy = DEFAULT_POLICY,
) -> Vocabulary:
    """Single streaming pass over a corpus; memory is bounded by the number
    of distinct words."""
    return Vocabulary(
        counts=count_words(lines, policy),
        threshold=threshold,
        cmp=cmp,
        policy_tag=policy.tag,
    )


def build_vocabulary_sharded(
    lines: Iterable[str | bytes],
    threshold: int = 2,
    cmp: str = "gt",
    policy: TokenizerPolicy = DEFAULT_POLICY,
    shard_lines: int = 100_000,
    max_workers: int = 4,
) -> Vocabulary:
    """Count fixed-size line shards in a worker pool and merge in shard order.

    Counts are integers, so the merged result equals a sequential pass
    exactly regardless of scheduling.
    """
    totals: Counter = Counter()
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = []
        for start, shard in _sharded(lines, shard_lines):
            futures.append(pool.submit(count_words, shard, policy, start))
        for future in futures:
            totals.update(future.result())
    return Vocabulary(
        counts=totals, threshold=threshold, cmp=cmp, policy_tag=policy.tag
    )


def _sharded(lines, shard_lines: int) -> Iterator[tuple[int, list]]:
    shard: list = []
    start = 1
    for i, line in enumerate(lines, start=1):
        shard.append(line)
        if len(shard) == shard_lines:
            yield start, shard
            shard = []
            start = i + 1
    if shard:
        yield start, shard


def replace_untranslated(
    words: list[str], vocab: Vocabulary, unk_symbol: str = DEFAULT_UNK
) -> ReplacementResult:
    """Replace out-of-vocabulary words with ``unk_symbol``.

    The unknown symbol itself always counts as in-vocabulary, which makes
    the substitution idempotent.
    """
    tokens = []
    mask = []
    for w in words:
        known = w == unk_symbol or w in vocab
        tokens.append(w if known else unk_symbol)
        mask.append(not known)
    return ReplacementResult(tokens=tokens, replaced_mask=mask, unk_symbol=unk_symbol)


# --- vocabulary files ------------------------------------------------------

def write_vocabulary(vocab: Vocabulary, path) -> None:
    """One ``word<TAB>count`` per line, sorted by descending count then word."""
    entries = sorted(vocab.counts.items(), key=lambda kv: (-kv[1], kv[0]))
    lines = [f"{word}\t{count}" for word, count in entries]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_vocabulary(
    path,
    threshold: int = 2,
    cmp: str = "gt",
    policy: TokenizerPolicy = DEFAULT_POLICY,
) -> Vocabulary:
    """Load a vocabulary TSV; the membership rule is supplied by the caller
    because the file stores raw counts only."""
    counts: Counter = Counter()
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DatasetFormatError(f"vocabulary line {line_no}: expected word<TAB>count")
        try:
            counts[parts[0]] = int(parts[1])
        except ValueError:
            raise DatasetFormatError(f"vocabulary line {line_no}: bad count {parts[1]!r}")
    return Vocabulary(counts=counts, threshold=threshold, cmp=cmp, policy_tag=policy.tag)
