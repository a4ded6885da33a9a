"""Translation edit rate with block shifts, and HTER labeling.

Edits transform the hypothesis into the reference: insertions add words
missing from the hypothesis, deletions drop extra ones, substitutions
replace mismatches, and a shift moves one contiguous hypothesis block to a
new position for a flat cost of 1.  A shift is legal when the moved block
also appears contiguously in the reference, its length and travel distance
are within the configured limits, and it actually moves.

The shift sequence is found by best-first search over hypothesis
arrangements: each shift costs 1, a finished arrangement costs its
remaining word-level Levenshtein distance, and branches that cannot beat
the incumbent are pruned.  A single-step greedy pass (always applying the
shift with the largest distance drop) is not enough — from hyp ``b a d c``
vs ref ``a b c d`` no first shift drops the distance by more than 1, and
only one of the tied choices leads to the attainable total of 2.  On short
inputs the search exhausts the space and the result is the true minimum;
on long inputs ``search_budget`` caps the number of distinct arrangements
whose distance is evaluated and the best sequence found within the budget
is used.

Comparison is case-insensitive unless configured otherwise; tokenization
is the caller's job.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import EmptyReferenceError


@dataclass(frozen=True)
class TERConfig:
    case_sensitive: bool = False
    max_shift_distance: int = 50
    max_shift_length: int = 10
    search_budget: int = 5_000  # distinct arrangements evaluated before settling


@dataclass(frozen=True)
class TERResult:
    insertions: int
    deletions: int
    substitutions: int
    shifts: int
    ref_length: int
    ter: float

    @property
    def total_edits(self) -> int:
        return self.insertions + self.deletions + self.substitutions + self.shifts


def _fold(words: Sequence[str], cfg: TERConfig) -> tuple[str, ...]:
    if cfg.case_sensitive:
        return tuple(words)
    return tuple(w.lower() for w in words)


def levenshtein(hyp: Sequence[str], ref: Sequence[str]) -> int:
    """Word-level edit distance with unit insert/delete/substitute costs."""
    # A shared prefix or suffix never changes the distance; trimming it
    # shrinks the table, which matters when this runs inside the shift search.
    n, m = len(hyp), len(ref)
    lo = 0
    while lo < n and lo < m and hyp[lo] == ref[lo]:
        lo += 1
    hi = 0
    while hi < n - lo and hi < m - lo and hyp[n - 1 - hi] == ref[m - 1 - hi]:
        hi += 1
    hyp = hyp[lo : n - hi]
    ref = ref[lo : m - hi]
    if len(hyp) > len(ref):  # iterate over the shorter side's columns
        hyp, ref = ref, hyp
    prev = list(range(len(hyp) + 1))
    for r in ref:
        cur = [prev[0] + 1]
        for j, h in enumerate(hyp, start=1):
            cur.append(min(prev[j] + 1, cur[-1] + 1, prev[j - 1] + (h != r)))
        prev = cur
    return prev[-1]


def _edit_counts(hyp: Sequence[str], ref: Sequence[str]) -> tuple[int, int, int]:
    """(insertions, deletions, substitutions) of one optimal edit script.

    Breakdown ties are resolved deterministically: match, then substitution,
    then deletion of a hypothesis word, then insertion.
    """
    n, m = len(hyp), len(ref)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        row, above = dp[i], dp[i - 1]
        for j in range(1, m + 1):
            row[j] = min(above[j] + 1, row[j - 1] + 1,
                         above[j - 1] + (hyp[i - 1] != ref[j - 1]))
    ins = dels = subs = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]):
            subs += hyp[i - 1] != ref[j - 1]
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return ins, dels, subs


def _legal_shifts(
    hyp: tuple, ref: tuple, cfg: TERConfig
) -> Iterator[tuple[int, int, int, tuple]]:
    """Yield (start, length, insert position, shifted hypothesis)."""
    ref_spans = {
        ref[k : k + length]
        for length in range(1, min(cfg.max_shift_length, len(ref)) + 1)
        for k in range(len(ref) - length + 1)
    }
    for start in range(len(hyp)):
        for length in range(1, min(cfg.max_shift_length, len(hyp) - start) + 1):
            block = hyp[start : start + length]
            if block not in ref_spans:
                continue
            rest = hyp[:start] + hyp[start + length :]
            for pos in range(len(rest) + 1):
                if pos == start or abs(pos - start) > cfg.max_shift_distance:
                    continue
                yield start, length, pos, rest[:pos] + block + rest[pos:]


def ter(
    hyp_words: Sequence[str], ref_words: Sequence[str], cfg: TERConfig | None = None
) -> TERResult:
    """Shift-aware translation edit rate of a hypothesis against a reference."""
    cfg = cfg or TERConfig()
    if len(ref_words) == 0:
        raise EmptyReferenceError("reference must contain at least one word")
    # Intern words as small integers: arrangements are hashed and compared
    # many times during the search.
    codes: dict[str, int] = {}
    ref = tuple(codes.setdefault(w, len(codes)) for w in _fold(ref_words, cfg))
    start = tuple(codes.setdefault(w, len(codes)) for w in _fold(hyp_words, cfg))

    lev_memo: dict[tuple, int] = {}

    def lev_to_ref(state: tuple) -> int:
        if state not in lev_memo:
            lev_memo[state] = levenshtein(state, ref)
        return lev_memo[state]

    # Shifts never change the hypothesis length, so the remaining edit
    # distance of any arrangement is at least the length difference.
    floor = abs(len(start) - len(ref))
    best_cost = lev_to_ref(start)
    best_state, best_shifts = start, 0
    # Heap entries order by total cost, then by fewer shifts, then by
    # discovery order, which makes the search fully deterministic.
    frontier = [(best_cost, 0, 0, start)]
    shifts_to_reach = {start: 0}
    tick = 0
    while frontier and len(lev_memo) < cfg.search_budget:
        _, done_shifts, _, state = heapq.heappop(frontier)
        if done_shifts + 1 + floor >= best_cost:
            continue  # one-more-shift arrangements cannot beat the incumbent
        for _, _, _, shifted in _legal_shifts(state, ref, cfg):
            n_shifts = done_shifts + 1
            previous = shifts_to_reach.get(shifted)
            if previous is not None and previous <= n_shifts:
                continue
            shifts_to_reach[shifted] = n_shifts
            cost = n_shifts + lev_to_ref(shifted)
            if cost < best_cost:
                best_cost, best_state, best_shifts = cost, shifted, n_shifts
            tick += 1
            heapq.heappush(frontier, (cost, n_shifts, tick, shifted))
            if len(lev_memo) >= cfg.search_budget:
                break
    ins, dels, subs = _edit_counts(best_state, ref)
    return TERResult(
        insertions=ins,
        deletions=dels,
        substitutions=subs,
        shifts=best_shifts,
        ref_length=len(ref),
        ter=(best_shifts + ins + dels + subs) / len(ref),
    )


def hter_label(
    mt_words: Sequence[str],
    post_edit_words: Sequence[str],
    cfg: TERConfig | None = None,
) -> float:
    """TER of machine output against its human post-edit; unclamped, may exceed 1."""
    return ter(mt_words, post_edit_words, cfg).ter
