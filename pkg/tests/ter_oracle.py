"""Exhaustive reference for shift-augmented edit cost.

Independent of the library implementation on purpose: its own Levenshtein,
its own shift enumeration.  Cost of a solution = number of shifts applied +
word edit distance of the final arrangement; the oracle searches all shift
sequences breadth-first, pruning branches that cannot beat the best found.
"""

from functools import lru_cache


def oracle_levenshtein(hyp: tuple, ref: tuple) -> int:
    n, m = len(hyp), len(ref)
    table = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        table[i][0] = i
    for j in range(m + 1):
        table[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i][j] = min(
                table[i - 1][j] + 1,
                table[i][j - 1] + 1,
                table[i - 1][j - 1] + (hyp[i - 1] != ref[j - 1]),
            )
    return table[n][m]


def _all_shifts(state: tuple, ref_spans: frozenset, max_len: int, max_dist: int):
    n = len(state)
    for start in range(n):
        for length in range(1, min(max_len, n - start) + 1):
            block = state[start : start + length]
            if block not in ref_spans:
                continue
            remainder = state[:start] + state[start + length :]
            for pos in range(len(remainder) + 1):
                if pos == start or abs(pos - start) > max_dist:
                    continue
                yield remainder[:pos] + block + remainder[pos:]


def oracle_ter_cost(hyp, ref, max_len: int = 10, max_dist: int = 50) -> int:
    """Minimum of (shifts used + remaining edit distance) over every legal
    shift sequence, found by breadth-first search over arrangements."""
    hyp, ref = tuple(hyp), tuple(ref)
    ref_spans = frozenset(
        ref[k : k + length]
        for length in range(1, min(max_len, len(ref)) + 1)
        for k in range(len(ref) - length + 1)
    )

    @lru_cache(maxsize=None)
    def lev(state):
        return oracle_levenshtein(state, ref)

    best = lev(hyp)
    frontier = {hyp}
    seen = {hyp}
    shifts = 0
    while frontier and shifts + 1 < best:
        shifts += 1
        new_frontier = set()
        for state in frontier:
            for shifted in _all_shifts(state, ref_spans, max_len, max_dist):
                if shifted in seen:
                    continue
                seen.add(shifted)
                new_frontier.add(shifted)
                cost = shifts + lev(shifted)
                if cost < best:
                    best = cost
        frontier = new_frontier
    return best
