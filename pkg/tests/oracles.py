"""Independent brute-force oracles.

These deliberately avoid the library's own algorithms: the substring
oracle enumerates every substring, the matching oracle solves the
assignment exactly over all one-to-one matchings (bitmask DP), and the
line-scan oracle walks the text character by character.  They exist to
check the production implementations, so they must never import from
ppanalyze.eval.metrics or ppanalyze.corpus internals.
"""
from __future__ import annotations

import re
from functools import lru_cache


def normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.casefold()).strip()


def brute_force_lcs(a: str, b: str) -> int:
    """Longest common contiguous substring by enumerating all substrings."""
    if not a or not b:
        return 0
    best = 0
    for i in range(len(a)):
        for j in range(i + best + 1, len(a) + 1):
            if a[i:j] in b:
                best = j - i
            else:
                break
    return best


def brute_force_lcs_ratio(a: str, b: str) -> float:
    na, nb = normalize(a), normalize(b)
    if not na and not nb:
        return 1.0
    if not na or not nb:
        return 0.0
    return brute_force_lcs(na, nb) / max(len(na), len(nb))


def optimal_matching_credit(pred: list[str], gold: list[str], threshold: float = 0.9) -> float:
    """Maximum total credit over all one-to-one pred/gold matchings.

    A pair is matchable iff its lcs ratio clears the threshold (equal
    normalized strings have ratio 1), and earns its ratio as credit.
    Solved exactly with a bitmask DP over gold assignments.
    """
    weights = [
        [brute_force_lcs_ratio(p, g) for g in gold]
        for p in pred
    ]

    n_gold = len(gold)

    @lru_cache(maxsize=None)
    def best(i: int, used: int) -> float:
        if i == len(pred):
            return 0.0
        value = best(i + 1, used)  # leave pred[i] unmatched
        for j in range(n_gold):
            if used & (1 << j):
                continue
            if weights[i][j] >= threshold:
                value = max(value, weights[i][j] + best(i + 1, used | (1 << j)))
        return value

    result = best(0, 0)
    best.cache_clear()
    return result


def scan_lines(raw_text: str) -> list[tuple[int, int, str]]:
    """Character-walking line scanner: (start, end, text) of each
    trimmed non-blank line, offsets into raw_text."""
    out = []
    line_start = 0
    for pos in range(len(raw_text) + 1):
        at_end = pos == len(raw_text)
        if at_end or raw_text[pos] == "\n":
            lo, hi = line_start, pos
            while lo < hi and raw_text[lo].isspace():
                lo += 1
            while hi > lo and raw_text[hi - 1].isspace():
                hi -= 1
            if lo < hi:
                out.append((lo, hi, raw_text[lo:hi]))
            line_start = pos + 1
    return out
