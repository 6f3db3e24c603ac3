"""Relaxed span matching and macro-F1 scoring.

Span pairs are matched in two passes: exact matches (case-folded,
whitespace-collapsed) first, then, among the leftovers, pairs whose
longest-common-substring ratio clears the threshold, greedily in
descending ratio order.  A relaxed match earns fractional true-positive
credit equal to the ratio; below-threshold pairs never match.

F1 is 2*tp / (2*tp + fp + fn) however precision and recall are oriented;
per-sample scores use the empty-gold convention (empty gold + empty
prediction scores 1, empty gold + non-empty prediction scores 0), which
makes the f1-empty facet well-defined.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Sequence

DEFAULT_THRESHOLD = 0.9


def normalize_text(text: str) -> str:
    """Case-fold and collapse whitespace runs to single spaces."""
    return re.sub(r"\s+", " ", text.casefold()).strip()


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common contiguous substring. O(len(a)*len(b))."""
    if not a or not b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    best = 0
    for ca in a:
        cur = [0] * (len(b) + 1)
        for j, cb in enumerate(b, start=1):
            if ca == cb:
                cur[j] = prev[j - 1] + 1
                if cur[j] > best:
                    best = cur[j]
        prev = cur
    return best


def lcs_ratio(a: str, b: str, denominator: str = "max") -> float:
    """Longest-common-substring ratio of two texts in [0, 1].

    Texts are normalized (case-fold, whitespace collapse) first.  Both
    empty -> 1.0; exactly one empty -> 0.0.  The denominator mode is a
    knob: "max" (default, symmetric), "gold" (second argument's length),
    or "mean" (average of both lengths).
    """
    na, nb = normalize_text(a), normalize_text(b)
    if not na and not nb:
        return 1.0
    if not na or not nb:
        return 0.0
    length = lcs_length(na, nb)
    if denominator == "max":
        denom = max(len(na), len(nb))
    elif denominator == "gold":
        denom = len(nb)
    elif denominator == "mean":
        denom = (len(na) + len(nb)) / 2
    else:
        raise ValueError(f"unknown denominator mode: {denominator!r}")
    return length / denom


@dataclass(frozen=True)
class MatchOutcome:
    tp: float
    fp: int
    fn: int
    pairs: tuple[tuple[str, str, float], ...]  # (pred, gold, credit)


def match_spans(pred: Sequence[str], gold: Sequence[str],
                threshold: float = DEFAULT_THRESHOLD,
                denominator: str = "max") -> MatchOutcome:
    """Match predicted spans against gold spans, one-to-one.

    Pass 1 pairs exact (normalized) text matches with credit 1; pass 2
    pairs the remainder greedily in descending lcs-ratio order (ties in
    pair order) where the ratio clears the threshold, with credit equal
    to the ratio.  Unmatched predictions are fp, unmatched gold fn.
    """
    if not 0 < threshold <= 1:
        raise ValueError("threshold must be in (0, 1]")
    pred_norm = [normalize_text(p) for p in pred]
    gold_norm = [normalize_text(g) for g in gold]
    pred_free = set(range(len(pred)))
    gold_free = set(range(len(gold)))
    pairs: list[tuple[str, str, float]] = []

    for i in sorted(pred_free):
        for j in sorted(gold_free):
            if pred_norm[i] == gold_norm[j]:
                pairs.append((pred[i], gold[j], 1.0))
                pred_free.discard(i)
                gold_free.discard(j)
                break

    candidates = []
    for i in sorted(pred_free):
        for j in sorted(gold_free):
            ratio = lcs_ratio(pred[i], gold[j], denominator)
            if ratio >= threshold:
                candidates.append((-ratio, i, j))
    candidates.sort()
    for neg_ratio, i, j in candidates:
        if i in pred_free and j in gold_free:
            pairs.append((pred[i], gold[j], -neg_ratio))
            pred_free.discard(i)
            gold_free.discard(j)

    return MatchOutcome(
        tp=sum(credit for _, _, credit in pairs),
        fp=len(pred_free),
        fn=len(gold_free),
        pairs=tuple(pairs),
    )


def prf1(tp: float, fp: float, fn: float) -> tuple[float, float, float]:
    """Precision, recall, F1.  Degenerate denominators score 0."""
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    if precision + recall == 0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def sample_f1(pred: Sequence[str], gold: Sequence[str],
              threshold: float = DEFAULT_THRESHOLD,
              denominator: str = "max",
              outcome: Optional[MatchOutcome] = None) -> float:
    """Per-sample F1 with the empty-gold convention."""
    if not gold:
        return 1.0 if not pred else 0.0
    if outcome is None:
        outcome = match_spans(pred, gold, threshold, denominator)
    return prf1(outcome.tp, outcome.fp, outcome.fn)[2]


@dataclass(frozen=True)
class MacroScores:
    f1: Optional[float]
    f1_n: Optional[float]    # over samples with non-empty gold
    f1_e: Optional[float]    # over samples with empty gold
    per_sample: tuple[float, ...] = ()


def macro_f1(samples: Sequence[tuple[Sequence[str], Sequence[str]]],
             threshold: float = DEFAULT_THRESHOLD,
             denominator: str = "max") -> MacroScores:
    """Macro-average per-sample F1, plus the non-empty / empty facets.

    A facet with no samples is reported as None (absent), never as 0.
    """
    scores: list[float] = []
    nonempty: list[float] = []
    empty: list[float] = []
    for pred, gold in samples:
        s = sample_f1(pred, gold, threshold, denominator)
        scores.append(s)
        (nonempty if gold else empty).append(s)

    def mean(xs: list[float]) -> Optional[float]:
        return sum(xs) / len(xs) if xs else None

    return MacroScores(mean(scores), mean(nonempty), mean(empty), tuple(scores))


def score_classification(pred: Sequence[tuple[str, str]],
                         gold: Sequence[tuple[str, str]],
                         taxonomy, kind: str,
                         threshold: float = DEFAULT_THRESHOLD,
                         denominator: str = "max") -> MatchOutcome:
    """Score (entity text, term) predictions against gold groundings.

    A prediction is a true positive iff its entity text matches a gold
    entity (exact or relaxed, as in match_spans) AND its term resolves
    to the same taxonomy IRI as the gold term; the credit is the entity
    match credit.  Unresolved predicted terms count as false positives.
    """
    def resolve(term: str) -> Optional[str]:
        from ..taxonomy import UnresolvedTermError
        try:
            return taxonomy.resolve_term(term, kind).iri
        except UnresolvedTermError:
            return None

    pred_iris = [resolve(term) for _, term in pred]
    gold_iris = [resolve(term) for _, term in gold]
    pred_norm = [normalize_text(text) for text, _ in pred]
    gold_norm = [normalize_text(text) for text, _ in gold]

    pred_free = set(range(len(pred)))
    gold_free = set(range(len(gold)))
    pairs: list[tuple[str, str, float]] = []

    for i in sorted(pred_free):
        if pred_iris[i] is None:
            continue
        for j in sorted(gold_free):
            if pred_iris[i] == gold_iris[j] and pred_norm[i] == gold_norm[j]:
                pairs.append((pred[i][0], gold[j][0], 1.0))
                pred_free.discard(i)
                gold_free.discard(j)
                break

    candidates = []
    for i in sorted(pred_free):
        if pred_iris[i] is None:
            continue
        for j in sorted(gold_free):
            if pred_iris[i] != gold_iris[j]:
                continue
            ratio = lcs_ratio(pred[i][0], gold[j][0], denominator)
            if ratio >= threshold:
                candidates.append((-ratio, i, j))
    candidates.sort()
    for neg_ratio, i, j in candidates:
        if i in pred_free and j in gold_free:
            pairs.append((pred[i][0], gold[j][0], -neg_ratio))
            pred_free.discard(i)
            gold_free.discard(j)

    return MatchOutcome(
        tp=sum(credit for _, _, credit in pairs),
        fp=len(pred_free),
        fn=len(gold_free),
        pairs=tuple(pairs),
    )
