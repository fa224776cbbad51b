"""Exact-span scoring: micro-averaged precision/recall/F1 plus split gaps.

A mention counts as correct only when (label, start, end) all match.
Micro-averaging sums tp/fp/fn over every document before dividing, so
per-document counts form a monoid and can be merged in any grouping.
Internal math is full precision; rounding to 4 decimals (half-up) happens
only at display time.
"""
from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Mapping, Sequence

from .brat import EntityMention


class TrackMismatch(ValueError):
    """Reports being compared do not come from the same track/language."""


class DocumentMismatch(Warning):
    """A document id is present in predictions but absent from gold."""


def round_half_up(value: float, places: int = 4) -> float:
    """Decimal half-up rounding; 0.00005 goes to 0.0001, not banker's 0.0."""
    q = Decimal(1).scaleb(-places)
    return float(Decimal(repr(float(value))).quantize(q, rounding=ROUND_HALF_UP))


def f1_from_pr(p: float, r: float) -> float:
    """Harmonic mean 2pr/(p+r); 0 when p+r == 0. Full precision."""
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass
class EvalCounts:
    """Per-label tp/fp/fn tallies; the aggregate is always their sum.

    Addition merges two tallies, the default instance is the identity.
    """

    tp_by_label: Counter = field(default_factory=Counter)
    fp_by_label: Counter = field(default_factory=Counter)
    fn_by_label: Counter = field(default_factory=Counter)
    duplicate_gold: int = 0
    duplicate_pred: int = 0

    @property
    def tp(self) -> int:
        return sum(self.tp_by_label.values())

    @property
    def fp(self) -> int:
        return sum(self.fp_by_label.values())

    @property
    def fn(self) -> int:
        return sum(self.fn_by_label.values())

    def labels(self) -> tuple[str, ...]:
        seen = set(self.tp_by_label) | set(self.fp_by_label) | set(self.fn_by_label)
        return tuple(sorted(seen))

    def for_label(self, label: str) -> tuple[int, int, int]:
        return (self.tp_by_label[label], self.fp_by_label[label],
                self.fn_by_label[label])

    def __add__(self, other: "EvalCounts") -> "EvalCounts":
        if not isinstance(other, EvalCounts):
            return NotImplemented
        merged = EvalCounts(duplicate_gold=self.duplicate_gold + other.duplicate_gold,
                            duplicate_pred=self.duplicate_pred + other.duplicate_pred)
        merged.tp_by_label.update(self.tp_by_label)
        merged.tp_by_label.update(other.tp_by_label)
        merged.fp_by_label.update(self.fp_by_label)
        merged.fp_by_label.update(other.fp_by_label)
        merged.fn_by_label.update(self.fn_by_label)
        merged.fn_by_label.update(other.fn_by_label)
        return merged

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EvalCounts):
            return NotImplemented
        return ((+self.tp_by_label, +self.fp_by_label, +self.fn_by_label,
                 self.duplicate_gold, self.duplicate_pred)
                == (+other.tp_by_label, +other.fp_by_label, +other.fn_by_label,
                    other.duplicate_gold, other.duplicate_pred))


def _dedup_keys(mentions: Iterable[EntityMention]) -> tuple[set, int]:
    keys = [(m.label, m.start, m.end) for m in mentions]
    unique = set(keys)
    return unique, len(keys) - len(unique)


def match_exact(gold: Sequence[EntityMention],
                pred: Sequence[EntityMention]) -> EvalCounts:
    """Count exact (label, start, end) matches within one document.

    Duplicate identical mentions on either side collapse to one and bump
    the corresponding warning tally.
    """
    gold_keys, gold_dups = _dedup_keys(gold)
    pred_keys, pred_dups = _dedup_keys(pred)
    counts = EvalCounts(duplicate_gold=gold_dups, duplicate_pred=pred_dups)
    for key in gold_keys & pred_keys:
        counts.tp_by_label[key[0]] += 1
    for key in pred_keys - gold_keys:
        counts.fp_by_label[key[0]] += 1
    for key in gold_keys - pred_keys:
        counts.fn_by_label[key[0]] += 1
    return counts


def micro_metrics(counts: EvalCounts) -> tuple[float, float, float]:
    """(precision, recall, f1) over the summed counts; 0 on zero denominators."""
    tp, fp, fn = counts.tp, counts.fp, counts.fn
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    return p, r, f1_from_pr(p, r)


@dataclass(frozen=True)
class DocRow:
    doc_id: str
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    language: str
    track: str
    split: str
    counts: EvalCounts
    precision: float
    recall: float
    f1: float
    rows: tuple[DocRow, ...] = ()
    pred_only_ids: tuple[str, ...] = ()

    @classmethod
    def from_counts(cls, counts: EvalCounts, *, language: str, track: str,
                    split: str, rows: Sequence[DocRow] = (),
                    pred_only_ids: Sequence[str] = ()) -> "EvalReport":
        p, r, f1 = micro_metrics(counts)
        return cls(language=language, track=track, split=split, counts=counts,
                   precision=p, recall=r, f1=f1, rows=tuple(rows),
                   pred_only_ids=tuple(pred_only_ids))

    def display_metrics(self) -> tuple[float, float, float]:
        return (round_half_up(self.precision), round_half_up(self.recall),
                round_half_up(self.f1))


Corpus = Mapping[str, Sequence[EntityMention]]


def evaluate_corpus(gold: Corpus, pred: Corpus, language: str, track: str,
                    split: str = "test") -> EvalReport:
    """Score a whole corpus; gold and pred map doc_id -> mentions.

    The union of ids is scored: gold-only documents contribute all-fn,
    pred-only documents contribute all-fp and raise a DocumentMismatch
    warning (they are also listed on the report).
    """
    pred_only = sorted(set(pred) - set(gold))
    for doc_id in pred_only:
        warnings.warn("predictions for unknown document %r" % doc_id,
                      DocumentMismatch, stacklevel=2)
    total = EvalCounts()
    rows = []
    for doc_id in sorted(set(gold) | set(pred)):
        counts = match_exact(gold.get(doc_id, ()), pred.get(doc_id, ()))
        total = total + counts
        p, r, f1 = micro_metrics(counts)
        rows.append(DocRow(doc_id=doc_id, tp=counts.tp, fp=counts.fp,
                           fn=counts.fn, precision=p, recall=r, f1=f1))
    return EvalReport.from_counts(total, language=language, track=track,
                                  split=split, rows=rows,
                                  pred_only_ids=pred_only)


@dataclass(frozen=True)
class GapReport:
    """Dev-minus-test deltas in percentage points, 4-decimal rounded."""

    language: str
    track: str
    precision_gap: float
    recall_gap: float
    f1_gap: float
    threshold: float
    flagged: bool

    def summary_line(self) -> str:
        status = "OVERFIT" if self.flagged else "ok"
        return ("%s/%s dev-test gap: P %+0.4f R %+0.4f F1 %+0.4f points [%s]"
                % (self.language, self.track, self.precision_gap,
                   self.recall_gap, self.f1_gap, status))


def _point_gap(dev_value: float, test_value: float) -> float:
    delta = (Decimal(repr(float(dev_value))) - Decimal(repr(float(test_value)))) * 100
    return float(delta.quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


def compare_splits(dev: EvalReport, test: EvalReport,
                   threshold: float = 10.0) -> GapReport:
    """Dev-vs-test gap; flags an F1 drop above ``threshold`` points."""
    if (dev.track, dev.language) != (test.track, test.language):
        raise TrackMismatch("cannot compare %s/%s against %s/%s"
                            % (dev.language, dev.track, test.language, test.track))
    f1_gap = _point_gap(dev.f1, test.f1)
    return GapReport(language=dev.language, track=dev.track,
                     precision_gap=_point_gap(dev.precision, test.precision),
                     recall_gap=_point_gap(dev.recall, test.recall),
                     f1_gap=f1_gap, threshold=threshold,
                     flagged=f1_gap > threshold)
