"""Span extraction and exact-match micro scoring over word-level labels.

Kept deliberately small and self-contained: this is the checkpoint
selection metric, so it must not drift silently — the test suite
cross-checks it against the host toolkit's scorer on shared inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .tsv import Sentence

Span = tuple[int, int, str]


def spans_from_labels(labels: Sequence[str],
                      offsets: Sequence[tuple[int, int]]) -> set[Span]:
    """BIO label sequence -> set of (start, end, entity) character spans.

    Orphan continuations open a new span — the same reading the protocol
    client applies when repairing replies — so raw model output can be
    scored without a separate repair step.
    """
    if len(labels) != len(offsets):
        raise ValueError("%d labels for %d tokens" % (len(labels), len(offsets)))
    spans: set[Span] = set()
    open_entity: str | None = None
    open_start = open_end = 0
    for label, (start, end) in zip(labels, offsets):
        if label.startswith("B-") or label.startswith("I-"):
            entity = label[2:]
            if label.startswith("I-") and entity == open_entity:
                open_end = end
                continue
            if open_entity is not None:
                spans.add((open_start, open_end, open_entity))
            open_entity, open_start, open_end = entity, start, end
        else:
            if open_entity is not None:
                spans.add((open_start, open_end, open_entity))
            open_entity = None
    if open_entity is not None:
        spans.add((open_start, open_end, open_entity))
    return spans


@dataclass(frozen=True)
class Tally:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __add__(self, other: "Tally") -> "Tally":
        if not isinstance(other, Tally):
            return NotImplemented
        return Tally(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


def tally_spans(gold: set[Span], pred: set[Span]) -> Tally:
    matched = len(gold & pred)
    return Tally(tp=matched, fp=len(pred) - matched, fn=len(gold) - matched)


def micro(tally: Tally) -> tuple[float, float, float]:
    p = tally.tp / (tally.tp + tally.fp) if tally.tp + tally.fp else 0.0
    r = tally.tp / (tally.tp + tally.fn) if tally.tp + tally.fn else 0.0
    f1 = 2.0 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def corpus_f1(sentences: Sequence[Sentence],
              predicted: Sequence[Sequence[str]]) -> tuple[float, float, float]:
    """Micro P/R/F1 of predicted label sequences against the labels carried
    by the TSV sentences themselves."""
    if len(sentences) != len(predicted):
        raise ValueError("%d predictions for %d sentences"
                         % (len(predicted), len(sentences)))
    total = Tally()
    for sentence, labels in zip(sentences, predicted):
        offsets = [(t.start, t.end) for t in sentence.tokens]
        total = total + tally_spans(
            spans_from_labels(sentence.labels(), offsets),
            spans_from_labels(labels, offsets))
    return micro(total)
