"""Color-coded HTML diffs of predicted vs gold mention spans.

Categories follow exact-match scoring: a prediction is Correct only on an
exact (label, start, end) match, PartialPrediction when it merely overlaps
a same-label gold mention (whose full extent becomes PartialGold), and
Spurious otherwise; unmatched gold is Missed.  Overlapping paint is
resolved per character by fixed priority, so the emitted HTML never nests
or overlaps spans.
"""
from __future__ import annotations

import html
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .brat import EntityMention, TextDocument


class DiffCategory(Enum):
    CORRECT = "correct"
    SPURIOUS = "spurious"
    MISSED = "missed"
    PARTIAL_PREDICTION = "partial-prediction"
    PARTIAL_GOLD = "partial-gold"


# paint priority, strongest first
_PRIORITY = (DiffCategory.CORRECT, DiffCategory.PARTIAL_GOLD,
             DiffCategory.PARTIAL_PREDICTION, DiffCategory.SPURIOUS,
             DiffCategory.MISSED)

_CSS = """\
body { font-family: sans-serif; margin: 2em; }
pre.doc { white-space: pre-wrap; border: 1px solid #ccc; padding: 1em; }
.correct { background: #b5e8b5; }
.spurious { background: #f2b8b5; }
.partial-prediction { background: #f5ee9e; }
.partial-gold { background: #f5cf8e; }
.missed { background: #e0e0e0; text-decoration: underline; }
.legend span { padding: 0 0.5em; margin-right: 0.75em; }
"""


def _overlaps(a: EntityMention, b: EntityMention) -> bool:
    return a.start < b.end and b.start < a.end and a.label == b.label


@dataclass(frozen=True)
class DiffSummary:
    """Each mention with its category, plus per-category totals."""

    spans: tuple[tuple[EntityMention, DiffCategory], ...]
    counts: dict[str, int]


def categorize(gold: Sequence[EntityMention],
               pred: Sequence[EntityMention]) -> DiffSummary:
    gold_keys = {m.key for m in gold}
    pred_keys = {m.key for m in pred}
    spans: list[tuple[EntityMention, DiffCategory]] = []

    for m in pred:
        if m.key in gold_keys:
            spans.append((m, DiffCategory.CORRECT))
        elif any(_overlaps(m, g) for g in gold):
            spans.append((m, DiffCategory.PARTIAL_PREDICTION))
        else:
            spans.append((m, DiffCategory.SPURIOUS))
    for m in gold:
        if m.key in pred_keys:
            continue  # its exact twin already painted Correct
        if any(_overlaps(m, p) for p in pred):
            spans.append((m, DiffCategory.PARTIAL_GOLD))
        else:
            spans.append((m, DiffCategory.MISSED))

    counts = {cat.value: 0 for cat in _PRIORITY}
    counts[DiffCategory.CORRECT.value] = len(gold_keys & pred_keys)
    for _, cat in spans:
        if cat is not DiffCategory.CORRECT:
            counts[cat.value] += 1
    return DiffSummary(spans=tuple(spans), counts=counts)


def _paint(text_len: int, summary: DiffSummary) -> list[DiffCategory | None]:
    rank = {cat: i for i, cat in enumerate(_PRIORITY)}
    paint: list[DiffCategory | None] = [None] * text_len
    for mention, cat in summary.spans:
        for i in range(mention.start, mention.end):
            if paint[i] is None or rank[cat] < rank[paint[i]]:
                paint[i] = cat
    return paint


def render_diff(doc: TextDocument, gold: Sequence[EntityMention],
                pred: Sequence[EntityMention]) -> str:
    """Standalone HTML page for one document; byte-identical across runs."""
    summary = categorize(gold, pred)
    paint = _paint(len(doc.text), summary)

    body: list[str] = []
    i = 0
    while i < len(doc.text):
        j = i
        while j < len(doc.text) and paint[j] is paint[i]:
            j += 1
        chunk = html.escape(doc.text[i:j])
        if paint[i] is None:
            body.append(chunk)
        else:
            body.append('<span class="%s">%s</span>' % (paint[i].value, chunk))
        i = j

    legend = "".join(
        '<span class="%s">%s: %d</span>' % (cat.value, cat.value, summary.counts[cat.value])
        for cat in _PRIORITY)
    return ("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
            "<title>%s</title>\n<style>\n%s</style>\n</head>\n<body>\n"
            "<h1>%s</h1>\n<div class=\"legend\">%s</div>\n"
            "<pre class=\"doc\">%s</pre>\n</body>\n</html>\n"
            % (html.escape(doc.doc_id), _CSS, html.escape(doc.doc_id),
               legend, "".join(body)))
