"""Dictionary baseline: memorize gold mention phrases, greedy longest match.

Phrases are keyed by their normalized token sequence (Unicode NFC, then
lowercase), so "Aspirina" at train time matches "aspirina" at tag time.
"""
from __future__ import annotations

import unicodedata
from collections import Counter
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..bio import OUTSIDE, TagSet, UnknownLabel
from ..brat import AnnotatedDocument
from ..segmentation import Sentence, tokenize
from .base import EmptyCorpus, ensure_sentences

Phrase = tuple[str, ...]


def normalize_token(surface: str) -> str:
    return unicodedata.normalize("NFC", surface).lower()


def _mention_phrase(surface: str) -> Phrase:
    return tuple(normalize_token(t.surface) for t in tokenize(surface))


def train_gazetteer(corpus: Sequence[AnnotatedDocument],
                    tagset: TagSet) -> dict[Phrase, str]:
    """Map every gold mention's normalized token sequence to its label.

    A phrase seen under several labels keeps the majority label; ties go
    to whichever label comes first in the tag set.
    """
    docs = list(corpus)
    if not docs:
        raise EmptyCorpus("gazetteer training needs at least one document")
    votes: dict[Phrase, Counter] = {}
    for doc in docs:
        for mention in doc.mentions:
            if mention.label not in tagset.entity_labels:
                raise UnknownLabel("mention label %r not in tag set" % mention.label)
            phrase = _mention_phrase(mention.surface)
            if phrase:
                votes.setdefault(phrase, Counter())[mention.label] += 1
    rank = {label: i for i, label in enumerate(tagset.entity_labels)}
    return {phrase: min(counter.items(), key=lambda kv: (-kv[1], rank[kv[0]]))[0]
            for phrase, counter in votes.items()}


def tag_gazetteer(phrases: dict[Phrase, str], sentence: Sentence) -> list[str]:
    """Greedy longest-match left to right; unmatched tokens stay O."""
    max_len = max(map(len, phrases), default=0)
    norm = [normalize_token(t.surface) for t in sentence.tokens]
    labels = [OUTSIDE] * len(norm)
    i = 0
    while i < len(norm):
        matched = 0
        for width in range(min(max_len, len(norm) - i), 0, -1):
            label = phrases.get(tuple(norm[i:i + width]))
            if label is not None:
                labels[i] = "B-%s" % label
                for j in range(i + 1, i + width):
                    labels[j] = "I-%s" % label
                matched = width
                break
        i += matched or 1
    return labels


class GazetteerTagger(BaseEstimator):
    """Estimator wrapper: fit on annotated documents, predict sentences."""

    def __init__(self, tagset: TagSet):
        self.tagset = tagset

    def fit(self, X: Iterable[AnnotatedDocument], y: None = None) -> "GazetteerTagger":
        self.phrases_ = train_gazetteer(list(X), self.tagset)
        self.max_phrase_len_ = max(map(len, self.phrases_), default=0)
        return self

    def predict(self, X: Sequence[Sentence]) -> list[list[str]]:
        check_is_fitted(self, "phrases_")
        return [tag_gazetteer(self.phrases_, s) for s in ensure_sentences(X)]
