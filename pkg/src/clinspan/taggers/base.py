"""Shared tagger contract and input validation."""
from __future__ import annotations

from typing import Protocol, Sequence, runtime_checkable

from ..bio import LabeledSentence
from ..segmentation import Sentence


class EmptyCorpus(ValueError):
    """Training was asked to run on zero documents/sentences."""


@runtime_checkable
class SentenceTagger(Protocol):
    """What every engine provides: sentences in, one label list per sentence.

    Implementations guarantee len(labels) == len(sentence.tokens) and that
    each returned sequence is valid BIO drawn from the engine's tag set
    (framing specials never leak out).
    """

    def predict(self, X: Sequence[Sentence]) -> list[list[str]]: ...


def ensure_sentences(X: Sequence[Sentence]) -> list[Sentence]:
    out = list(X)
    for item in out:
        if not isinstance(item, Sentence):
            raise TypeError("expected Sentence, got %r" % type(item).__name__)
    return out


def ensure_labeled(corpus: Sequence[LabeledSentence], what: str) -> list[LabeledSentence]:
    out = list(corpus)
    if not out:
        raise EmptyCorpus("%s needs at least one labeled sentence" % what)
    for item in out:
        if not isinstance(item, LabeledSentence):
            raise TypeError("expected LabeledSentence, got %r" % type(item).__name__)
    return out
