"""Shared test helpers: fixture builders and the external-tagger double.

Offset-bearing fixtures are built with ``str.index``/``len`` rather than
hand-written numbers, so a fixture cannot silently drift from its text.
"""
from __future__ import annotations

import sys
from pathlib import Path

from clinspan.brat import AnnotatedDocument, EntityMention, TextDocument
from clinspan.segmentation import Sentence, tokenize

DOUBLES_DIR = Path(__file__).parent / "doubles"
DOUBLE_TAGGER = DOUBLES_DIR / "double_tagger.py"


def sent(text: str) -> Sentence:
    """Single-sentence fixture over the whole string; offsets are absolute."""
    return Sentence(tuple(tokenize(text)))


def find_mention(text: str, surface: str, label: str, occurrence: int = 1,
                 mention_id: str = "T1") -> EntityMention:
    """Locate the nth occurrence of ``surface`` in ``text`` and wrap it."""
    idx = -1
    for _ in range(occurrence):
        idx = text.index(surface, idx + 1)
    return EntityMention(start=idx, end=idx + len(surface), label=label,
                         surface=surface, mention_id=mention_id)


def doc(doc_id: str, text: str, mentions: tuple = (),
        language: str = "es") -> AnnotatedDocument:
    """Annotated document with mention ids renumbered T1..Tn in given order."""
    renumbered = tuple(
        EntityMention(start=m.start, end=m.end, label=m.label,
                      surface=m.surface, mention_id="T%d" % (i + 1))
        for i, m in enumerate(mentions))
    return AnnotatedDocument(
        document=TextDocument(doc_id=doc_id, text=text, language=language),
        mentions=renumbered)


def span_mentions(*spans: tuple[int, int, str]) -> list[EntityMention]:
    """Mentions from (start, end, label) triples; surfaces are synthetic."""
    return [EntityMention(start=s, end=e, label=lab, surface="x" * (e - s),
                          mention_id="T%d" % (i + 1))
            for i, (s, e, lab) in enumerate(spans)]


def double_cmd(mode: str = "echo", *extra: str) -> tuple[str, ...]:
    """Command line for the subprocess tagger double."""
    return (sys.executable, str(DOUBLE_TAGGER), "--mode", mode, *extra)
