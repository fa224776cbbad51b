"""Corpus directory convention: ``<root>/<split>/<doc_id>.txt|.ann``.

Splits are train/dev/test/background; background may ship text-only.
Language and track come from directory naming when recognizable and can
always be overridden.  Strict loading aborts on any annotation violation
with the full validation report; lenient loading drops offending
documents with a warning and keeps going.
"""
from __future__ import annotations

import dataclasses
import re
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

from .brat import (AnnotatedDocument, EntityMention, LANGUAGES, TextDocument,
                   parse_ann, validate_corpus)
from .evaluation import TrackMismatch

SPLITS = ("train", "dev", "test", "background")
ANNOTATED_SPLITS = ("train", "dev", "test")
TRACKS = ("diseases", "medications")


class MissingSplit(ValueError):
    """A required split directory (or its documents) is absent."""


class ValidationFailure(ValueError):
    """Strict loading found annotation violations; carries the report."""

    def __init__(self, report):
        self.report = report
        super().__init__("\n".join(report.summary_lines()))


class CorpusLayoutError(ValueError):
    """The directory tree does not follow the corpus convention."""


@dataclass(frozen=True)
class CorpusManifest:
    root: Path | None
    language: str
    track: str
    splits: dict[str, tuple[str, ...]]

    def doc_ids(self, split: str) -> tuple[str, ...]:
        return self.splits.get(split, ())


@dataclass(frozen=True)
class LoadedCorpus:
    manifest: CorpusManifest
    documents: dict[str, AnnotatedDocument]

    @property
    def language(self) -> str:
        return self.manifest.language

    @property
    def track(self) -> str:
        return self.manifest.track

    def split_docs(self, split: str) -> list[AnnotatedDocument]:
        return [self.documents[i] for i in self.manifest.doc_ids(split)]

    def mentions_by_doc(self, split: str) -> dict[str, tuple[EntityMention, ...]]:
        return {i: self.documents[i].mentions for i in self.manifest.doc_ids(split)}

    def require_split(self, split: str, annotated: bool = False) -> list[AnnotatedDocument]:
        docs = self.split_docs(split)
        if not docs:
            raise MissingSplit("corpus has no documents in split %r" % split)
        if annotated and not any(d.mentions for d in docs):
            warnings.warn("split %r has no mentions at all" % split, stacklevel=2)
        return docs


def infer_language(root: Path) -> str | None:
    """Language code from directory naming (es/, corpus-en/, data_it/): a
    dash/underscore/dot segment of a path part equal to the code, nearest
    the leaf winning."""
    for part in reversed(root.resolve().parts):
        segments = re.split(r"[-_.]", part.lower())
        for code in LANGUAGES:
            if code in segments:
                return code
    return None


def infer_track(root: Path) -> str | None:
    for part in reversed(root.resolve().parts):
        low = part.lower()
        for track in TRACKS:
            if track in low:
                return track
    return None


def _iter_split_files(root: Path) -> Iterator[tuple[str, Path]]:
    for split in SPLITS:
        split_dir = root / split
        if not split_dir.is_dir():
            continue
        for txt in sorted(split_dir.glob("*.txt")):
            yield split, txt


def load_corpus(root: str | Path, language: str | None = None,
                track: str | None = None, lenient: bool = False) -> LoadedCorpus:
    root = Path(root)
    if not root.is_dir():
        raise CorpusLayoutError("corpus root %s is not a directory" % root)
    language = language or infer_language(root)
    if language is None:
        raise CorpusLayoutError(
            "cannot infer language from %s; pass it explicitly" % root)
    track = track or infer_track(root)
    if track is None:
        raise CorpusLayoutError(
            "cannot infer track from %s; pass it explicitly" % root)
    if track not in TRACKS:
        raise ValueError("unknown track %r" % track)

    pending: list[tuple[str, TextDocument, str | None]] = []
    seen: dict[str, str] = {}
    for split, txt in _iter_split_files(root):
        doc_id = txt.stem
        if doc_id in seen:
            message = ("doc_id %r appears in both %r and %r splits"
                       % (doc_id, seen[doc_id], split))
            if lenient:
                warnings.warn(message + "; keeping the first", stacklevel=2)
                continue
            raise CorpusLayoutError(message)
        seen[doc_id] = split
        text = txt.read_text(encoding="utf-8")
        document = TextDocument(doc_id=doc_id, text=text, language=language)
        ann_path = txt.with_suffix(".ann")
        ann: str | None
        if ann_path.is_file():
            ann = ann_path.read_text(encoding="utf-8")
        elif split == "background":
            ann = None
        else:
            message = "%s: missing %s" % (split, ann_path.name)
            if lenient:
                warnings.warn(message + "; skipping document", stacklevel=2)
                del seen[doc_id]
                continue
            raise MissingSplit(message)
        pending.append((split, document, ann))

    if not pending:
        raise MissingSplit("no split directories with documents under %s" % root)

    annotated = [(doc, ann) for _, doc, ann in pending if ann is not None]
    report = validate_corpus(annotated)
    bad_ids = {issues.doc_id for issues in report.documents if issues.violations}
    if bad_ids and not lenient:
        raise ValidationFailure(report)

    documents: dict[str, AnnotatedDocument] = {}
    splits: dict[str, list[str]] = {}
    for split, document, ann in pending:
        if document.doc_id in bad_ids:
            warnings.warn("skipping %r: annotation violations" % document.doc_id,
                          stacklevel=2)
            continue
        if ann is None:
            parsed = AnnotatedDocument(document=document, mentions=())
        else:
            parsed = parse_ann(document, ann)
        documents[document.doc_id] = parsed
        splits.setdefault(split, []).append(document.doc_id)

    manifest = CorpusManifest(root=root, language=language, track=track,
                              splits={s: tuple(ids) for s, ids in splits.items()})
    return LoadedCorpus(manifest=manifest, documents=documents)


def aggregate_corpora(corpora: Sequence[LoadedCorpus]) -> LoadedCorpus:
    """Concatenate same-track corpora, namespacing doc_ids by language
    (``es/doc-1``) so per-language evaluation stays possible."""
    if not corpora:
        raise ValueError("nothing to aggregate")
    track = corpora[0].track
    for c in corpora[1:]:
        if c.track != track:
            raise TrackMismatch("cannot aggregate %r with %r" % (track, c.track))

    documents: dict[str, AnnotatedDocument] = {}
    splits: dict[str, list[str]] = {}
    for c in corpora:
        for split in SPLITS:
            for doc_id in c.manifest.doc_ids(split):
                doc = c.documents[doc_id]
                new_id = "%s/%s" % (doc.document.language, doc_id)
                if new_id in documents:
                    raise ValueError("duplicate aggregated doc_id %r" % new_id)
                renamed = dataclasses.replace(
                    doc, document=dataclasses.replace(doc.document, doc_id=new_id))
                documents[new_id] = renamed
                splits.setdefault(split, []).append(new_id)

    language = "+".join(dict.fromkeys(c.language for c in corpora))
    manifest = CorpusManifest(root=None, language=language, track=track,
                              splits={s: tuple(ids) for s, ids in splits.items()})
    return LoadedCorpus(manifest=manifest, documents=documents)
