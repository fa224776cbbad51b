"""Reader/writer for the token TSV interchange format.

One document per ``# doc = <id>`` header; each token is a
``surface<TAB>start<TAB>end<TAB>label`` line; one blank line separates
sentences. Offsets index the original document text and are carried
through untouched so downstream replies can be mapped back to spans.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

DOC_HEADER = "# doc = "


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int
    label: str

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError("bad token span [%d, %d)" % (self.start, self.end))
        if not self.label:
            raise ValueError("token %r has an empty label" % self.surface)


@dataclass(frozen=True)
class Sentence:
    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("a sentence must contain at least one token")

    def words(self) -> list[str]:
        return [t.surface for t in self.tokens]

    def labels(self) -> list[str]:
        return [t.label for t in self.tokens]


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sentences", tuple(self.sentences))


def read_tsv(text: str) -> list[Document]:
    """Parse TSV text into documents; raises ValueError with a line number
    on malformed input."""
    documents: list[Document] = []
    seen_ids: set[str] = set()
    doc_id: str | None = None
    sentences: list[Sentence] = []
    current: list[Token] = []

    def close_sentence() -> None:
        nonlocal current
        if current:
            sentences.append(Sentence(tokens=tuple(current)))
            current = []

    def close_document() -> None:
        nonlocal sentences
        if doc_id is not None:
            documents.append(Document(doc_id=doc_id, sentences=tuple(sentences)))
            sentences = []

    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.rstrip("\r")
        if line.startswith(DOC_HEADER):
            close_sentence()
            close_document()
            doc_id = line[len(DOC_HEADER):].strip()
            if not doc_id:
                raise ValueError("line %d: empty document id" % line_no)
            if doc_id in seen_ids:
                raise ValueError("line %d: duplicate document id %r"
                                 % (line_no, doc_id))
            seen_ids.add(doc_id)
            continue
        if not line.strip():
            close_sentence()
            continue
        if doc_id is None:
            raise ValueError("line %d: token line before any %r header"
                             % (line_no, DOC_HEADER.strip()))
        fields = line.split("\t")
        if len(fields) != 4:
            raise ValueError("line %d: expected 4 tab-separated fields, got %d"
                             % (line_no, len(fields)))
        surface, start_s, end_s, label = fields
        try:
            start, end = int(start_s), int(end_s)
        except ValueError:
            raise ValueError("line %d: offsets must be integers, got %r %r"
                             % (line_no, start_s, end_s))
        try:
            current.append(Token(surface=surface, start=start, end=end,
                                 label=label))
        except ValueError as exc:
            raise ValueError("line %d: %s" % (line_no, exc))
    close_sentence()
    close_document()
    return documents


def load_tsv(path: str | Path) -> list[Document]:
    return read_tsv(Path(path).read_text(encoding="utf-8"))


def write_tsv(documents: Iterable[Document]) -> str:
    """Inverse of read_tsv, byte-stable for identical inputs."""
    blocks = []
    for document in documents:
        lines = [DOC_HEADER + document.doc_id]
        for sentence in document.sentences:
            for t in sentence.tokens:
                lines.append("%s\t%d\t%d\t%s" % (t.surface, t.start, t.end,
                                                 t.label))
            lines.append("")
        blocks.append("\n".join(lines))
    return "\n".join(blocks) + "\n" if blocks else ""


def labels_used(documents: Sequence[Document]) -> set[str]:
    return {t.label
            for document in documents
            for sentence in document.sentences
            for t in sentence.tokens}


def all_sentences(documents: Sequence[Document]) -> list[Sentence]:
    return [sentence for document in documents
            for sentence in document.sentences]
