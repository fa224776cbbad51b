"""BRAT stand-off annotation I/O.

A document is a pair of files: ``<doc_id>.txt`` holding the raw UTF-8 text
and ``<doc_id>.ann`` holding one annotation per line.  Entity lines look
like::

    T1<TAB>FARMACO 20 28<TAB>aspirina

All offsets count Unicode code points of the text file as-is (including
newlines), never bytes.  Python string indexing is code-point based, so
``text[start:end]`` is exactly the annotated slice.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

LANGUAGES = ("es", "en", "it")

# Characters that terminate a line in the stand-off format.  A mention may
# legitimately span a line break in the text; its .ann surface field then
# carries a space instead (offsets stay authoritative, as in the BRAT tool).
_LINE_BREAKS = "\n\r\v\f\x1c\x1d\x1e\x85  "
_LINE_BREAK_RE = re.compile("[%s]" % _LINE_BREAKS)

_MENTION_ID_RE = re.compile(r"T[1-9][0-9]*\Z")


class BratError(ValueError):
    """Base class for annotation-file violations.

    Instances double as report entries: they carry the offending document,
    line number, and a stable ``kind`` string.
    """

    kind = "brat"

    def __init__(self, message: str, doc_id: str | None = None, line_no: int | None = None):
        super().__init__(message)
        self.message = message
        self.doc_id = doc_id
        self.line_no = line_no

    def __str__(self) -> str:
        where = ""
        if self.doc_id is not None:
            where += self.doc_id
        if self.line_no is not None:
            where += ":%d" % self.line_no
        if where:
            return "%s: [%s] %s" % (where, self.kind, self.message)
        return "[%s] %s" % (self.kind, self.message)


class MalformedLine(BratError):
    """A T-line does not match the entity-line grammar."""

    kind = "malformed-line"


class OffsetOutOfRange(BratError):
    """Annotation offsets do not denote a forward range inside the text."""

    kind = "offset-out-of-range"


class SurfaceMismatch(BratError):
    """The .ann surface field disagrees with the text slice at its offsets."""

    kind = "surface-mismatch"


class DuplicateId(BratError):
    """The same T-identifier appears on more than one line."""

    kind = "duplicate-id"


def _check_doc_id(doc_id: str) -> None:
    if not doc_id:
        raise ValueError("doc_id must be non-empty")
    # "/" is allowed as a logical namespace separator (used when corpora are
    # aggregated across languages); OS-specific separators and traversal are not.
    if "\\" in doc_id or doc_id.startswith("/") or doc_id.endswith("/"):
        raise ValueError("doc_id %r contains a path separator" % doc_id)
    if any(part in ("", ".", "..") for part in doc_id.split("/")):
        raise ValueError("doc_id %r is not a safe relative name" % doc_id)


@dataclass(frozen=True)
class TextDocument:
    """Raw clinical text plus identity and language."""

    doc_id: str
    text: str
    language: str = "es"

    def __post_init__(self) -> None:
        _check_doc_id(self.doc_id)
        if self.language not in LANGUAGES:
            raise ValueError("language must be one of %s, got %r" % (",".join(LANGUAGES), self.language))


@dataclass(frozen=True, order=True)
class EntityMention:
    """A contiguous character-span mention.

    ``surface`` always equals ``text[start:end]`` of the owning document;
    constructors that cannot guarantee this must go through validation.
    """

    start: int
    end: int
    label: str
    surface: str = field(compare=False)
    mention_id: str = field(compare=False, default="T1")

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def key(self) -> tuple[str, int, int]:
        """Exact-match identity used by the scorer."""
        return (self.label, self.start, self.end)


def ann_surface_field(surface: str) -> str:
    """Render a mention surface for the one-line .ann format.

    Line-break characters inside the span are written as spaces, the
    convention of the BRAT tool itself; offsets remain authoritative.
    """
    return _LINE_BREAK_RE.sub(" ", surface)


def _validate_mention(mention: EntityMention, text: str, *, doc_id: str | None = None,
                      line_no: int | None = None) -> None:
    if not _MENTION_ID_RE.match(mention.mention_id):
        raise MalformedLine("mention id %r does not match T<positive integer>" % mention.mention_id,
                            doc_id, line_no)
    if not mention.label or any(c.isspace() for c in mention.label):
        raise MalformedLine("bad entity label %r" % mention.label, doc_id, line_no)
    if not (0 <= mention.start < mention.end <= len(text)):
        raise OffsetOutOfRange(
            "span %d..%d outside text of length %d" % (mention.start, mention.end, len(text)),
            doc_id, line_no)
    if mention.surface != text[mention.start:mention.end]:
        raise SurfaceMismatch(
            "surface %r != text slice %r at %d..%d"
            % (mention.surface, text[mention.start:mention.end], mention.start, mention.end),
            doc_id, line_no)


@dataclass(frozen=True)
class AnnotatedDocument:
    """A text document plus its entity mentions.

    Construction validates every mention against the text, so any instance
    in hand satisfies the span and slice invariants.
    """

    document: TextDocument
    mentions: tuple[EntityMention, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "mentions", tuple(self.mentions))
        seen: set[str] = set()
        for m in self.mentions:
            _validate_mention(m, self.document.text, doc_id=self.document.doc_id)
            if m.mention_id in seen:
                raise DuplicateId("duplicate mention id %r" % m.mention_id, self.document.doc_id)
            seen.add(m.mention_id)

    @property
    def doc_id(self) -> str:
        return self.document.doc_id

    @property
    def text(self) -> str:
        return self.document.text

    def canonical_mentions(self) -> list[EntityMention]:
        """Mentions sorted by (start, end, label), the serialization order."""
        return sorted(self.mentions, key=lambda m: (m.start, m.end, m.label))


def _parse_entity_line(document: TextDocument, line: str, line_no: int) -> EntityMention:
    doc_id = document.doc_id
    parts = line.split("\t")
    if len(parts) < 3:
        raise MalformedLine("expected 3 tab-separated fields, got %d" % len(parts), doc_id, line_no)
    ident = parts[0]
    if not _MENTION_ID_RE.match(ident):
        raise MalformedLine("bad entity identifier %r" % ident, doc_id, line_no)
    mid = parts[1].split(" ")
    if len(mid) != 3:
        if ";" in parts[1]:
            raise MalformedLine("discontinuous spans are not supported: %r" % parts[1], doc_id, line_no)
        raise MalformedLine("expected 'LABEL start end', got %r" % parts[1], doc_id, line_no)
    label, start_s, end_s = mid
    if not label:
        raise MalformedLine("empty entity label", doc_id, line_no)
    if not (start_s.isdigit() and end_s.isdigit()):
        raise MalformedLine("offsets must be unsigned integers, got %r %r" % (start_s, end_s),
                            doc_id, line_no)
    start, end = int(start_s), int(end_s)
    if not (start < end <= len(document.text)):
        raise OffsetOutOfRange(
            "span %d..%d outside text of length %d" % (start, end, len(document.text)),
            doc_id, line_no)
    slice_ = document.text[start:end]
    surface_field = "\t".join(parts[2:])
    if surface_field != ann_surface_field(slice_):
        raise SurfaceMismatch(
            "surface field %r != text slice %r at %d..%d" % (surface_field, slice_, start, end),
            doc_id, line_no)
    # Store the exact slice: offsets are authoritative, the field is a checksum.
    return EntityMention(start=start, end=end, label=label, surface=slice_, mention_id=ident)


def _scan_ann(document: TextDocument, ann_content: str):
    """Yield ('mention', m), ('skip', line_no) or ('error', exc) per line."""
    seen_ids: set[str] = set()
    for line_no, raw in enumerate(ann_content.split("\n"), start=1):
        line = raw.removesuffix("\r")
        if not line.strip():
            continue
        if not line.startswith("T"):
            yield ("skip", line_no)
            continue
        try:
            mention = _parse_entity_line(document, line, line_no)
        except BratError as exc:
            yield ("error", exc)
            continue
        if mention.mention_id in seen_ids:
            yield ("error", DuplicateId("duplicate entity identifier %r" % mention.mention_id,
                                        document.doc_id, line_no))
            continue
        seen_ids.add(mention.mention_id)
        yield ("mention", mention)


def parse_ann(document: TextDocument, ann_content: str) -> AnnotatedDocument:
    """Parse stand-off content against ``document``, raising on the first violation.

    Non-entity lines (attributes, relations, events, notes) are skipped.
    Use :func:`validate_corpus` to collect all violations instead of failing fast.
    """
    mentions = []
    for kind, payload in _scan_ann(document, ann_content):
        if kind == "error":
            raise payload
        if kind == "mention":
            mentions.append(payload)
    return AnnotatedDocument(document=document, mentions=tuple(mentions))


def count_skipped_lines(document: TextDocument, ann_content: str) -> int:
    """Number of non-entity annotation lines that parse_ann would skip."""
    return sum(1 for kind, _ in _scan_ann(document, ann_content) if kind == "skip")


def serialize_ann(doc: AnnotatedDocument) -> str:
    """Serialize to canonical stand-off text.

    Mentions are sorted by (start, end, label) and renumbered T1..Tn, so
    identical annotation sets serialize to identical bytes.
    """
    lines = []
    for i, m in enumerate(doc.canonical_mentions(), start=1):
        lines.append("T%d\t%s %d %d\t%s\n" % (i, m.label, m.start, m.end, ann_surface_field(m.surface)))
    return "".join(lines)


@dataclass
class DocumentIssues:
    """Violations and skip tally for one document's annotation file."""

    doc_id: str
    violations: list[BratError] = field(default_factory=list)
    skipped_lines: int = 0

    @property
    def is_clean(self) -> bool:
        return not self.violations


@dataclass
class ValidationReport:
    """Per-document violation lists for a corpus; clean iff all lists are empty."""

    documents: list[DocumentIssues] = field(default_factory=list)

    @property
    def is_clean(self) -> bool:
        return all(d.is_clean for d in self.documents)

    @property
    def total_violations(self) -> int:
        return sum(len(d.violations) for d in self.documents)

    def summary_lines(self) -> list[str]:
        lines = []
        for d in self.documents:
            for v in d.violations:
                lines.append(str(v))
        skipped = sum(d.skipped_lines for d in self.documents)
        lines.append("checked %d documents: %d violations, %d non-entity lines skipped"
                     % (len(self.documents), self.total_violations, skipped))
        return lines


def validate_corpus(pairs) -> ValidationReport:
    """Scan (TextDocument, ann_content) pairs, collecting every violation.

    Never raises on annotation problems; violations are returned as data so a
    whole corpus can be audited in one pass.
    """
    report = ValidationReport()
    for document, ann_content in pairs:
        issues = DocumentIssues(doc_id=document.doc_id)
        for kind, payload in _scan_ann(document, ann_content):
            if kind == "error":
                issues.violations.append(payload)
            elif kind == "skip":
                issues.skipped_lines += 1
        report.documents.append(issues)
    return report
