"""BIO label alphabet and span<->label conversion.

Per-token labels use the standard scheme: ``B-X`` opens a mention of type
``X``, ``I-X`` continues it, ``O`` marks tokens outside any mention.  The
framing specials ``[CLS]``/``[SEP]`` belong to the model boundary only and
never appear in stored label sequences; the repair pass rewrites them away
along with orphaned ``I-`` labels.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .brat import AnnotatedDocument, EntityMention
from .segmentation import Sentence

OUTSIDE = "O"
CLS = "[CLS]"
SEP = "[SEP]"


class UnknownLabel(ValueError):
    """A label string falls outside the declared tag set."""


class InvalidSequence(ValueError):
    """A label sequence violates BIO validity; run repair_labels first."""


@dataclass(frozen=True)
class BioLabel:
    """Structured view of one label string."""

    kind: str  # one of O, B, I, CLS, SEP
    entity: str | None = None

    def __post_init__(self) -> None:
        if self.kind in ("B", "I"):
            if not self.entity:
                raise ValueError("%s labels require an entity type" % self.kind)
        elif self.kind in (OUTSIDE, "CLS", "SEP"):
            if self.entity is not None:
                raise ValueError("%s labels carry no entity type" % self.kind)
        else:
            raise ValueError("unknown label kind %r" % self.kind)

    @property
    def text(self) -> str:
        if self.kind in ("B", "I"):
            return "%s-%s" % (self.kind, self.entity)
        if self.kind == "CLS":
            return CLS
        if self.kind == "SEP":
            return SEP
        return OUTSIDE

    @classmethod
    def parse(cls, label: str) -> "BioLabel":
        if label == OUTSIDE:
            return cls(OUTSIDE)
        if label == CLS:
            return cls("CLS")
        if label == SEP:
            return cls("SEP")
        if label.startswith(("B-", "I-")) and len(label) > 2:
            return cls(label[0], label[2:])
        raise ValueError("cannot parse BIO label %r" % label)


@dataclass(frozen=True)
class TagSet:
    """Entity label inventory plus the derived BIO alphabet.

    Canonical label order is O first, then B-X/I-X per entity label in
    declaration order; all tie-breaking in decoders follows it.
    """

    entity_labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "entity_labels", tuple(self.entity_labels))
        if not self.entity_labels:
            raise ValueError("a tag set needs at least one entity label")
        seen = set()
        for lbl in self.entity_labels:
            if not lbl or any(c.isspace() for c in lbl) or lbl != lbl.upper():
                raise ValueError("entity labels must be uppercase identifiers, got %r" % lbl)
            if lbl in seen:
                raise ValueError("duplicate entity label %r" % lbl)
            seen.add(lbl)

    def sequence_labels(self) -> tuple[str, ...]:
        """Labels a stored sequence may use, in canonical order (no specials)."""
        out = [OUTSIDE]
        for lbl in self.entity_labels:
            out.append("B-%s" % lbl)
            out.append("I-%s" % lbl)
        return tuple(out)

    def alphabet(self) -> tuple[str, ...]:
        """The full label alphabet including the framing specials."""
        return self.sequence_labels() + (CLS, SEP)

    def __contains__(self, label: str) -> bool:
        return label in self.alphabet()


DISEASES = TagSet(("ENFERMEDAD",))
MEDICATIONS = TagSet(("FARMACO",))

TRACK_TAGSETS = {"diseases": DISEASES, "medications": MEDICATIONS}


def _follows_ok(prev: str | None, label: str) -> bool:
    """Whether ``label`` may legally follow ``prev`` (None = sentence start)."""
    if not label.startswith("I-"):
        return True
    entity = label[2:]
    return prev in ("B-%s" % entity, "I-%s" % entity)


def is_valid_sequence(labels: Sequence[str]) -> bool:
    """True iff no I-X follows start, O, or a different entity's B/I."""
    prev: str | None = None
    for label in labels:
        if label in (CLS, SEP):
            return False
        if not _follows_ok(prev, label):
            return False
        prev = label
    return True


def repair_labels(raw: Sequence[str]) -> list[str]:
    """Deterministic repair policy R1.

    Any I-X whose predecessor is not B-X/I-X becomes B-X; stray [CLS]/[SEP]
    become O.  Valid sequences pass through unchanged and the repair is
    idempotent.
    """
    out: list[str] = []
    prev: str | None = None
    for label in raw:
        fixed = label
        if label in (CLS, SEP):
            fixed = OUTSIDE
        elif label.startswith("I-") and not _follows_ok(prev, label):
            fixed = "B-%s" % label[2:]
        else:
            BioLabel.parse(label)  # reject garbage early
        out.append(fixed)
        prev = fixed
    return out


@dataclass(frozen=True)
class LabeledSentence:
    """A sentence plus one stored label per token (specials excluded)."""

    sentence: Sentence
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "labels", tuple(self.labels))
        if len(self.labels) != len(self.sentence.tokens):
            raise ValueError("got %d labels for %d tokens"
                             % (len(self.labels), len(self.sentence.tokens)))
        for label in self.labels:
            parsed = BioLabel.parse(label)
            if parsed.kind in ("CLS", "SEP"):
                raise ValueError("framing specials may not label stored tokens")


@dataclass
class EncodeStats:
    """Tallies of the lossy events a BIO encoding can incur."""

    aligned_mentions: int = 0
    expanded_mentions: int = 0      # boundary fell inside a token
    dropped_overlaps: int = 0       # lost the longest-wins conflict
    split_mentions: int = 0         # crossed a sentence/window boundary
    uncovered_mentions: int = 0     # covered no token at all


@dataclass(frozen=True)
class BioEncoding:
    sentences: tuple[LabeledSentence, ...]
    stats: EncodeStats = field(compare=False, default_factory=EncodeStats)

    def label_sequences(self) -> list[list[str]]:
        return [list(s.labels) for s in self.sentences]


def encode_bio(doc: AnnotatedDocument, sentences: Sequence[Sentence],
               tagset: TagSet) -> BioEncoding:
    """Project character-span mentions onto per-token BIO labels.

    Mention boundaries falling strictly inside a token expand to the
    covering tokens; overlapping mentions are resolved longest-first with
    earlier start breaking ties; mentions crossing a sentence boundary are
    split, each fragment starting its own B run.  Every lossy event is
    tallied in the returned stats.
    """
    for m in doc.mentions:
        if m.label not in tagset.entity_labels:
            raise UnknownLabel("mention label %r not in tag set %s"
                               % (m.label, list(tagset.entity_labels)))

    labels = [[OUTSIDE] * len(s.tokens) for s in sentences]
    claimed = [[False] * len(s.tokens) for s in sentences]
    stats = EncodeStats()

    order = sorted(doc.mentions,
                   key=lambda m: (-(m.end - m.start), m.start, m.end, m.label, m.mention_id))
    for mention in order:
        covered: list[tuple[int, int]] = []  # (sentence idx, token idx)
        for si, sent in enumerate(sentences):
            if sent.span_end <= mention.start or sent.span_start >= mention.end:
                continue
            for ti, tok in enumerate(sent.tokens):
                if tok.end > mention.start and tok.start < mention.end:
                    covered.append((si, ti))
        if not covered:
            stats.uncovered_mentions += 1
            continue
        if any(claimed[si][ti] for si, ti in covered):
            stats.dropped_overlaps += 1
            continue
        first_tok = sentences[covered[0][0]].tokens[covered[0][1]]
        last_tok = sentences[covered[-1][0]].tokens[covered[-1][1]]
        if first_tok.start != mention.start or last_tok.end != mention.end:
            stats.expanded_mentions += 1
        n_sentences = len({si for si, _ in covered})
        if n_sentences > 1:
            stats.split_mentions += n_sentences - 1
        prev: tuple[int, int] | None = None
        for si, ti in covered:
            claimed[si][ti] = True
            begins = prev is None or prev[0] != si
            labels[si][ti] = ("B-%s" if begins else "I-%s") % mention.label
            prev = (si, ti)
        stats.aligned_mentions += 1

    labeled = tuple(LabeledSentence(sentence=s, labels=tuple(labels[i]))
                    for i, s in enumerate(sentences))
    return BioEncoding(sentences=labeled, stats=stats)


def decode_bio(labeled: Iterable[LabeledSentence], text: str) -> list[EntityMention]:
    """Turn maximal B-X (I-X)* runs back into character-span mentions.

    Sequences must already be valid; raises :class:`InvalidSequence` otherwise.
    Mentions come back in document order, renumbered T1..Tn, with surfaces
    sliced from ``text`` so the slice law holds by construction.
    """
    mentions: list[EntityMention] = []
    for ls in labeled:
        run_label: str | None = None
        run_start = run_end = 0
        prev: str | None = None

        def close_run():
            nonlocal run_label
            if run_label is not None:
                mentions.append(EntityMention(
                    start=run_start, end=run_end, label=run_label,
                    surface=text[run_start:run_end],
                    mention_id="T%d" % (len(mentions) + 1)))
                run_label = None

        for tok, label in zip(ls.sentence.tokens, ls.labels):
            if not _follows_ok(prev, label):
                raise InvalidSequence("%r may not follow %r" % (label, prev))
            if label.startswith("B-"):
                close_run()
                run_label = label[2:]
                run_start, run_end = tok.start, tok.end
            elif label.startswith("I-"):
                run_end = tok.end
            else:
                close_run()
            prev = label
        close_run()
    return mentions


def format_conll(labeled: Iterable[LabeledSentence]) -> str:
    """CoNLL-style dump: ``surface<TAB>start<TAB>end<TAB>label`` per token,
    one blank line between sentences.  Byte-stable for identical inputs."""
    blocks = []
    for ls in labeled:
        blocks.append("\n".join(
            "%s\t%d\t%d\t%s" % (tok.surface, tok.start, tok.end, label)
            for tok, label in zip(ls.sentence.tokens, ls.labels)))
    return "\n\n".join(blocks) + "\n" if blocks else ""
