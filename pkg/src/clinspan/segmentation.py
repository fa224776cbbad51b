"""Sentence splitting and offset-preserving word tokenization.

Deterministic, rule-based, and model-free: the same input text always
yields the same sentences and tokens, and every token records its exact
code-point range in the original document so spans survive the round trip
through per-token labels.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

# One model-side window is 256 positions; two are reserved for the
# [CLS]/[SEP] framing specials, leaving 254 word tokens.
MAX_SEQ_TOKENS = 254

# Maximal runs of letters/digits form one token; any other non-space
# character (underscore included) is a single-character token.
_TOKEN_RE = re.compile(r"[^\W_]+|[^\s]")

_SENT_FINAL = ".!?;"
_PARAGRAPH_RE = re.compile(r"\n[ \t]*\n")

# Trailing tokens before a period that do not end a sentence.  Lowercased;
# matched against the maximal non-space run ending at the period.
ABBREVIATIONS: dict[str, frozenset[str]] = {
    "es": frozenset({
        "dr.", "dra.", "sr.", "sra.", "srta.", "prof.", "ud.", "uds.",
        "etc.", "aprox.", "approx.", "vs.", "p.ej.", "ej.", "fig.", "figs.",
        "núm.", "no.", "tel.", "av.", "avda.", "dpto.", "cap.",
    }),
    "en": frozenset({
        "dr.", "mr.", "mrs.", "ms.", "prof.", "st.", "jr.", "sr.",
        "etc.", "approx.", "e.g.", "i.e.", "vs.", "fig.", "figs.", "no.", "inc.",
    }),
    "it": frozenset({
        "dott.", "dott.ssa.", "sig.", "sig.ra.", "prof.", "ecc.", "approx.",
        "es.", "fig.", "n.", "tel.", "pag.",
    }),
}

_LEADING_PUNCT = "\"'«¿¡([{<“‘"


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int


@dataclass(frozen=True)
class Sentence:
    """A run of tokens from one document; offsets index the original text."""

    tokens: tuple[Token, ...]

    def __post_init__(self) -> None:
        if not self.tokens:
            raise ValueError("a sentence must contain at least one token")
        object.__setattr__(self, "tokens", tuple(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def span_start(self) -> int:
        return self.tokens[0].start

    @property
    def span_end(self) -> int:
        return self.tokens[-1].end


def _is_abbreviation(text: str, period_idx: int, abbreviations: frozenset[str]) -> bool:
    j = period_idx
    while j > 0 and not text[j - 1].isspace():
        j -= 1
    run = text[j:period_idx + 1].lstrip(_LEADING_PUNCT).lower()
    if run in abbreviations:
        return True
    # Single-letter initials: "J. García".
    return len(run) == 2 and run[0].isalpha()


def split_sentences(text: str, language: str = "es") -> list[tuple[int, int]]:
    """Return ordered (start, end) sentence ranges covering all non-space text.

    A sentence ends after ``. ! ? ;`` followed by whitespace, unless the
    period closes a known abbreviation or a single-letter initial; decimal
    numbers like ``3.5`` never split because the period is not followed by
    whitespace.  Blank lines always separate sentences.
    """
    abbreviations = ABBREVIATIONS.get(language, ABBREVIATIONS["es"])
    cuts = set()
    for m in _PARAGRAPH_RE.finditer(text):
        cuts.add(m.start() + 1)
    for i, ch in enumerate(text):
        if ch not in _SENT_FINAL:
            continue
        if i + 1 >= len(text) or not text[i + 1].isspace():
            continue
        if ch == "." and _is_abbreviation(text, i, abbreviations):
            continue
        cuts.add(i + 1)
    bounds = [0] + sorted(cuts) + [len(text)]
    ranges = []
    for seg_start, seg_end in zip(bounds, bounds[1:]):
        lo, hi = seg_start, seg_end
        while lo < hi and text[lo].isspace():
            lo += 1
        while hi > lo and text[hi - 1].isspace():
            hi -= 1
        if lo < hi:
            ranges.append((lo, hi))
    return ranges


def tokenize(text: str, start: int = 0, end: int | None = None) -> list[Token]:
    """Word-level tokens for ``text[start:end]`` with absolute offsets.

    Runs of letters/digits are single tokens; every other non-space
    character is its own token; whitespace never becomes a token.
    """
    if end is None:
        end = len(text)
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text, start, end)]


def enforce_window(sentence: Sentence, max_tokens: int = MAX_SEQ_TOKENS) -> list[Sentence]:
    """Split an over-long sentence into consecutive chunks of at most ``max_tokens``.

    Chunks prefer to end just after the last comma or semicolon inside the
    window; otherwise they break at the window boundary.  Concatenating the
    chunks reproduces the original token sequence exactly.
    """
    if max_tokens < 2:
        raise ValueError("max_tokens must be at least 2")
    tokens = list(sentence.tokens)
    if len(tokens) <= max_tokens:
        return [sentence]
    chunks = []
    while tokens:
        if len(tokens) <= max_tokens:
            chunks.append(Sentence(tuple(tokens)))
            break
        cut = max_tokens
        for i in range(max_tokens - 1, -1, -1):
            if tokens[i].surface in (",", ";"):
                cut = i + 1
                break
        chunks.append(Sentence(tuple(tokens[:cut])))
        tokens = tokens[cut:]
    return chunks


def segment_text(text: str, language: str = "es",
                 max_tokens: int = MAX_SEQ_TOKENS) -> list[Sentence]:
    """Full segmentation: sentences, tokens, and window enforcement."""
    sentences = []
    for s_start, s_end in split_sentences(text, language):
        tokens = tokenize(text, s_start, s_end)
        if not tokens:
            continue
        sentences.extend(enforce_window(Sentence(tuple(tokens)), max_tokens))
    return sentences
