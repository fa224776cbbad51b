"""Clinical NER toolkit: BRAT stand-off I/O, offset-preserving segmentation,
BIO tagging engines, and exact-match span evaluation."""

__version__ = "0.1.0"

from .bio import (BioEncoding, BioLabel, EncodeStats, InvalidSequence,
                  LabeledSentence, TagSet, UnknownLabel, decode_bio,
                  encode_bio, format_conll, is_valid_sequence, repair_labels)
from .brat import (AnnotatedDocument, BratError, DuplicateId, EntityMention,
                   MalformedLine, OffsetOutOfRange, SurfaceMismatch,
                   TextDocument, parse_ann, serialize_ann, validate_corpus)
from .diff_html import DiffCategory, categorize, render_diff
from .evaluation import (DocumentMismatch, EvalCounts, EvalReport, GapReport,
                         TrackMismatch, compare_splits, evaluate_corpus,
                         f1_from_pr, match_exact, micro_metrics, round_half_up)
from .segmentation import (MAX_SEQ_TOKENS, Sentence, Token, enforce_window,
                           segment_text, split_sentences, tokenize)

__all__ = [
    "AnnotatedDocument", "BioEncoding", "BioLabel", "BratError",
    "DiffCategory", "DocumentMismatch", "DuplicateId", "EncodeStats",
    "EntityMention", "EvalCounts", "EvalReport", "GapReport",
    "InvalidSequence", "LabeledSentence", "MAX_SEQ_TOKENS", "MalformedLine",
    "OffsetOutOfRange", "Sentence", "SurfaceMismatch", "TagSet",
    "TextDocument", "Token", "TrackMismatch", "UnknownLabel", "categorize",
    "compare_splits", "decode_bio", "encode_bio", "enforce_window",
    "evaluate_corpus", "f1_from_pr", "format_conll", "is_valid_sequence",
    "match_exact", "micro_metrics", "parse_ann", "render_diff",
    "repair_labels", "round_half_up", "segment_text", "serialize_ann",
    "split_sentences", "tokenize", "validate_corpus",
]
