"""Model loading and word-level label prediction.

All transformers imports live here so the rest of the package stays cheap
to import, and so library chatter can be silenced in one place — the
serving loop owns stdout and a stray progress bar would corrupt it.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .provenance import read_provenance

DEFAULT_MAX_SEQUENCE_LENGTH = 256


class BaseModelUnavailable(Exception):
    """The given base model directory cannot be loaded."""


def _silence() -> None:
    import transformers

    transformers.logging.set_verbosity_error()
    transformers.logging.disable_progress_bar()


def load_base_for_training(base_dir: Path, labels: Sequence[str]):
    """Load a base checkpoint with a fresh token-classification head.

    Returns (tokenizer, model).  The head dimension and label table come
    from `labels`, whose order fixes the class index of every label.
    """
    _silence()
    from transformers import AutoModelForTokenClassification, AutoTokenizer

    base_dir = Path(base_dir)
    if not base_dir.is_dir():
        raise BaseModelUnavailable("base model directory not found: %s" % base_dir)
    id2label = {i: label for i, label in enumerate(labels)}
    label2id = {label: i for i, label in id2label.items()}
    try:
        tokenizer = AutoTokenizer.from_pretrained(base_dir)
        model = AutoModelForTokenClassification.from_pretrained(
            base_dir, num_labels=len(id2label),
            id2label=id2label, label2id=label2id)
    except Exception as exc:
        raise BaseModelUnavailable(
            "cannot load base model from %s: %s" % (base_dir, exc)) from exc
    return tokenizer, model


def load_model_dir(model_dir: Path):
    """Load a fine-tuned model directory for inference.

    Returns (tokenizer, model, labels, max_sequence_length).
    """
    _silence()
    import torch
    from transformers import AutoModelForTokenClassification, AutoTokenizer

    model_dir = Path(model_dir)
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    model = AutoModelForTokenClassification.from_pretrained(model_dir)
    model.eval()
    torch.set_num_threads(1)
    id2label = model.config.id2label
    labels = [id2label[i] for i in sorted(id2label)]
    max_len = DEFAULT_MAX_SEQUENCE_LENGTH
    try:
        entries = read_provenance(model_dir)
        max_len = int(entries.get("max_sequence_length", max_len))
    except FileNotFoundError:
        pass
    return tokenizer, model, labels, max_len


def predict_word_labels(tokenizer, model, labels: Sequence[str],
                        batch_words: Sequence[Sequence[str]],
                        max_sequence_length: int) -> list[list[str]]:
    """Predict one label per word for each sentence in the batch.

    The label of a word is the argmax over its first subword.  Words that
    fall past the truncation horizon have no subword at all; they come
    back as "O" so the output always matches the input word count.
    """
    import torch

    non_empty = [i for i, words in enumerate(batch_words) if words]
    out: list[list[str]] = [[] for _ in batch_words]
    if not non_empty:
        return out
    encoded = tokenizer(
        [list(batch_words[i]) for i in non_empty],
        is_split_into_words=True, truncation=True,
        max_length=max_sequence_length,
        padding=True, return_tensors="pt")
    with torch.no_grad():
        logits = model(**encoded).logits
    best = logits.argmax(dim=-1)
    for row, i in enumerate(non_empty):
        word_ids = encoded.word_ids(batch_index=row)
        sentence = ["O"] * len(batch_words[i])
        seen: set[int] = set()
        for position, word_id in enumerate(word_ids):
            if word_id is None or word_id in seen:
                continue
            seen.add(word_id)
            sentence[word_id] = labels[int(best[row, position])]
        out[i] = sentence
    return out
