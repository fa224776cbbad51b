"""Fine-tune a token-classification head for clinical span labelling.

Word/subword alignment: the first subword of each word carries the word's
label; continuation subwords and special positions are set to the ignore
index (-100) so they contribute nothing to the loss.  Checkpoint selection
is by dev-set micro F1 with a strictly-greater rule, so ties keep the
earlier epoch.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from . import scoring
from .infer import BaseModelUnavailable, load_base_for_training, predict_word_labels
from .provenance import write_provenance
from .tsv import Sentence, all_sentences, load_tsv

IGNORE_INDEX = -100

__all__ = [
    "FinetuneConfig", "LabelMismatch", "BaseModelUnavailable",
    "bio_alphabet", "finetune",
]


class LabelMismatch(Exception):
    """The corpus uses labels the requested tagset cannot express."""


@dataclass(frozen=True)
class FinetuneConfig:
    base_model: Path
    epochs: int = 10
    batch_size: int = 8
    learning_rate: float = 9e-6
    max_sequence_length: int = 256
    seed: int = 13

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1, got %d" % self.epochs)
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1, got %d" % self.batch_size)
        if not self.learning_rate > 0.0:
            raise ValueError("learning_rate must be positive, got %r"
                             % (self.learning_rate,))
        if self.max_sequence_length < 8:
            raise ValueError("max_sequence_length must be >= 8, got %d"
                             % self.max_sequence_length)


def bio_alphabet(entity_labels: Sequence[str]) -> list[str]:
    """Class list for a tagset: O first, then B-X/I-X per entity in order."""
    labels = ["O"]
    for entity in entity_labels:
        labels.append("B-" + entity)
        labels.append("I-" + entity)
    return labels


def _check_labels(name: str, sentences: Sequence[Sentence],
                  allowed: set[str]) -> None:
    found = {t.label for s in sentences for t in s.tokens}
    extra = sorted(found - allowed)
    if extra:
        raise LabelMismatch("%s split uses labels outside the tagset: %s"
                            % (name, ", ".join(extra)))


def _encode_batch(tokenizer, sentences: Sequence[Sentence],
                  label2id: dict[str, int], max_len: int):
    import torch

    encoded = tokenizer(
        [s.words() for s in sentences],
        is_split_into_words=True, truncation=True,
        max_length=max_len, padding=True, return_tensors="pt")
    labels = torch.full(encoded["input_ids"].shape, IGNORE_INDEX,
                        dtype=torch.long)
    for row, sentence in enumerate(sentences):
        word_labels = sentence.labels()
        previous = None
        for position, word_id in enumerate(encoded.word_ids(batch_index=row)):
            if word_id is not None and word_id != previous:
                labels[row, position] = label2id[word_labels[word_id]]
            previous = word_id
    return encoded, labels


def _dev_f1(tokenizer, model, labels: Sequence[str],
            sentences: Sequence[Sentence], batch_size: int,
            max_len: int) -> float:
    model.eval()
    predicted: list[list[str]] = []
    for i in range(0, len(sentences), batch_size):
        chunk = sentences[i:i + batch_size]
        predicted.extend(predict_word_labels(
            tokenizer, model, labels, [s.words() for s in chunk], max_len))
    model.train()
    return scoring.corpus_f1(sentences, predicted)[2]


def finetune(train_tsv: Path, dev_tsv: Path, out_dir: Path,
             config: FinetuneConfig,
             entity_labels: Sequence[str]) -> Path:
    """Train, select the best epoch on dev, and write a model directory."""
    import torch

    train_docs = load_tsv(train_tsv)
    dev_docs = load_tsv(dev_tsv)
    train = all_sentences(train_docs)
    dev = all_sentences(dev_docs)
    if not train:
        raise ValueError("training split is empty: %s" % train_tsv)

    labels = bio_alphabet(entity_labels)
    allowed = set(labels)
    _check_labels("train", train, allowed)
    _check_labels("dev", dev, allowed)
    label2id = {label: i for i, label in enumerate(labels)}

    torch.set_num_threads(1)
    # Head initialisation draws from the global generator, so the seed has
    # to be in place before the base checkpoint is loaded.
    torch.manual_seed(config.seed)
    tokenizer, model = load_base_for_training(config.base_model, labels)
    model.train()
    optimizer = torch.optim.AdamW(model.parameters(),
                                  lr=config.learning_rate, weight_decay=0.01)
    shuffler = random.Random(config.seed)

    weight_decay = 0.01
    best_f1 = -1.0
    best_epoch = 0
    best_state = None
    order = list(range(len(train)))
    for epoch in range(1, config.epochs + 1):
        shuffler.shuffle(order)
        for i in range(0, len(order), config.batch_size):
            batch = [train[j] for j in order[i:i + config.batch_size]]
            encoded, batch_labels = _encode_batch(
                tokenizer, batch, label2id, config.max_sequence_length)
            loss = model(**encoded, labels=batch_labels).loss
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
        if dev:
            f1 = _dev_f1(tokenizer, model, labels, dev,
                         config.batch_size, config.max_sequence_length)
        else:
            f1 = 0.0
        if f1 > best_f1:
            best_f1 = f1
            best_epoch = epoch
            best_state = {k: v.detach().clone()
                          for k, v in model.state_dict().items()}

    assert best_state is not None
    model.load_state_dict(best_state)
    model.eval()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    write_provenance(out_dir, {
        "base_model": str(config.base_model),
        "entity_labels": ",".join(entity_labels),
        "epochs": str(config.epochs),
        "batch_size": str(config.batch_size),
        "learning_rate": repr(config.learning_rate),
        "max_sequence_length": str(config.max_sequence_length),
        "seed": str(config.seed),
        "optimizer": "AdamW",
        "weight_decay": repr(weight_decay),
        "threads": "1",
        "best_epoch": str(best_epoch),
        "dev_f1": "%.6f" % max(best_f1, 0.0),
        "train_documents": str(len(train_docs)),
        "train_sentences": str(len(train)),
        "dev_documents": str(len(dev_docs)),
        "dev_sentences": str(len(dev)),
    })
    return out_dir
