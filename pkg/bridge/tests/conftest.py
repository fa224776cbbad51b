"""Shared fixtures: a tiny learnable corpus, base models, and a serve driver.

The corpus is synthetic medication-style prose: a handful of filler words
around known drug names, one in four mentions using a two-word drug so
continuation labels occur.  Base models and the fine-tuned checkpoints are
session-scoped — building them is the expensive part of this suite.
"""
from __future__ import annotations

import json
import random
import subprocess
import sys
from pathlib import Path

import pytest

from clinspan_bridge.basemodel import build_base
from clinspan_bridge.finetune import FinetuneConfig, finetune
from clinspan_bridge.tsv import load_tsv

DRUGS = ["aspirina", "ibuprofeno", "omeprazol", "metformina"]
MULTI_DRUG = ("acido", "acetilsalicilico")
FILLERS = ["el", "paciente", "toma", "cada", "dia", "con", "agua",
           "ayunas", "noche", "dosis", "alta", "sin"]

CLIENT_ALPHABET = ("O", "B-FARMACO", "I-FARMACO", "[CLS]", "[SEP]")


def toy_documents(rng: random.Random, n_docs: int, sentences_per_doc: int,
                  prefix: str) -> list[tuple[str, list[list[tuple[str, str]]]]]:
    """Documents as (doc_id, sentences) with (word, label) pairs."""
    documents = []
    for d in range(n_docs):
        sentences = []
        for _ in range(sentences_per_doc):
            before = [(w, "O") for w in rng.sample(FILLERS, 3)]
            after = [(w, "O") for w in rng.sample(FILLERS, 2)]
            if rng.random() < 0.25:
                mention = [(MULTI_DRUG[0], "B-FARMACO"),
                           (MULTI_DRUG[1], "I-FARMACO")]
            else:
                mention = [(rng.choice(DRUGS), "B-FARMACO")]
            sentences.append(before + mention + after)
        documents.append(("%s%03d" % (prefix, d), sentences))
    return documents


def make_tsv(documents) -> str:
    """Render (doc_id, sentences) pairs as TSV, offsets accumulating per
    document as if words were space-joined."""
    lines = []
    for doc_id, sentences in documents:
        lines.append("# doc = %s" % doc_id)
        position = 0
        for sentence in sentences:
            for word, label in sentence:
                lines.append("%s\t%d\t%d\t%s"
                             % (word, position, position + len(word), label))
                position += len(word) + 1
            lines.append("")
    return "\n".join(lines) + "\n"


@pytest.fixture(scope="session")
def work_dir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("bridge-fixtures")


@pytest.fixture(scope="session")
def train_tsv(work_dir) -> Path:
    path = work_dir / "train.tsv"
    path.write_text(make_tsv(toy_documents(random.Random(7), 12, 5, "tr")),
                    encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def dev_tsv(work_dir) -> Path:
    path = work_dir / "dev.tsv"
    path.write_text(make_tsv(toy_documents(random.Random(8), 3, 5, "dv")),
                    encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def vocab_words(train_tsv) -> list[str]:
    return sorted({token.surface
                   for document in load_tsv(train_tsv)
                   for sentence in document.sentences
                   for token in sentence.tokens})


@pytest.fixture(scope="session")
def word_base(work_dir, vocab_words) -> Path:
    return build_base(work_dir / "word-base", mode="words",
                      words=vocab_words, seed=13)


@pytest.fixture(scope="session")
def char_base(work_dir, vocab_words) -> Path:
    return build_base(work_dir / "char-base", mode="chars",
                      words=vocab_words, seed=13)


TUNE = dict(epochs=2, batch_size=8, learning_rate=5e-3,
            max_sequence_length=64, seed=13)


@pytest.fixture(scope="session")
def tuned_model(work_dir, word_base, train_tsv, dev_tsv) -> Path:
    return finetune(train_tsv, dev_tsv, work_dir / "model",
                    FinetuneConfig(base_model=word_base, **TUNE), ["FARMACO"])


@pytest.fixture(scope="session")
def char_model(work_dir, char_base, train_tsv, dev_tsv) -> Path:
    # max_sequence_length is deliberately tight so truncation paths are
    # reachable with modest inputs.
    config = FinetuneConfig(base_model=char_base, epochs=1, batch_size=8,
                            learning_rate=1e-3, max_sequence_length=48,
                            seed=13)
    return finetune(train_tsv, dev_tsv, work_dir / "char-model",
                    config, ["FARMACO"])


def hello(labels=CLIENT_ALPHABET, protocol: int = 1) -> dict:
    return {"type": "hello", "protocol": protocol, "labels": list(labels)}


def run_serve(model_dir: Path, messages,
              timeout: float = 180.0) -> tuple[int, list[dict], str]:
    """Feed a scripted stdin to `serve` and collect its replies.

    Each message may be a dict (JSON-encoded) or a raw string line.
    Returns (exit code, parsed reply lines, stderr text).
    """
    lines = [m if isinstance(m, str) else json.dumps(m) for m in messages]
    proc = subprocess.run(
        [sys.executable, "-m", "clinspan_bridge", "serve", str(model_dir)],
        input="".join(line + "\n" for line in lines),
        capture_output=True, text=True, timeout=timeout)
    replies = [json.loads(line)
               for line in proc.stdout.splitlines() if line.strip()]
    return proc.returncode, replies, proc.stderr


def tag_request(batch_id: int, word_sentences) -> dict:
    """Build a tag message from bare word lists, synthesising offsets."""
    sentences = []
    for words in word_sentences:
        tokens, position = [], 0
        for word in words:
            tokens.append({"text": word, "start": position,
                           "end": position + len(word)})
            position += len(word) + 1
        sentences.append({"tokens": tokens})
    return {"type": "tag", "batch_id": batch_id, "sentences": sentences}
