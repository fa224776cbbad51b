"""Stdio server for the line-delimited JSON tagging protocol (version 1).

stdout belongs to the protocol: every reply is a single JSON line followed
by a flush, and nothing else may be written there.  Anything that goes
wrong produces one line on stderr and a nonzero exit code.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

from .infer import load_model_dir, predict_word_labels

PROTOCOL_VERSION = 1
SERVER_NAME = "clinspan-bridge"


def _fail(message: str, code: int = 2) -> int:
    print(message, file=sys.stderr)
    return code


def _reply(message: dict) -> None:
    sys.stdout.write(json.dumps(message, ensure_ascii=False, sort_keys=True) + "\n")
    sys.stdout.flush()


def _batch_words(request: dict) -> list[list[str]]:
    sentences = request.get("sentences")
    if not isinstance(sentences, list):
        raise ValueError("tag request without a sentences list")
    batch: list[list[str]] = []
    for k, sentence in enumerate(sentences):
        tokens = sentence.get("tokens") if isinstance(sentence, dict) else None
        if not isinstance(tokens, list):
            raise ValueError("sentence %d has no tokens list" % k)
        words = []
        for token in tokens:
            text = token.get("text") if isinstance(token, dict) else None
            if not isinstance(text, str):
                raise ValueError("sentence %d carries a malformed token" % k)
            words.append(text)
        batch.append(words)
    return batch


def serve(model_dir: Path) -> int:
    """Run the protocol loop over stdin/stdout; returns the exit code."""
    line = sys.stdin.readline()
    if not line:
        return _fail("input ended before hello", 1)
    try:
        hello = json.loads(line)
    except ValueError:
        return _fail("first message is not JSON: %r" % line.strip())
    if not isinstance(hello, dict) or hello.get("type") != "hello":
        return _fail("expected a hello message, got %r" % line.strip())
    if hello.get("protocol") != PROTOCOL_VERSION:
        return _fail("unsupported protocol version %r (this server speaks %d)"
                     % (hello.get("protocol"), PROTOCOL_VERSION))
    client_labels = hello.get("labels")
    if (not isinstance(client_labels, list)
            or not all(isinstance(lbl, str) for lbl in client_labels)):
        return _fail("hello message carries no label alphabet")

    try:
        tokenizer, model, labels, max_len = load_model_dir(Path(model_dir))
    except Exception as exc:
        return _fail("cannot load model from %s: %s" % (model_dir, exc))
    extra = sorted(set(labels) - set(client_labels))
    if extra:
        return _fail("model emits labels outside the client alphabet: %s"
                     % ", ".join(extra))

    _reply({"type": "ready", "name": SERVER_NAME})

    for raw in sys.stdin:
        stripped = raw.strip()
        if not stripped:
            continue
        try:
            request = json.loads(stripped)
        except ValueError:
            return _fail("message is not JSON: %r" % stripped)
        if not isinstance(request, dict):
            return _fail("message is not a JSON object: %r" % stripped)
        kind = request.get("type")
        if kind == "bye":
            return 0
        if kind != "tag":
            return _fail("unexpected message type %r" % (kind,))
        try:
            batch = _batch_words(request)
        except ValueError as exc:
            return _fail(str(exc))
        predicted = predict_word_labels(tokenizer, model, labels, batch, max_len)
        _reply({"type": "labels", "batch_id": request.get("batch_id"),
                "labels": predicted})
    return _fail("input ended without bye", 1)
