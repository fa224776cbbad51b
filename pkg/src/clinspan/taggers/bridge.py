"""Client for external taggers speaking the line-delimited JSON protocol.

One client owns one child process.  Messages are single UTF-8 lines on
the child's stdin/stdout; stderr passes through untouched.  Batches are
strictly sequential: the next request goes out only after the previous
reply arrived.  Replies with the wrong shape or length are rejected, not
repaired; only label-level repair (orphan I-X, stray specials) applies.

Every line sent or received is appended to ``client.transcript`` so a
conversation can be checked for conformance after the fact with
:func:`validate_transcript`.
"""
from __future__ import annotations

import json
import queue
import subprocess
import threading
from dataclasses import dataclass
from typing import Sequence

from sklearn.base import BaseEstimator

from ..bio import TagSet, UnknownLabel, repair_labels
from ..segmentation import Sentence
from .base import ensure_sentences

PROTOCOL_VERSION = 1


class BridgeError(RuntimeError):
    pass


class BridgeLaunchFailure(BridgeError):
    pass


class HandshakeTimeout(BridgeError):
    pass


class BatchTimeout(BridgeError):
    pass


class ProtocolViolation(BridgeError):
    pass


@dataclass(frozen=True)
class BridgeConfig:
    command: tuple[str, ...]
    handshake_timeout: float = 10.0
    batch_timeout: float = 30.0
    max_batch: int = 16

    def __post_init__(self) -> None:
        object.__setattr__(self, "command", tuple(self.command))
        if not self.command:
            raise ValueError("bridge command must not be empty")
        if self.handshake_timeout <= 0 or self.batch_timeout <= 0:
            raise ValueError("timeouts must be positive")
        if self.max_batch < 1:
            raise ValueError("max_batch must be at least 1")


def _sentence_payload(sentence: Sentence) -> dict:
    return {"tokens": [{"text": t.surface, "start": t.start, "end": t.end}
                       for t in sentence.tokens]}


class BridgeClient:
    """Launches the child, handshakes, then tags batches sequentially."""

    def __init__(self, config: BridgeConfig, tagset: TagSet):
        self.config = config
        self.tagset = tagset
        self.transcript: list[tuple[str, str]] = []
        self.name: str | None = None
        self._batch_id = 0
        try:
            self._proc = subprocess.Popen(
                list(config.command), stdin=subprocess.PIPE,
                stdout=subprocess.PIPE, stderr=None,
                text=True, encoding="utf-8", bufsize=1)
        except OSError as exc:
            raise BridgeLaunchFailure("cannot launch %r: %s"
                                      % (list(config.command), exc)) from exc
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._handshake()

    def _pump(self) -> None:
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _send(self, message: dict) -> None:
        line = json.dumps(message, ensure_ascii=False, sort_keys=True)
        self.transcript.append(("send", line))
        try:
            self._proc.stdin.write(line + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            raise ProtocolViolation("tagger stopped reading: %s" % exc) from exc

    def _recv(self, timeout: float, timeout_error: type) -> dict:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            raise timeout_error("no reply within %.1fs" % timeout)
        if line is None:
            raise ProtocolViolation("tagger closed its output stream")
        self.transcript.append(("recv", line.rstrip("\n")))
        try:
            message = json.loads(line)
        except ValueError as exc:
            raise ProtocolViolation("reply is not JSON: %r" % line.strip()) from exc
        if not isinstance(message, dict):
            raise ProtocolViolation("reply is not a JSON object: %r" % line.strip())
        return message

    def _handshake(self) -> None:
        self._send({"type": "hello", "protocol": PROTOCOL_VERSION,
                    "labels": list(self.tagset.alphabet())})
        reply = self._recv(self.config.handshake_timeout, HandshakeTimeout)
        if reply.get("type") != "ready" or not isinstance(reply.get("name"), str):
            raise ProtocolViolation("expected ready message, got %r" % reply)
        self.name = reply["name"]

    def tag_batch(self, sentences: Sequence[Sentence]) -> list[list[str]]:
        sents = ensure_sentences(sentences)
        if not sents:
            return []
        if len(sents) > self.config.max_batch:
            raise ValueError("batch of %d exceeds max_batch=%d"
                             % (len(sents), self.config.max_batch))
        self._batch_id += 1
        self._send({"type": "tag", "batch_id": self._batch_id,
                    "sentences": [_sentence_payload(s) for s in sents]})
        reply = self._recv(self.config.batch_timeout, BatchTimeout)
        return self._check_reply(reply, sents)

    def _check_reply(self, reply: dict, sents: list[Sentence]) -> list[list[str]]:
        if reply.get("type") != "labels":
            raise ProtocolViolation("expected labels message, got %r" % reply)
        if reply.get("batch_id") != self._batch_id:
            raise ProtocolViolation("batch_id %r does not match request %d"
                                    % (reply.get("batch_id"), self._batch_id))
        labels = reply.get("labels")
        if not isinstance(labels, list) or len(labels) != len(sents):
            raise ProtocolViolation("expected %d label sequences, got %r"
                                    % (len(sents), labels if not isinstance(labels, list)
                                       else len(labels)))
        allowed = set(self.tagset.alphabet())
        out = []
        for seq, sentence in zip(labels, sents):
            if not isinstance(seq, list) or len(seq) != len(sentence.tokens):
                raise ProtocolViolation(
                    "got %s labels for a %d-token sentence"
                    % (len(seq) if isinstance(seq, list) else "non-list",
                       len(sentence.tokens)))
            for label in seq:
                if not isinstance(label, str):
                    raise ProtocolViolation("non-string label %r" % (label,))
                if label not in allowed:
                    raise UnknownLabel("label %r outside the agreed alphabet" % label)
            out.append(repair_labels(seq))
        return out

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send({"type": "bye"})
            except ProtocolViolation:
                pass
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()
        if self._proc.stdin and not self._proc.stdin.closed:
            self._proc.stdin.close()
        self._reader.join(timeout=5)
        self.returncode = self._proc.returncode

    def __enter__(self) -> "BridgeClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def external_tag(config: BridgeConfig, sentences: Sequence[Sentence],
                 tagset: TagSet) -> list[list[str]]:
    """One-shot convenience: launch, tag everything in batches, shut down."""
    sents = ensure_sentences(sentences)
    if not sents:
        return []
    out: list[list[str]] = []
    with BridgeClient(config, tagset) as client:
        for i in range(0, len(sents), config.max_batch):
            out.extend(client.tag_batch(sents[i:i + config.max_batch]))
    return out


class BridgeTagger(BaseEstimator):
    """Estimator facade over external_tag; the external model is pre-trained,
    so fit is a no-op that exists for interface uniformity."""

    def __init__(self, config: BridgeConfig, tagset: TagSet):
        self.config = config
        self.tagset = tagset

    def fit(self, X=None, y=None) -> "BridgeTagger":
        return self

    def predict(self, X: Sequence[Sentence]) -> list[list[str]]:
        return external_tag(self.config, X, self.tagset)


def validate_transcript(transcript: Sequence[tuple[str, str]],
                        tagset: TagSet | None = None) -> list[str]:
    """Check a recorded conversation against the protocol; returns a list
    of violations, empty when conformant.  Request/reply payloads are
    cross-checked (batch ids, sentence and token counts)."""
    problems: list[str] = []
    events = []
    for direction, raw in transcript:
        try:
            events.append((direction, json.loads(raw)))
        except ValueError:
            problems.append("%s line is not JSON: %r" % (direction, raw))
    if problems:
        return problems
    if not events:
        return ["empty transcript"]

    def expect(i: int, direction: str, what: str) -> dict | None:
        if i >= len(events):
            problems.append("transcript ended before %s" % what)
            return None
        d, msg = events[i]
        if d != direction or not isinstance(msg, dict):
            problems.append("event %d: expected %s %s, got %s %r" % (i, direction, what, d, msg))
            return None
        return msg

    hello = expect(0, "send", "hello")
    if hello is not None and (hello.get("type") != "hello"
                              or hello.get("protocol") != PROTOCOL_VERSION
                              or not isinstance(hello.get("labels"), list)):
        problems.append("bad hello: %r" % hello)
    ready = expect(1, "recv", "ready")
    if ready is not None and (ready.get("type") != "ready"
                              or not isinstance(ready.get("name"), str)):
        problems.append("bad ready: %r" % ready)

    i = 2
    seen_ids: set = set()
    while i < len(events):
        direction, msg = events[i]
        if direction == "send" and msg.get("type") == "bye":
            if i != len(events) - 1:
                problems.append("messages after bye")
            return problems
        request = expect(i, "send", "tag request")
        if request is None:
            return problems
        if request.get("type") != "tag":
            problems.append("event %d: expected tag request, got %r" % (i, request))
            return problems
        batch_id = request.get("batch_id")
        if not isinstance(batch_id, int) or batch_id in seen_ids:
            problems.append("event %d: bad or repeated batch_id %r" % (i, batch_id))
        seen_ids.add(batch_id)
        sentences = request.get("sentences")
        if not isinstance(sentences, list) or not all(
                isinstance(s, dict) and isinstance(s.get("tokens"), list)
                and all(isinstance(t, dict) and isinstance(t.get("text"), str)
                        and isinstance(t.get("start"), int) and isinstance(t.get("end"), int)
                        for t in s["tokens"])
                for s in sentences):
            problems.append("event %d: malformed sentences payload" % i)
            return problems
        reply = expect(i + 1, "recv", "labels reply")
        if reply is None:
            return problems
        if reply.get("type") != "labels" or reply.get("batch_id") != batch_id:
            problems.append("event %d: bad labels reply %r" % (i + 1, reply))
        else:
            labels = reply.get("labels")
            if not isinstance(labels, list) or len(labels) != len(sentences):
                problems.append("event %d: labels count mismatch" % (i + 1))
            else:
                for k, (seq, sent) in enumerate(zip(labels, sentences)):
                    if not isinstance(seq, list) or len(seq) != len(sent["tokens"]):
                        problems.append("event %d: sentence %d label length mismatch"
                                        % (i + 1, k))
                    elif tagset is not None:
                        for label in seq:
                            if label not in tagset.alphabet():
                                problems.append("event %d: label %r outside alphabet"
                                                % (i + 1, label))
        i += 2
    problems.append("transcript ended without bye")
    return problems
