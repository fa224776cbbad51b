#!/usr/bin/env python3
"""Scriptable external tagger double for exercising the line protocol.

Speaks JSON-lines on stdin/stdout: expects hello, answers ready, then
answers tag requests until bye.  ``--mode`` selects a behaviour, most of
them deliberately broken so the client's failure handling can be tested:

  echo            every token gets "O" (conformant)
  mark-first      first token of each sentence gets the first B- label,
                  the rest "O" (conformant, non-trivial labels)
  invalid         every token gets the first I- label (valid alphabet,
                  broken BIO; the client is expected to repair)
  specials        first/last token get "[CLS]"/"[SEP]" (alphabet members
                  that only make sense as padding; client repairs to O)
  wrong-length    drops the last label of each sentence
  unknown-label   answers with a label outside the agreed alphabet
  bad-batch-id    answers with batch_id + 1
  bad-json        answers a non-JSON line
  hang            handshakes, then never answers tag requests
  handshake-hang  never answers hello
  crash           exits abruptly after the handshake
"""
import argparse
import json
import sys
import time


def reply(message: dict) -> None:
    sys.stdout.write(json.dumps(message) + "\n")
    sys.stdout.flush()


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--mode", default="echo")
    parser.add_argument("--name", default=None)
    args = parser.parse_args()
    mode = args.mode
    name = args.name or "double-%s" % mode

    hello = json.loads(sys.stdin.readline())
    assert hello["type"] == "hello", hello
    if mode == "handshake-hang":
        time.sleep(3600)
        return 1
    labels = hello["labels"]
    first_b = next(lbl for lbl in labels if lbl.startswith("B-"))
    first_i = next(lbl for lbl in labels if lbl.startswith("I-"))
    reply({"type": "ready", "name": name})
    if mode == "crash":
        return 3

    for line in sys.stdin:
        request = json.loads(line)
        if request["type"] == "bye":
            return 0
        assert request["type"] == "tag", request
        if mode == "hang":
            time.sleep(3600)
            return 1
        if mode == "bad-json":
            sys.stdout.write("this is not json\n")
            sys.stdout.flush()
            continue
        out = []
        for sentence in request["sentences"]:
            n = len(sentence["tokens"])
            if mode == "mark-first":
                seq = [first_b] + ["O"] * (n - 1)
            elif mode == "invalid":
                seq = [first_i] * n
            elif mode == "specials":
                seq = ["O"] * n
                seq[0] = "[CLS]"
                seq[-1] = "[SEP]"
            elif mode == "wrong-length":
                seq = ["O"] * (n - 1)
            elif mode == "unknown-label":
                seq = ["B-UNICORN"] * n
            else:  # echo
                seq = ["O"] * n
            out.append(seq)
        message = {"type": "labels", "batch_id": request["batch_id"], "labels": out}
        if mode == "bad-batch-id":
            message["batch_id"] = request["batch_id"] + 1
        reply(message)
    return 0


if __name__ == "__main__":
    sys.exit(main())
