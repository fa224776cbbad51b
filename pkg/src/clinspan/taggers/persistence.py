"""Versioned text persistence for trained models.

Layout: a magic first line ``ner-model v1 <kind>`` followed by
tab-separated records sorted lexicographically, so identical models
always serialize to identical bytes.  Floats are written with repr() and
round-trip exactly.  Token surfaces and labels never contain whitespace,
which keeps the format unambiguous.
"""
from __future__ import annotations

from pathlib import Path

from ..bio import TagSet
from .gazetteer import GazetteerTagger
from .perceptron import PerceptronModel, PerceptronTagger

MAGIC_PREFIX = "ner-model v1"


class ModelFormatError(ValueError):
    """The file is not a readable v1 model."""


def _gazetteer_lines(tagger: GazetteerTagger) -> list[str]:
    lines = ["tagset\t%s" % " ".join(tagger.tagset.entity_labels)]
    for phrase, label in tagger.phrases_.items():
        lines.append("phrase\t%s\t%s" % (label, " ".join(phrase)))
    return lines


def _perceptron_lines(model: PerceptronModel) -> list[str]:
    lines = ["tagset\t%s" % " ".join(model.tagset.entity_labels),
             "meta\tepochs\t%d" % model.epochs,
             "meta\tseed\t%d" % model.seed,
             "meta\tupdates\t%d" % model.updates]
    for (feat, label), w in model.averaged_weights.items():
        lines.append("avg\t%s\t%s\t%s" % (feat, label, repr(w)))
    for (feat, label), w in model.feature_weights.items():
        lines.append("raw\t%s\t%s\t%s" % (feat, label, repr(w)))
    for (a, b), w in model.transition_weights.items():
        lines.append("trans_avg\t%s\t%s\t%s" % (a, b, repr(w)))
    for (a, b), w in model.raw_transition_weights.items():
        lines.append("trans_raw\t%s\t%s\t%s" % (a, b, repr(w)))
    return lines


def serialize_model(model) -> str:
    if isinstance(model, PerceptronTagger):
        model = model.model_
    if isinstance(model, PerceptronModel):
        kind, lines = "perceptron", _perceptron_lines(model)
    elif isinstance(model, GazetteerTagger):
        kind, lines = "gazetteer", _gazetteer_lines(model)
    else:
        raise TypeError("cannot serialize %r" % type(model).__name__)
    return "%s %s\n%s\n" % (MAGIC_PREFIX, kind, "\n".join(sorted(lines)))


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(serialize_model(model), encoding="utf-8")


def _parse_records(lines: list[str]) -> dict[str, list[list[str]]]:
    records: dict[str, list[list[str]]] = {}
    for line in lines:
        if not line:
            continue
        fields = line.split("\t")
        records.setdefault(fields[0], []).append(fields[1:])
    return records


def _require_tagset(records, path) -> TagSet:
    rows = records.get("tagset", [])
    if len(rows) != 1 or len(rows[0]) != 1:
        raise ModelFormatError("%s: expected exactly one tagset record" % path)
    return TagSet(tuple(rows[0][0].split(" ")))


def load_model(path: str | Path):
    """Load a saved model, returning a fitted estimator of the right kind."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    head = lines[0].split(" ")
    if len(head) != 3 or " ".join(head[:2]) != MAGIC_PREFIX:
        raise ModelFormatError("%s: missing '%s <kind>' magic line" % (path, MAGIC_PREFIX))
    kind = head[2]
    records = _parse_records(lines[1:])
    tagset = _require_tagset(records, path)

    if kind == "gazetteer":
        tagger = GazetteerTagger(tagset=tagset)
        phrases = {}
        for row in records.get("phrase", []):
            if len(row) != 2:
                raise ModelFormatError("%s: bad phrase record %r" % (path, row))
            phrases[tuple(row[1].split(" "))] = row[0]
        tagger.phrases_ = phrases
        tagger.max_phrase_len_ = max(map(len, phrases), default=0)
        return tagger

    if kind == "perceptron":
        meta = {row[0]: row[1] for row in records.get("meta", []) if len(row) == 2}
        try:
            epochs = int(meta["epochs"])
            seed = int(meta["seed"])
            updates = int(meta["updates"])
        except (KeyError, ValueError):
            raise ModelFormatError("%s: missing or bad meta records" % path)

        def weight_map(key: str) -> dict:
            out = {}
            for row in records.get(key, []):
                if len(row) != 3:
                    raise ModelFormatError("%s: bad %s record %r" % (path, key, row))
                out[(row[0], row[1])] = float(row[2])
            return out

        model = PerceptronModel(
            tagset=tagset,
            feature_weights=weight_map("raw"),
            averaged_weights=weight_map("avg"),
            transition_weights=weight_map("trans_avg"),
            raw_transition_weights=weight_map("trans_raw"),
            epochs=epochs, seed=seed, updates=updates)
        tagger = PerceptronTagger(tagset=tagset, epochs=epochs, seed=seed)
        tagger.model_ = model
        return tagger

    raise ModelFormatError("%s: unknown model kind %r" % (path, kind))
