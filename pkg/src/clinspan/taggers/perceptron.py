"""Averaged structured perceptron over hand-rolled token features.

Decoding is Viterbi with hard BIO constraints: transitions that would
create an orphan I-label are excluded outright, so output never needs
repair.  All tie-breaking follows canonical label order (O first, then
B-X/I-X per tag set order), implemented so the returned sequence is the
lexicographically first maximizer, which makes decoding reproducible and
directly comparable against brute-force enumeration.

Averaging uses the totals/timestamps trick: weights stay integers during
training, and the average over post-example weight vectors is recovered
exactly at the end.  Given the same corpus order, epochs, and seed the
trained model is bit-identical.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..bio import InvalidSequence, LabeledSentence, TagSet, UnknownLabel, is_valid_sequence
from ..segmentation import Sentence
from .base import EmptyCorpus, ensure_labeled, ensure_sentences

START = "<s>"
_BOUND_LEFT = "<s>"
_BOUND_RIGHT = "</s>"


def _shape(surface: str) -> str:
    classes = []
    for c in surface:
        if c.isdigit():
            classes.append("d")
        elif c.isupper():
            classes.append("X")
        elif c.islower():
            classes.append("x")
        else:
            classes.append("p")
    collapsed = []
    for c in classes:
        if not collapsed or collapsed[-1] != c:
            collapsed.append(c)
    return "".join(collapsed)


def extract_features(sentence: Sentence, index: int) -> list[str]:
    """Deterministic per-token feature strings; order is part of the contract
    because decode-time score sums follow it."""
    tokens = sentence.tokens
    if not 0 <= index < len(tokens):
        raise IndexError("token index %d out of range" % index)
    surface = tokens[index].surface

    def neighbor(offset: int) -> str:
        j = index + offset
        if j < 0:
            return _BOUND_LEFT
        if j >= len(tokens):
            return _BOUND_RIGHT
        return tokens[j].surface

    feats = [
        "bias",
        "lower=%s" % surface.lower(),
        "shape=%s" % _shape(surface),
    ]
    for n in (1, 2, 3):
        if len(surface) >= n:
            feats.append("pre%d=%s" % (n, surface[:n]))
            feats.append("suf%d=%s" % (n, surface[-n:]))
    feats.append("isdigit=%d" % int(surface.isdigit()))
    feats.append("ispunct=%d" % int(not any(c.isalnum() for c in surface)))
    feats.append("cap=%d" % int(surface[0].isupper()))
    feats.append("allcaps=%d" % int(surface.isupper()))
    for offset in (-2, -1, 1, 2):
        feats.append("w[%+d]=%s" % (offset, neighbor(offset)))
    feats.append("bigram=%s|%s" % (neighbor(-1), surface))
    return feats


def _transition_valid(prev: str, cur: str) -> bool:
    if not cur.startswith("I-"):
        return True
    entity = cur[2:]
    return prev in ("B-%s" % entity, "I-%s" % entity)


@dataclass
class PerceptronModel:
    """Trained weights; invalid BIO transitions score hard negative infinity
    (they are excluded structurally, never stored)."""

    tagset: TagSet
    feature_weights: dict[tuple[str, str], float]
    averaged_weights: dict[tuple[str, str], float]
    transition_weights: dict[tuple[str, str], float]
    raw_transition_weights: dict[tuple[str, str], float]
    epochs: int
    seed: int
    updates: int

    def transition_score(self, prev: str, cur: str) -> float:
        if not _transition_valid(prev, cur):
            return float("-inf")
        return self.transition_weights.get((prev, cur), 0.0)


def _emissions(feats: Sequence[Sequence[str]], labels: Sequence[str],
               weights: dict) -> list[list[float]]:
    rows = []
    for token_feats in feats:
        row = []
        for label in labels:
            score = 0
            for f in token_feats:
                score += weights.get((f, label), 0)
            row.append(score)
        rows.append(row)
    return rows


def _decode(emissions: list[list[float]], labels: Sequence[str],
            transitions: dict) -> list[str]:
    """Constrained Viterbi returning the lexicographically first maximizer.

    beta[i][a] is the best achievable suffix score after position i given
    label a there; the forward pass then greedily takes the earliest
    canonical label whose completion attains the global optimum.  The
    forward comparisons reuse the exact expressions of the beta recurrence,
    so float grouping cannot disagree between the two passes.
    """
    n = len(emissions)
    L = len(labels)

    def trans(prev: str, cur: str):
        if not _transition_valid(prev, cur):
            return None
        return transitions.get((prev, cur), 0)

    beta = [[0.0] * L for _ in range(n)]
    for i in range(n - 2, -1, -1):
        for a in range(L):
            best = None
            for b in range(L):
                t = trans(labels[a], labels[b])
                if t is None:
                    continue
                cand = t + emissions[i + 1][b] + beta[i + 1][b]
                if best is None or cand > best:
                    best = cand
            beta[i][a] = best  # O is always a legal successor, never None

    out: list[str] = []
    prev = START
    for i in range(n):
        best = None
        choice = None
        for b in range(L):
            t = trans(prev, labels[b])
            if t is None:
                continue
            cand = t + emissions[i][b] + beta[i][b]
            if best is None or cand > best:
                best = cand
                choice = labels[b]
        out.append(choice)
        prev = choice
    return out


def viterbi_decode(model: PerceptronModel, sentence: Sentence) -> list[str]:
    labels = model.tagset.sequence_labels()
    feats = [extract_features(sentence, i) for i in range(len(sentence.tokens))]
    emissions = _emissions(feats, labels, model.averaged_weights)
    return _decode(emissions, labels, model.transition_weights)


def _bump(weights: dict, totals: dict, stamps: dict, key, delta: int, t: int) -> None:
    w = weights.get(key, 0)
    totals[key] = totals.get(key, 0) + (t - stamps.get(key, 0)) * w
    stamps[key] = t
    weights[key] = w + delta


def _average(weights: dict, totals: dict, stamps: dict, t: int) -> dict:
    # exact mean of the post-example weight vectors w_1..w_t
    out = {}
    for key, w in weights.items():
        total = totals.get(key, 0) + (t - stamps[key] + 1) * w
        avg = total / t
        if avg != 0 or w != 0:
            out[key] = avg
    return out


def _pairs(labels: Sequence[str]) -> list[tuple[str, str]]:
    prev = START
    out = []
    for label in labels:
        out.append((prev, label))
        prev = label
    return out


def train_perceptron(corpus: Sequence[LabeledSentence], tagset: TagSet,
                     epochs: int = 5, seed: int = 13) -> PerceptronModel:
    """Structured training: decode with current weights, push gold up and
    the wrong prediction down.  Per-epoch order comes from one seeded RNG,
    so (corpus order, epochs, seed) fully determine the result."""
    sents = ensure_labeled(corpus, "perceptron training")
    if epochs < 1:
        raise ValueError("epochs must be at least 1")
    labels = tagset.sequence_labels()
    allowed = set(labels)
    for ls in sents:
        for label in ls.labels:
            if label not in allowed:
                raise UnknownLabel("gold label %r not in tag set" % label)
        if not is_valid_sequence(ls.labels):
            raise InvalidSequence("gold labels %r are not valid BIO; repair first"
                                  % (list(ls.labels),))

    feats_cache = [[extract_features(ls.sentence, i)
                    for i in range(len(ls.sentence.tokens))] for ls in sents]

    weights: dict = {}
    totals: dict = {}
    stamps: dict = {}
    t_weights: dict = {}
    t_totals: dict = {}
    t_stamps: dict = {}
    t = 0
    updates = 0
    rng = random.Random(seed)
    order = list(range(len(sents)))

    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            t += 1
            ls = sents[idx]
            gold = list(ls.labels)
            emissions = _emissions(feats_cache[idx], labels, weights)
            pred = _decode(emissions, labels, t_weights)
            if pred == gold:
                continue
            updates += 1
            for i, (g, p) in enumerate(zip(gold, pred)):
                if g == p:
                    continue
                for f in feats_cache[idx][i]:
                    _bump(weights, totals, stamps, (f, g), +1, t)
                    _bump(weights, totals, stamps, (f, p), -1, t)
            for gp, pp in zip(_pairs(gold), _pairs(pred)):
                if gp != pp:
                    _bump(t_weights, t_totals, t_stamps, gp, +1, t)
                    _bump(t_weights, t_totals, t_stamps, pp, -1, t)

    return PerceptronModel(
        tagset=tagset,
        feature_weights={k: float(v) for k, v in weights.items() if v != 0},
        averaged_weights=_average(weights, totals, stamps, t),
        transition_weights=_average(t_weights, t_totals, t_stamps, t),
        raw_transition_weights={k: float(v) for k, v in t_weights.items() if v != 0},
        epochs=epochs, seed=seed, updates=updates)


class PerceptronTagger(BaseEstimator):
    """Estimator wrapper around train_perceptron / viterbi_decode."""

    def __init__(self, tagset: TagSet, epochs: int = 5, seed: int = 13):
        self.tagset = tagset
        self.epochs = epochs
        self.seed = seed

    def fit(self, X: Iterable[Sentence] | Iterable[LabeledSentence],
            y: Sequence[Sequence[str]] | None = None) -> "PerceptronTagger":
        items = list(X)
        if y is None:
            corpus = items
        else:
            if len(items) != len(y):
                raise ValueError("X and y length mismatch")
            corpus = [LabeledSentence(sentence=s, labels=tuple(lbls))
                      for s, lbls in zip(items, y)]
        self.model_ = train_perceptron(corpus, self.tagset,
                                       epochs=self.epochs, seed=self.seed)
        return self

    def predict(self, X: Sequence[Sentence]) -> list[list[str]]:
        check_is_fitted(self, "model_")
        return [viterbi_decode(self.model_, s) for s in ensure_sentences(X)]
