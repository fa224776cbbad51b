"""Gazetteer and averaged-perceptron taggers, including a brute-force
enumeration oracle for the constrained decoder."""
from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from clinspan.bio import (
    InvalidSequence,
    LabeledSentence,
    TagSet,
    UnknownLabel,
    is_valid_sequence,
)
from clinspan.taggers import (
    EmptyCorpus,
    GazetteerTagger,
    PerceptronModel,
    PerceptronTagger,
    extract_features,
    tag_gazetteer,
    train_gazetteer,
    train_perceptron,
    viterbi_decode,
)
from clinspan.taggers.gazetteer import normalize_token
from clinspan.taggers.perceptron import START, _decode, _emissions, _transition_valid

from conftest import doc, find_mention, sent

MEDS = TagSet(("FARMACO",))
BOTH = TagSet(("ENFERMEDAD", "FARMACO"))


class TestFeatures:
    def test_full_feature_vector(self):
        s = sent("Toma Aspirina diaria.")
        assert extract_features(s, 1) == [
            "bias",
            "lower=aspirina",
            "shape=Xx",
            "pre1=A", "suf1=a",
            "pre2=As", "suf2=na",
            "pre3=Asp", "suf3=ina",
            "isdigit=0",
            "ispunct=0",
            "cap=1",
            "allcaps=0",
            "w[-2]=<s>",
            "w[-1]=Toma",
            "w[+1]=diaria",
            "w[+2]=.",
            "bigram=Toma|Aspirina",
        ]

    def test_short_token_skips_long_affixes(self):
        s = sent("a b")
        feats = extract_features(s, 0)
        assert "pre1=a" in feats and "suf1=a" in feats
        assert not any(f.startswith(("pre2", "suf2", "pre3", "suf3")) for f in feats)

    def test_shapes(self):
        s = sent("ASA p53 70 , árbol")
        def shape_of(i):
            return next(f for f in extract_features(s, i) if f.startswith("shape="))
        assert shape_of(0) == "shape=X"     # runs collapse
        assert shape_of(1) == "shape=xd"
        assert shape_of(2) == "shape=d"
        assert shape_of(3) == "shape=p"
        assert shape_of(4) == "shape=x"     # accented lowercase is still x

    def test_digit_and_punct_flags(self):
        s = sent("70 ,")
        assert "isdigit=1" in extract_features(s, 0)
        assert "ispunct=0" in extract_features(s, 0)
        assert "ispunct=1" in extract_features(s, 1)
        assert "isdigit=0" in extract_features(s, 1)

    def test_right_boundary_markers(self):
        s = sent("uno dos")
        feats = extract_features(s, 1)
        assert "w[+1]=</s>" in feats
        assert "w[+2]=</s>" in feats
        assert "w[-2]=<s>" in feats

    def test_index_out_of_range(self):
        with pytest.raises(IndexError):
            extract_features(sent("uno"), 1)

    def test_deterministic(self):
        s = sent("Toma Aspirina diaria.")
        assert extract_features(s, 2) == extract_features(s, 2)


class TestGazetteer:
    def _corpus(self):
        t1 = "Toma aspirina a diario."
        t2 = "Presenta insuficiencia cardíaca aguda."
        return [
            doc("d1", t1, (find_mention(t1, "aspirina", "FARMACO"),)),
            doc("d2", t2, (find_mention(t2, "insuficiencia cardíaca", "ENFERMEDAD"),)),
        ]

    def test_phrases_are_normalized_token_tuples(self):
        phrases = train_gazetteer(self._corpus(), BOTH)
        assert phrases == {("aspirina",): "FARMACO",
                           ("insuficiencia", "cardíaca"): "ENFERMEDAD"}

    def test_normalization_is_nfc_plus_casefold(self):
        assert normalize_token("ASPIRINA") == "aspirina"
        assert normalize_token("Café") == "café"

    def test_matches_are_case_insensitive(self):
        phrases = train_gazetteer(self._corpus(), BOTH)
        labels = tag_gazetteer(phrases, sent("Recibe ASPIRINA hoy"))
        assert labels == ["O", "B-FARMACO", "O"]

    def test_longest_match_wins(self):
        phrases = {("insuficiencia",): "ENFERMEDAD",
                   ("insuficiencia", "cardíaca"): "ENFERMEDAD"}
        labels = tag_gazetteer(phrases, sent("insuficiencia cardíaca aguda"))
        assert labels == ["B-ENFERMEDAD", "I-ENFERMEDAD", "O"]

    def test_no_overlapping_matches(self):
        # after a match consumes tokens, matching resumes past its end
        phrases = {("a", "b"): "FARMACO", ("b", "c"): "FARMACO"}
        labels = tag_gazetteer(phrases, sent("a b c"))
        assert labels == ["B-FARMACO", "I-FARMACO", "O"]

    def test_majority_vote_on_conflicts(self):
        t = "aspirina aspirina aspirina"
        docs = [doc("d1", t, (
            find_mention(t, "aspirina", "FARMACO", occurrence=1),
            find_mention(t, "aspirina", "FARMACO", occurrence=2, mention_id="T2"),
            find_mention(t, "aspirina", "ENFERMEDAD", occurrence=3, mention_id="T3"),
        ))]
        assert train_gazetteer(docs, BOTH) == {("aspirina",): "FARMACO"}

    def test_tie_goes_to_tagset_order(self):
        t = "aspirina aspirina"
        docs = [doc("d1", t, (
            find_mention(t, "aspirina", "FARMACO", occurrence=1),
            find_mention(t, "aspirina", "ENFERMEDAD", occurrence=2, mention_id="T2"),
        ))]
        assert train_gazetteer(docs, BOTH) == {("aspirina",): "ENFERMEDAD"}

    def test_unknown_mention_label_rejected(self):
        with pytest.raises(UnknownLabel):
            train_gazetteer(self._corpus(), MEDS)

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            train_gazetteer([], MEDS)

    def test_estimator_roundtrip(self):
        est = GazetteerTagger(tagset=BOTH).fit(self._corpus())
        assert est.max_phrase_len_ == 2
        preds = est.predict([sent("Toma aspirina a diario.")])
        assert preds == [["O", "B-FARMACO", "O", "O", "O"]]

    def test_estimator_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            GazetteerTagger(tagset=BOTH).predict([sent("uno")])

    def test_estimator_cloneable(self):
        est = GazetteerTagger(tagset=BOTH)
        assert clone(est).get_params()["tagset"] == BOTH


class TestDecoder:
    def test_zero_weights_decode_all_outside(self):
        model = PerceptronModel(tagset=BOTH, feature_weights={},
                                averaged_weights={}, transition_weights={},
                                raw_transition_weights={}, epochs=1, seed=0,
                                updates=0)
        assert viterbi_decode(model, sent("uno dos tres")) == ["O", "O", "O"]

    def test_invalid_transitions_structurally_excluded(self):
        # a huge pull toward I-FARMACO must still produce a valid sequence
        model = PerceptronModel(tagset=MEDS, feature_weights={},
                                averaged_weights={("bias", "I-FARMACO"): 100.0},
                                transition_weights={}, raw_transition_weights={},
                                epochs=1, seed=0, updates=0)
        labels = viterbi_decode(model, sent("uno dos tres"))
        assert labels == ["B-FARMACO", "I-FARMACO", "I-FARMACO"]
        assert is_valid_sequence(labels)

    def test_transition_score_minus_inf_for_invalid(self):
        model = PerceptronModel(tagset=MEDS, feature_weights={},
                                averaged_weights={}, transition_weights={},
                                raw_transition_weights={}, epochs=1, seed=0,
                                updates=0)
        assert model.transition_score("O", "I-FARMACO") == float("-inf")
        assert model.transition_score("B-FARMACO", "I-FARMACO") == 0.0

    def test_transition_validity_table(self):
        assert _transition_valid(START, "O")
        assert _transition_valid(START, "B-FARMACO")
        assert not _transition_valid(START, "I-FARMACO")
        assert not _transition_valid("O", "I-FARMACO")
        assert not _transition_valid("B-ENFERMEDAD", "I-FARMACO")
        assert _transition_valid("I-FARMACO", "I-FARMACO")
        assert _transition_valid("B-FARMACO", "B-ENFERMEDAD")


def brute_force_decode(emissions, labels, transitions):
    """Exhaustive reference: max total score, ties to the lexicographically
    first index path under canonical label order."""
    n = len(emissions)
    best_score, best_path = None, None
    for path in itertools.product(range(len(labels)), repeat=n):
        prev = START
        score = 0
        ok = True
        for i, li in enumerate(path):
            cur = labels[li]
            if not _transition_valid(prev, cur):
                ok = False
                break
            score += transitions.get((prev, cur), 0) + emissions[i][li]
            prev = cur
        if not ok:
            continue
        if best_score is None or score > best_score or (
                score == best_score and path < best_path):
            best_score, best_path = score, path
    return [labels[i] for i in best_path]


_label_sets = st.sampled_from([MEDS.sequence_labels(), BOTH.sequence_labels()])


@st.composite
def _decode_case(draw):
    labels = draw(_label_sets)
    n = draw(st.integers(min_value=1, max_value=5))
    emissions = [[draw(st.integers(min_value=-3, max_value=3))
                  for _ in range(len(labels))] for _ in range(n)]
    transitions = {}
    for prev in (START,) + tuple(labels):
        for cur in labels:
            if _transition_valid(prev, cur) and draw(st.booleans()):
                transitions[(prev, cur)] = draw(st.integers(min_value=-2, max_value=2))
    return emissions, labels, transitions


class TestDecoderOracle:
    @settings(max_examples=300, deadline=None)
    @given(_decode_case())
    def test_decode_matches_exhaustive_enumeration(self, case):
        emissions, labels, transitions = case
        got = _decode(emissions, list(labels), transitions)
        want = brute_force_decode(emissions, labels, transitions)
        assert got == want
        assert is_valid_sequence(got)

    def test_tie_break_prefers_outside(self):
        # all-zero scores: every valid path ties; O is canonically first
        labels = list(BOTH.sequence_labels())
        emissions = [[0] * len(labels) for _ in range(3)]
        assert _decode(emissions, labels, {}) == ["O", "O", "O"]

    def test_tie_break_is_positional_lexicographic(self):
        # first position ties between O and B-ENFERMEDAD; the earliest
        # position decides first and prefers the canonically-earlier O
        labels = list(BOTH.sequence_labels())
        emissions = [[1, 1, 0, 0, 0], [0, 0, 0, 0, 0]]
        got = _decode(emissions, labels, {})
        assert got == ["O", "O"]
        assert got == brute_force_decode(emissions, labels, {})


class TestPerceptronTraining:
    def _toy_corpus(self):
        cases = [
            ("Toma aspirina diaria", ["O", "B-FARMACO", "O"]),
            ("Recibe enalapril", ["O", "B-FARMACO"]),
            ("aspirina antes del desayuno", ["B-FARMACO", "O", "O", "O"]),
            ("Sin cambios en el tratamiento", ["O", "O", "O", "O", "O"]),
            ("enalapril suspendido", ["B-FARMACO", "O"]),
            ("control sin medicación", ["O", "O", "O"]),
        ]
        return [LabeledSentence(sentence=sent(t), labels=tuple(ls))
                for t, ls in cases]

    def test_single_token_sentence_one_epoch_exact_fit(self):
        ls = LabeledSentence(sentence=sent("aspirina"), labels=("B-FARMACO",))
        model = train_perceptron([ls], MEDS, epochs=1, seed=13)
        assert viterbi_decode(model, ls.sentence) == ["B-FARMACO"]
        assert model.updates == 1

    def test_toy_corpus_converges_to_exact_fit(self):
        corpus = self._toy_corpus()
        model = train_perceptron(corpus, MEDS, epochs=30, seed=13)
        for ls in corpus:
            assert viterbi_decode(model, ls.sentence) == list(ls.labels)

    def test_predictions_always_valid_bio(self):
        model = train_perceptron(self._toy_corpus(), MEDS, epochs=3, seed=13)
        for text in ("texto nunca visto antes", "aspirina enalapril aspirina",
                     "uno", "., ,."):
            assert is_valid_sequence(viterbi_decode(model, sent(text)))

    def test_bit_reproducible_given_seed(self):
        a = train_perceptron(self._toy_corpus(), MEDS, epochs=4, seed=7)
        b = train_perceptron(self._toy_corpus(), MEDS, epochs=4, seed=7)
        assert a.feature_weights == b.feature_weights
        assert a.averaged_weights == b.averaged_weights
        assert a.transition_weights == b.transition_weights
        assert a.updates == b.updates

    def test_metadata_recorded(self):
        model = train_perceptron(self._toy_corpus(), MEDS, epochs=2, seed=99)
        assert (model.epochs, model.seed) == (2, 99)
        assert model.updates > 0
        assert model.tagset == MEDS

    def test_weights_average_of_integer_updates(self):
        # raw weights are integral; averages are exact multiples of 1/t
        model = train_perceptron(self._toy_corpus(), MEDS, epochs=2, seed=13)
        assert all(float(w).is_integer() for w in model.feature_weights.values())
        t = 2 * len(self._toy_corpus())
        for w in model.averaged_weights.values():
            assert (w * t) == pytest.approx(round(w * t))

    def test_gold_outside_tagset_rejected(self):
        ls = LabeledSentence(sentence=sent("uno"), labels=("B-ENFERMEDAD",))
        with pytest.raises(UnknownLabel):
            train_perceptron([ls], MEDS, epochs=1)

    def test_invalid_gold_bio_rejected(self):
        bad = LabeledSentence(sentence=sent("uno dos"),
                              labels=("O", "I-FARMACO"))
        with pytest.raises(InvalidSequence):
            train_perceptron([bad], MEDS, epochs=1)

    def test_empty_corpus_rejected(self):
        with pytest.raises(EmptyCorpus):
            train_perceptron([], MEDS, epochs=1)

    def test_bad_epochs_rejected(self):
        ls = LabeledSentence(sentence=sent("uno"), labels=("O",))
        with pytest.raises(ValueError):
            train_perceptron([ls], MEDS, epochs=0)


class TestPerceptronEstimator:
    def test_fit_on_labeled_sentences(self):
        est = PerceptronTagger(tagset=MEDS, epochs=1, seed=13)
        ls = LabeledSentence(sentence=sent("aspirina"), labels=("B-FARMACO",))
        est.fit([ls])
        assert est.predict([ls.sentence]) == [["B-FARMACO"]]

    def test_fit_with_separate_labels(self):
        est = PerceptronTagger(tagset=MEDS, epochs=1, seed=13)
        est.fit([sent("aspirina")], [["B-FARMACO"]])
        assert est.predict([sent("aspirina")]) == [["B-FARMACO"]]

    def test_length_mismatch_rejected(self):
        est = PerceptronTagger(tagset=MEDS)
        with pytest.raises(ValueError):
            est.fit([sent("uno")], [["O"], ["O"]])

    def test_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            PerceptronTagger(tagset=MEDS).predict([sent("uno")])

    def test_get_params(self):
        est = PerceptronTagger(tagset=MEDS, epochs=9, seed=4)
        params = est.get_params()
        assert params["epochs"] == 9 and params["seed"] == 4

    def test_emissions_follow_feature_weights(self):
        feats = [["bias", "lower=x"]]
        weights = {("bias", "O"): 1, ("lower=x", "O"): 2,
                   ("bias", "B-FARMACO"): 5}
        rows = _emissions(feats, ["O", "B-FARMACO"], weights)
        assert rows == [[3, 5]]
