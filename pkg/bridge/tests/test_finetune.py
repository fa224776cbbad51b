"""Fine-tuning: configuration, alignment, provenance, determinism."""
import random

import pytest

from conftest import TUNE, make_tsv, toy_documents

from clinspan_bridge.finetune import (BaseModelUnavailable, FinetuneConfig,
                                      LabelMismatch, bio_alphabet, finetune)
from clinspan_bridge.infer import load_model_dir, predict_word_labels
from clinspan_bridge.provenance import read_provenance, write_provenance


def test_bio_alphabet_order():
    assert bio_alphabet(["FARMACO"]) == ["O", "B-FARMACO", "I-FARMACO"]
    assert bio_alphabet(["ENFERMEDAD", "FARMACO"]) == [
        "O", "B-ENFERMEDAD", "I-ENFERMEDAD", "B-FARMACO", "I-FARMACO"]
    assert bio_alphabet([]) == ["O"]


@pytest.mark.parametrize("overrides", [
    {"epochs": 0},
    {"batch_size": 0},
    {"learning_rate": 0.0},
    {"learning_rate": -1e-5},
    {"max_sequence_length": 4},
])
def test_config_rejects_degenerate_values(tmp_path, overrides):
    params = dict(base_model=tmp_path, epochs=1, batch_size=1,
                  learning_rate=1e-4, max_sequence_length=64, seed=13)
    params.update(overrides)
    with pytest.raises(ValueError):
        FinetuneConfig(**params)


def test_unknown_label_in_corpus_is_rejected(tmp_path, word_base, dev_tsv):
    bad = tmp_path / "bad.tsv"
    bad.write_text("# doc = a\nunicornio\t0\t9\tB-UNICORN\n",
                   encoding="utf-8")
    config = FinetuneConfig(base_model=word_base, epochs=1,
                            learning_rate=1e-3, max_sequence_length=16)
    with pytest.raises(LabelMismatch) as err:
        finetune(bad, dev_tsv, tmp_path / "out", config, ["FARMACO"])
    assert "B-UNICORN" in str(err.value)
    assert "train" in str(err.value)


def test_missing_base_model_is_reported(tmp_path, train_tsv, dev_tsv):
    config = FinetuneConfig(base_model=tmp_path / "nowhere", epochs=1,
                            learning_rate=1e-3)
    with pytest.raises(BaseModelUnavailable):
        finetune(train_tsv, dev_tsv, tmp_path / "out", config, ["FARMACO"])


def test_empty_training_split_is_rejected(tmp_path, word_base, dev_tsv):
    empty = tmp_path / "empty.tsv"
    empty.write_text("", encoding="utf-8")
    config = FinetuneConfig(base_model=word_base, epochs=1,
                            learning_rate=1e-3)
    with pytest.raises(ValueError):
        finetune(empty, dev_tsv, tmp_path / "out", config, ["FARMACO"])


def test_tuned_model_directory_contents(tuned_model):
    names = {p.name for p in tuned_model.iterdir()}
    assert {"model.safetensors", "config.json", "tokenizer.json",
            "provenance.txt"} <= names

    entries = read_provenance(tuned_model)
    required = {"base_model", "entity_labels", "epochs", "batch_size",
                "learning_rate", "max_sequence_length", "seed", "optimizer",
                "best_epoch", "dev_f1", "train_sentences", "dev_sentences"}
    assert required <= set(entries)
    assert entries["entity_labels"] == "FARMACO"
    assert entries["optimizer"] == "AdamW"
    assert 0.0 <= float(entries["dev_f1"]) <= 1.0
    assert 1 <= int(entries["best_epoch"]) <= int(entries["epochs"])
    assert entries["train_sentences"] == "60"


def test_toy_corpus_is_learned(tuned_model):
    # the corpus is four drugs plus a fixed filler set; anything short of a
    # near-perfect dev score means training is broken, not unlucky
    assert float(read_provenance(tuned_model)["dev_f1"]) >= 0.9


def test_same_seed_runs_are_byte_identical(tmp_path, word_base, train_tsv,
                                           dev_tsv, tuned_model):
    config = FinetuneConfig(base_model=word_base, **TUNE)
    again = finetune(train_tsv, dev_tsv, tmp_path / "again", config,
                     ["FARMACO"])
    first = read_provenance(tuned_model)
    second = read_provenance(again)
    assert first["dev_f1"] == second["dev_f1"]
    assert first["best_epoch"] == second["best_epoch"]
    assert ((tuned_model / "model.safetensors").read_bytes()
            == (again / "model.safetensors").read_bytes())


def test_loaded_model_exposes_labels_and_length(tuned_model):
    _, _, labels, max_len = load_model_dir(tuned_model)
    assert labels == bio_alphabet(["FARMACO"])
    assert max_len == TUNE["max_sequence_length"]


def test_predictions_preserve_word_counts(tuned_model):
    tokenizer, model, labels, max_len = load_model_dir(tuned_model)
    batch = [["el", "paciente", "toma", "aspirina"],
             [],
             ["aspirina"],
             ["palabrainventada", "sin", "sentido"]]
    out = predict_word_labels(tokenizer, model, labels, batch, max_len)
    assert [len(seq) for seq in out] == [4, 0, 1, 3]
    assert all(label in labels for seq in out for label in seq)
    # in-context mention; a lone drug token has no context and may miss
    assert out[0][3] == "B-FARMACO"


def test_checkpoint_selection_reports_best_epoch(tmp_path, word_base,
                                                 train_tsv, dev_tsv):
    # an absurd learning rate cannot learn anything; selection must still
    # settle on a well-defined epoch and carry its dev score
    config = FinetuneConfig(base_model=word_base, epochs=2, batch_size=8,
                            learning_rate=1e-12, max_sequence_length=64,
                            seed=13)
    out = finetune(train_tsv, dev_tsv, tmp_path / "flat", config, ["FARMACO"])
    entries = read_provenance(out)
    assert entries["best_epoch"] == "1"


def test_provenance_round_trip(tmp_path):
    entries = {"alpha": "1", "beta": "dos tres", "gamma": "x=y"}
    write_provenance(tmp_path, entries)
    assert read_provenance(tmp_path) == entries


def test_provenance_rejects_unrepresentable_keys(tmp_path):
    with pytest.raises(ValueError):
        write_provenance(tmp_path, {"bad\nkey": "v"})


def test_provenance_skips_comments_and_blanks(tmp_path):
    (tmp_path / "provenance.txt").write_text(
        "# comment\n\nkey=value\n other = spaced \n", encoding="utf-8")
    assert read_provenance(tmp_path) == {"key": "value", "other": "spaced"}


def test_provenance_rejects_bare_lines(tmp_path):
    (tmp_path / "provenance.txt").write_text("not a pair\n", encoding="utf-8")
    with pytest.raises(ValueError):
        read_provenance(tmp_path)


def test_dev_split_may_be_empty(tmp_path, word_base, train_tsv):
    empty = tmp_path / "nodev.tsv"
    empty.write_text("", encoding="utf-8")
    config = FinetuneConfig(base_model=word_base, epochs=1, batch_size=8,
                            learning_rate=1e-3, max_sequence_length=64)
    out = finetune(train_tsv, empty, tmp_path / "out", config, ["FARMACO"])
    entries = read_provenance(out)
    assert entries["dev_sentences"] == "0"
    assert entries["dev_f1"] == "0.000000"


def test_make_tsv_offsets_are_consistent(tmp_path):
    # guard the fixture builder itself: offsets come from join-accumulation
    text = make_tsv(toy_documents(random.Random(5), 2, 3, "g"))
    from clinspan_bridge.tsv import read_tsv
    for document in read_tsv(text):
        for sentence in document.sentences:
            for left, right in zip(sentence.tokens, sentence.tokens[1:]):
                assert right.start == left.end + 1
                assert right.end - right.start == len(right.surface)
