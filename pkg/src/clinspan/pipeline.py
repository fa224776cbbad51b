"""Reproducible train → predict → evaluate runs over corpus directories.

Given the same corpus and RunConfig (seed included), every artifact this
module writes is byte-identical across invocations: predicted ``.ann``
files, run manifests, and reports.  Corpus inputs are never written to.
"""
from __future__ import annotations

import contextlib
import dataclasses
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Sequence

from .bio import (EncodeStats, LabeledSentence, TagSet, TRACK_TAGSETS,
                  decode_bio, encode_bio, repair_labels)
from .brat import AnnotatedDocument, TextDocument, parse_ann, serialize_ann
from .corpus import ANNOTATED_SPLITS, LoadedCorpus, MissingSplit
from .evaluation import EvalReport, GapReport, compare_splits, evaluate_corpus
from .segmentation import MAX_SEQ_TOKENS, Sentence, segment_text
from .taggers import (BridgeClient, BridgeConfig, GazetteerTagger,
                      PerceptronTagger, save_model, serialize_model)
from .taggers.persistence import load_model

TAGGER_KINDS = ("gazetteer", "perceptron", "bridge")

TagFn = Callable[[Sequence[Sentence]], list[list[str]]]


@dataclass(frozen=True)
class RunConfig:
    tagger: str
    tagset: TagSet | None = None
    max_tokens: int = MAX_SEQ_TOKENS
    seed: int = 13
    epochs: int = 5
    bridge_command: tuple[str, ...] | None = None
    out_dir: Path | None = None
    model_path: Path | None = None
    gap_threshold: float = 10.0

    def __post_init__(self) -> None:
        if self.tagger not in TAGGER_KINDS:
            raise ValueError("tagger must be one of %s" % (TAGGER_KINDS,))
        if self.tagger == "bridge" and not self.bridge_command:
            raise ValueError("bridge tagger needs a bridge command")
        if self.tagger == "perceptron" and self.epochs < 1:
            raise ValueError("perceptron training needs epochs >= 1")
        if self.max_tokens < 2:
            raise ValueError("max_tokens must be at least 2")

    def tagset_for(self, corpus: LoadedCorpus) -> TagSet:
        return self.tagset or TRACK_TAGSETS[corpus.track]


def document_sentences(document: TextDocument,
                       max_tokens: int = MAX_SEQ_TOKENS) -> list[Sentence]:
    return segment_text(document.text, language=document.language,
                        max_tokens=max_tokens)


def labeled_sentences(doc: AnnotatedDocument, tagset: TagSet,
                      max_tokens: int = MAX_SEQ_TOKENS
                      ) -> tuple[list[LabeledSentence], EncodeStats]:
    sentences = document_sentences(doc.document, max_tokens)
    encoding = encode_bio(doc, sentences, tagset)
    return list(encoding.sentences), encoding.stats


def training_sentences(docs: Sequence[AnnotatedDocument], tagset: TagSet,
                       max_tokens: int = MAX_SEQ_TOKENS) -> list[LabeledSentence]:
    out: list[LabeledSentence] = []
    for doc in docs:
        sents, _ = labeled_sentences(doc, tagset, max_tokens)
        out.extend(sents)
    return out


def train_tagger(config: RunConfig, corpus: LoadedCorpus):
    """Fit the configured trainable tagger on the train split and
    optionally persist it."""
    tagset = config.tagset_for(corpus)
    train_docs = corpus.require_split("train")
    if config.tagger == "gazetteer":
        tagger = GazetteerTagger(tagset=tagset).fit(train_docs)
    elif config.tagger == "perceptron":
        labeled = training_sentences(train_docs, tagset, config.max_tokens)
        tagger = PerceptronTagger(tagset=tagset, epochs=config.epochs,
                                  seed=config.seed)
        tagger.fit(labeled)
    else:
        raise ValueError("the bridge tagger is trained externally")
    if config.model_path is not None:
        save_model(tagger, config.model_path)
    return tagger


def _with_context(exc: Exception, doc_id: str) -> Exception:
    if hasattr(exc, "add_note"):
        exc.add_note("while predicting document %r" % doc_id)
    return exc


def predict_document(tag_fn: TagFn, document: TextDocument, tagset: TagSet,
                     max_tokens: int = MAX_SEQ_TOKENS) -> AnnotatedDocument:
    sentences = document_sentences(document, max_tokens)
    if not sentences:
        return AnnotatedDocument(document=document, mentions=())
    raw = tag_fn(sentences)
    if len(raw) != len(sentences):
        raise RuntimeError("tagger returned %d sequences for %d sentences"
                           % (len(raw), len(sentences)))
    labeled = []
    for sentence, labels in zip(sentences, raw):
        if len(labels) != len(sentence.tokens):
            raise RuntimeError("tagger returned %d labels for %d tokens"
                               % (len(labels), len(sentence.tokens)))
        labeled.append(LabeledSentence(sentence=sentence,
                                       labels=tuple(repair_labels(labels))))
    mentions = decode_bio(labeled, document.text)
    return AnnotatedDocument(document=document, mentions=tuple(mentions))


@contextlib.contextmanager
def _tagging_function(config: RunConfig, tagset: TagSet, tagger=None):
    """Yields a sentences->labels function; one bridge child serves the
    whole run and is shut down on exit."""
    if config.tagger == "bridge":
        bridge_config = BridgeConfig(command=tuple(config.bridge_command))
        with BridgeClient(bridge_config, tagset) as client:
            def tag(sentences: Sequence[Sentence]) -> list[list[str]]:
                out: list[list[str]] = []
                step = bridge_config.max_batch
                for i in range(0, len(sentences), step):
                    out.extend(client.tag_batch(sentences[i:i + step]))
                return out
            yield tag
        return
    if tagger is None:
        if config.model_path is None:
            raise ValueError("non-bridge prediction needs a model")
        tagger = load_model(config.model_path)
    yield tagger.predict


def predict_corpus(config: RunConfig, corpus: LoadedCorpus,
                   splits: Sequence[str], tagger=None
                   ) -> dict[str, dict[str, AnnotatedDocument]]:
    """In-memory prediction over the requested splits."""
    tagset = config.tagset_for(corpus)
    for split in splits:
        corpus.require_split(split)
    out: dict[str, dict[str, AnnotatedDocument]] = {}
    with _tagging_function(config, tagset, tagger) as tag_fn:
        for split in splits:
            predicted: dict[str, AnnotatedDocument] = {}
            for doc in corpus.split_docs(split):
                try:
                    predicted[doc.document.doc_id] = predict_document(
                        tag_fn, doc.document, tagset, config.max_tokens)
                except Exception as exc:
                    raise _with_context(exc, doc.document.doc_id)
            out[split] = predicted
    return out


def _model_checksum(config: RunConfig, tagger) -> str | None:
    if config.tagger == "bridge":
        return None
    if tagger is not None:
        data = serialize_model(tagger).encode("utf-8")
    elif config.model_path is not None:
        data = Path(config.model_path).read_bytes()
    else:
        return None
    return hashlib.sha256(data).hexdigest()


def _run_manifest(config: RunConfig, corpus: LoadedCorpus,
                  predictions: Mapping[str, Mapping[str, AnnotatedDocument]],
                  tagger) -> dict:
    return {
        "tagger": config.tagger,
        "track": corpus.track,
        "language": corpus.language,
        "max_tokens": config.max_tokens,
        "seed": config.seed,
        "epochs": config.epochs if config.tagger == "perceptron" else None,
        "bridge_command": list(config.bridge_command) if config.bridge_command else None,
        "model_checksum": _model_checksum(config, tagger),
        "documents": {split: len(docs) for split, docs in predictions.items()},
    }


def write_predictions(config: RunConfig, corpus: LoadedCorpus,
                      predictions: Mapping[str, Mapping[str, AnnotatedDocument]],
                      tagger=None) -> Path:
    """Serialize predictions under out_dir, mirroring the corpus layout,
    plus a machine-readable run manifest.  Every written file is re-parsed
    against its source text before the run is considered done."""
    if config.out_dir is None:
        raise ValueError("write_predictions needs out_dir")
    out_root = Path(config.out_dir)
    corpus_root = corpus.manifest.root
    if corpus_root is not None and out_root.resolve() == Path(corpus_root).resolve():
        raise ValueError("refusing to write predictions into the corpus root")
    for split, docs in predictions.items():
        split_dir = out_root / split
        for doc_id, predicted in sorted(docs.items()):
            serialized = serialize_ann(predicted)
            # namespaced ids like "es/d1" become subdirectories
            path = split_dir / ("%s.ann" % doc_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(serialized, encoding="utf-8")
            parse_ann(predicted.document, serialized)  # self-consistency sweep
    manifest = _run_manifest(config, corpus, predictions, tagger)
    manifest_path = out_root / "run-manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                             encoding="utf-8")
    return manifest_path


def run_predict(config: RunConfig, corpus: LoadedCorpus,
                splits: Sequence[str], tagger=None
                ) -> dict[str, dict[str, AnnotatedDocument]]:
    predictions = predict_corpus(config, corpus, splits, tagger)
    if config.out_dir is not None:
        write_predictions(config, corpus, predictions, tagger)
    return predictions


@dataclass(frozen=True)
class ExperimentResult:
    dev: EvalReport
    test: EvalReport
    gap: GapReport
    by_language: dict[str, tuple[EvalReport, EvalReport, GapReport]]

    def summary_lines(self) -> list[str]:
        def row(r: EvalReport) -> str:
            p, rc, f1 = r.display_metrics()
            return ("%s\t%s\t%s\t%.4f\t%.4f\t%.4f"
                    % (r.split, r.language, r.track, p, rc, f1))
        lines = [row(self.dev), row(self.test), self.gap.summary_line()]
        for language in sorted(self.by_language):
            dev_r, test_r, gap_r = self.by_language[language]
            lines.extend([row(dev_r), row(test_r), gap_r.summary_line()])
        return lines


def _split_reports(corpus: LoadedCorpus,
                   predictions: Mapping[str, Mapping[str, AnnotatedDocument]],
                   split: str) -> EvalReport:
    gold = corpus.mentions_by_doc(split)
    pred = {doc_id: doc.mentions for doc_id, doc in predictions[split].items()}
    return evaluate_corpus(gold, pred, language=corpus.language,
                           track=corpus.track, split=split)


def _language_subreport(corpus: LoadedCorpus,
                        predictions: Mapping[str, Mapping[str, AnnotatedDocument]],
                        split: str, language: str) -> EvalReport:
    ids = [i for i in corpus.manifest.doc_ids(split)
           if corpus.documents[i].document.language == language]
    gold = {i: corpus.documents[i].mentions for i in ids}
    pred = {i: predictions[split][i].mentions for i in ids if i in predictions[split]}
    return evaluate_corpus(gold, pred, language=language,
                           track=corpus.track, split=split)


def run_experiment(config: RunConfig, corpus: LoadedCorpus) -> ExperimentResult:
    """Train (when the tagger trains), predict dev and test, score both,
    and report the dev-test gap; aggregated corpora also get one report
    pair per language."""
    for split in ("dev", "test"):
        if not corpus.manifest.doc_ids(split):
            raise MissingSplit("experiment needs an annotated %r split" % split)
    tagger = None
    if config.tagger in ("gazetteer", "perceptron"):
        tagger = train_tagger(config, corpus)
    predictions = predict_corpus(config, corpus, ("dev", "test"), tagger)
    if config.out_dir is not None:
        write_predictions(config, corpus, predictions, tagger)

    dev_report = _split_reports(corpus, predictions, "dev")
    test_report = _split_reports(corpus, predictions, "test")
    gap = compare_splits(dev_report, test_report, threshold=config.gap_threshold)

    languages = sorted({corpus.documents[i].document.language
                        for split in ("dev", "test")
                        for i in corpus.manifest.doc_ids(split)})
    by_language: dict[str, tuple[EvalReport, EvalReport, GapReport]] = {}
    if len(languages) > 1:
        for language in languages:
            dev_l = _language_subreport(corpus, predictions, "dev", language)
            test_l = _language_subreport(corpus, predictions, "test", language)
            by_language[language] = (dev_l, test_l,
                                     compare_splits(dev_l, test_l,
                                                    threshold=config.gap_threshold))
    return ExperimentResult(dev=dev_report, test=test_report, gap=gap,
                            by_language=by_language)
