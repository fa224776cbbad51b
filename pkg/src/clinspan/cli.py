"""Command-line entry points.

Commands mirror the library pipeline: check a corpus tree, segment a
file, encode to CoNLL-style TSV, train, predict, evaluate, render HTML
diffs, and run a whole experiment from a key=value config file.
"""
from __future__ import annotations

import shlex
import sys
from pathlib import Path

import click

from . import __version__
from .bio import TRACK_TAGSETS, encode_bio, format_conll
from .brat import TextDocument, parse_ann, validate_corpus
from .corpus import (ANNOTATED_SPLITS, SPLITS, TRACKS, LoadedCorpus,
                     MissingSplit, aggregate_corpora, infer_language,
                     load_corpus)
from .diff_html import render_diff
from .evaluation import EvalReport, evaluate_corpus, round_half_up
from .pipeline import RunConfig, run_experiment, run_predict, train_tagger
from .segmentation import MAX_SEQ_TOKENS, segment_text
from .taggers.persistence import MAGIC_PREFIX, ModelFormatError

_language_option = click.option("--language", type=click.Choice(["es", "en", "it"]),
                                default=None, help="Override language inference.")
_track_option = click.option("--track", type=click.Choice(list(TRACKS)),
                             default=None, help="Override track inference.")
_max_tokens_option = click.option("--max-tokens", type=int, default=MAX_SEQ_TOKENS,
                                  show_default=True,
                                  help="Window budget in word tokens.")


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Clinical NER toolkit: BRAT I/O, segmentation, tagging, evaluation."""


def _load(root: str, language: str | None, track: str | None,
          lenient: bool = False) -> LoadedCorpus:
    try:
        return load_corpus(root, language=language, track=track, lenient=lenient)
    except (ValueError, OSError) as exc:
        raise click.ClickException(str(exc))


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@_language_option
def check(root: str, language: str | None) -> None:
    """Validate every .txt/.ann pair under ROOT; exit 1 on violations."""
    root_path = Path(root)
    language = language or infer_language(root_path) or "es"
    pairs = []
    layout_problems = []
    found_any = False
    for split in SPLITS:
        split_dir = root_path / split
        if not split_dir.is_dir():
            continue
        for txt in sorted(split_dir.glob("*.txt")):
            found_any = True
            ann_path = txt.with_suffix(".ann")
            if ann_path.is_file():
                document = TextDocument(doc_id=txt.stem,
                                        text=txt.read_text(encoding="utf-8"),
                                        language=language)
                pairs.append((document, ann_path.read_text(encoding="utf-8")))
            elif split in ANNOTATED_SPLITS:
                layout_problems.append("%s/%s: missing companion .ann"
                                       % (split, txt.name))
    if not found_any:
        raise click.ClickException("no documents found under %s" % root)
    report = validate_corpus(pairs)
    for line in layout_problems:
        click.echo(line)
    for line in report.summary_lines():
        click.echo(line)
    if layout_problems or not report.is_clean:
        sys.exit(1)


@main.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@_language_option
@_max_tokens_option
def segment(file: str, language: str | None, max_tokens: int) -> None:
    """Print sentence and token spans for FILE, one record per line."""
    text = Path(file).read_text(encoding="utf-8")
    for sentence in segment_text(text, language=language or "es",
                                 max_tokens=max_tokens):
        click.echo("sentence\t%d\t%d" % (sentence.span_start, sentence.span_end))
        for token in sentence.tokens:
            click.echo("token\t%d\t%d\t%s" % (token.start, token.end, token.surface))


@main.command()
@click.argument("root", type=click.Path(exists=True, file_okay=False))
@click.option("--split", required=True, type=click.Choice(list(ANNOTATED_SPLITS)))
@_language_option
@_track_option
@_max_tokens_option
def encode(root: str, split: str, language: str | None, track: str | None,
           max_tokens: int) -> None:
    """Emit the SPLIT as token TSV: surface, start, end, BIO label."""
    corpus = _load(root, language, track)
    tagset = TRACK_TAGSETS[corpus.track]
    docs = corpus.split_docs(split)
    if not docs:
        raise click.ClickException("split %r has no documents" % split)
    lossy = 0
    for doc in docs:
        sentences = segment_text(doc.document.text, language=doc.document.language,
                                 max_tokens=max_tokens)
        encoding = encode_bio(doc, sentences, tagset)
        stats = encoding.stats
        lossy += (stats.expanded_mentions + stats.dropped_overlaps
                  + stats.split_mentions + stats.uncovered_mentions)
        click.echo("# doc = %s" % doc.document.doc_id)
        click.echo(format_conll(encoding.sentences), nl=False)
        click.echo()
    if lossy:
        click.echo("warning: %d mentions were expanded, split, or dropped"
                   % lossy, err=True)


@main.command()
@click.option("--tagger", "tagger_kind", required=True,
              type=click.Choice(["gazetteer", "perceptron"]))
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--epochs", type=int, default=5, show_default=True)
@click.option("--seed", type=int, default=13, show_default=True)
@_language_option
@_track_option
@_max_tokens_option
def train(tagger_kind: str, root: str, out_path: str, epochs: int, seed: int,
          language: str | None, track: str | None, max_tokens: int) -> None:
    """Train a tagger on the train split and save it to OUT."""
    corpus = _load(root, language, track)
    config = RunConfig(tagger=tagger_kind, max_tokens=max_tokens, seed=seed,
                       epochs=epochs, model_path=Path(out_path))
    try:
        train_tagger(config, corpus)
    except (ValueError, MissingSplit) as exc:
        raise click.ClickException(str(exc))
    click.echo("saved %s model to %s" % (tagger_kind, out_path))


def _model_kind(path: Path) -> str:
    try:
        head = path.read_text(encoding="utf-8").split("\n", 1)[0]
    except OSError as exc:
        raise click.ClickException(str(exc))
    if not head.startswith(MAGIC_PREFIX + " "):
        raise click.ClickException("%s is not a saved model" % path)
    return head.split(" ")[2]


@main.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--root", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--splits", default="test", show_default=True,
              help="Comma-separated splits to predict.")
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--bridge-cmd", default=None,
              help="Launch an external tagger instead of a saved model.")
@_language_option
@_track_option
@_max_tokens_option
def predict(model_path: str | None, root: str, splits: str, out_dir: str,
            bridge_cmd: str | None, language: str | None, track: str | None,
            max_tokens: int) -> None:
    """Predict mentions and write .ann files plus a run manifest to OUT."""
    if bool(model_path) == bool(bridge_cmd):
        raise click.ClickException("pass exactly one of --model or --bridge-cmd")
    split_list = [s.strip() for s in splits.split(",") if s.strip()]
    for s in split_list:
        if s not in SPLITS:
            raise click.ClickException("unknown split %r" % s)
    corpus = _load(root, language, track)
    if bridge_cmd:
        config = RunConfig(tagger="bridge", max_tokens=max_tokens,
                           bridge_command=tuple(shlex.split(bridge_cmd)),
                           out_dir=Path(out_dir))
    else:
        config = RunConfig(tagger=_model_kind(Path(model_path)),
                           max_tokens=max_tokens, model_path=Path(model_path),
                           out_dir=Path(out_dir))
    try:
        predictions = run_predict(config, corpus, split_list)
    except (ValueError, MissingSplit, ModelFormatError) as exc:
        raise click.ClickException(str(exc))
    for s in split_list:
        click.echo("%s: %d documents predicted" % (s, len(predictions[s])))


def _load_predictions(corpus: LoadedCorpus, pred_root: Path, split: str
                      ) -> dict[str, tuple]:
    pred = {}
    split_dir = pred_root / split
    known = set()
    for doc_id in corpus.manifest.doc_ids(split):
        path = split_dir / ("%s.ann" % doc_id)
        known.add(path)
        if path.is_file():
            parsed = parse_ann(corpus.documents[doc_id].document,
                               path.read_text(encoding="utf-8"))
            pred[doc_id] = parsed.mentions
        else:
            pred[doc_id] = ()
    if split_dir.is_dir():
        for stray in sorted(split_dir.rglob("*.ann")):
            if stray not in known:
                click.echo("warning: %s has no matching gold document" % stray,
                           err=True)
    return pred


def _report_row(report: EvalReport) -> str:
    p, r, f1 = report.display_metrics()
    return ("%s\t%s\t%s\t%.4f\t%.4f\t%.4f"
            % (report.split, report.language, report.track, p, r, f1))


_REPORT_HEADER = "split\tlanguage\ttrack\tprecision\trecall\tf1"


@main.command()
@click.option("--gold", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--pred", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--split", required=True, type=click.Choice(list(ANNOTATED_SPLITS)))
@click.option("--report", "report_path", required=True,
              type=click.Path(dir_okay=False))
@click.option("--per-doc", "per_doc_path", type=click.Path(dir_okay=False),
              default=None, help="Also write per-document rows.")
@_language_option
@_track_option
def evaluate(gold: str, pred: str, split: str, report_path: str,
             per_doc_path: str | None, language: str | None,
             track: str | None) -> None:
    """Score predictions in PRED against the gold SPLIT; write a TSV report."""
    corpus = _load(gold, language, track)
    if not corpus.manifest.doc_ids(split):
        raise click.ClickException("gold corpus has no %r split" % split)
    try:
        pred_map = _load_predictions(corpus, Path(pred), split)
    except ValueError as exc:
        raise click.ClickException("bad prediction file: %s" % exc)
    report = evaluate_corpus(corpus.mentions_by_doc(split), pred_map,
                             language=corpus.language, track=corpus.track,
                             split=split)
    lines = [_REPORT_HEADER, _report_row(report)]
    Path(report_path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    if per_doc_path:
        rows = ["doc_id\ttp\tfp\tfn\tprecision\trecall\tf1"]
        for row in report.rows:
            rows.append("%s\t%d\t%d\t%d\t%.4f\t%.4f\t%.4f"
                        % (row.doc_id, row.tp, row.fp, row.fn,
                           round_half_up(row.precision), round_half_up(row.recall),
                           round_half_up(row.f1)))
        Path(per_doc_path).write_text("\n".join(rows) + "\n", encoding="utf-8")
    click.echo(_report_row(report))


@main.command("render-diff")
@click.option("--gold", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--pred", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False))
@click.option("--split", "only_split", type=click.Choice(list(ANNOTATED_SPLITS)),
              default=None, help="Restrict to one split.")
@_language_option
@_track_option
def render_diff_cmd(gold: str, pred: str, out_dir: str, only_split: str | None,
                    language: str | None, track: str | None) -> None:
    """Write one color-coded HTML diff per document into OUT."""
    corpus = _load(gold, language, track)
    pred_root = Path(pred)
    out_root = Path(out_dir)
    splits = [only_split] if only_split else [
        s for s in ANNOTATED_SPLITS
        if corpus.manifest.doc_ids(s) and (pred_root / s).is_dir()]
    if not splits:
        raise click.ClickException("no overlapping annotated splits to render")
    total = 0
    for s in splits:
        pred_map = _load_predictions(corpus, pred_root, s)
        for doc_id in corpus.manifest.doc_ids(s):
            doc = corpus.documents[doc_id]
            page = render_diff(doc.document, list(doc.mentions),
                               list(pred_map.get(doc_id, ())))
            path = out_root / s / ("%s.html" % doc_id)
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(page, encoding="utf-8")
            total += 1
    click.echo("wrote %d diff pages under %s" % (total, out_dir))


def parse_config(text: str) -> dict[str, str]:
    """Flat key=value lines; blank lines and full-line # comments ignored."""
    out: dict[str, str] = {}
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError("line %d: expected key=value, got %r" % (line_no, raw))
        key, value = line.split("=", 1)
        key = key.strip()
        if not key:
            raise ValueError("line %d: empty key" % line_no)
        if key in out:
            raise ValueError("line %d: duplicate key %r" % (line_no, key))
        out[key] = value.strip()
    return out


_EXPERIMENT_KEYS = {"root", "tagger", "language", "track", "out", "model",
                    "epochs", "seed", "max_tokens", "bridge_cmd",
                    "gap_threshold", "report"}


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def experiment(config_path: str) -> None:
    """Train, predict dev+test, evaluate, and report the dev-test gap,
    driven by a key=value config file."""
    try:
        settings = parse_config(Path(config_path).read_text(encoding="utf-8"))
    except ValueError as exc:
        raise click.ClickException("%s: %s" % (config_path, exc))
    unknown = set(settings) - _EXPERIMENT_KEYS
    if unknown:
        raise click.ClickException("unknown config keys: %s" % ", ".join(sorted(unknown)))
    for key in ("root", "tagger"):
        if key not in settings:
            raise click.ClickException("config needs a %r key" % key)

    language = settings.get("language")
    track = settings.get("track")
    roots = [r.strip() for r in settings["root"].split(",") if r.strip()]
    corpora = [_load(r, language, track) for r in roots]
    corpus = corpora[0] if len(corpora) == 1 else aggregate_corpora(corpora)

    try:
        config = RunConfig(
            tagger=settings["tagger"],
            max_tokens=int(settings.get("max_tokens", MAX_SEQ_TOKENS)),
            seed=int(settings.get("seed", 13)),
            epochs=int(settings.get("epochs", 5)),
            bridge_command=(tuple(shlex.split(settings["bridge_cmd"]))
                            if "bridge_cmd" in settings else None),
            out_dir=Path(settings["out"]) if "out" in settings else None,
            model_path=Path(settings["model"]) if "model" in settings else None,
            gap_threshold=float(settings.get("gap_threshold", 10.0)))
        result = run_experiment(config, corpus)
    except (ValueError, MissingSplit) as exc:
        raise click.ClickException(str(exc))

    for line in result.summary_lines():
        click.echo(line)
    if "report" in settings:
        rows = [_REPORT_HEADER, _report_row(result.dev), _report_row(result.test)]
        for lang in sorted(result.by_language):
            dev_r, test_r, _ = result.by_language[lang]
            rows.append(_report_row(dev_r))
            rows.append(_report_row(test_r))
        Path(settings["report"]).write_text("\n".join(rows) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
