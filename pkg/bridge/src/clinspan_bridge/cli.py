"""Command line entry points: init-base, finetune, serve."""
from __future__ import annotations

import sys
from pathlib import Path

import click

from . import __version__
from .basemodel import build_base
from .finetune import (BaseModelUnavailable, FinetuneConfig, LabelMismatch,
                       finetune)
from .provenance import read_provenance
from .tsv import labels_used, load_tsv


@click.group()
@click.version_option(version=__version__)
def main() -> None:
    """Neural tagging backend for the clinical span toolkit."""


@main.command("init-base")
@click.argument("out_dir", type=click.Path(path_type=Path))
@click.option("--words-from", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="TSV file whose token surfaces seed the vocabulary.")
@click.option("--mode", type=click.Choice(["chars", "words"]), default="chars",
              show_default=True,
              help="Vocabulary granularity of the WordPiece tokenizer.")
@click.option("--seed", default=13, show_default=True)
@click.option("--hidden-size", default=32, show_default=True)
def init_base(out_dir: Path, words_from: Path, mode: str, seed: int,
              hidden_size: int) -> None:
    """Create a small randomly-initialised base model at OUT_DIR."""
    documents = load_tsv(words_from)
    words = sorted({token.surface
                    for doc in documents
                    for sentence in doc.sentences
                    for token in sentence.tokens})
    if not words:
        raise click.ClickException("%s contains no tokens" % words_from)
    build_base(out_dir, mode=mode, words=words, seed=seed,
               hidden_size=hidden_size)
    click.echo("wrote base model to %s (%s vocabulary, %d surface forms)"
               % (out_dir, mode, len(words)))


@main.command()
@click.option("--train", "train_tsv", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--dev", "dev_tsv", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--base", "base_model", required=True,
              type=click.Path(path_type=Path),
              help="Base model directory (see init-base).")
@click.option("--out", "out_dir", required=True,
              type=click.Path(path_type=Path))
@click.option("--labels", "entities", default=None,
              help="Comma-separated entity names; default: derived from "
                   "the training split.")
@click.option("--epochs", default=10, show_default=True)
@click.option("--batch-size", default=8, show_default=True)
@click.option("--learning-rate", default=9e-6, show_default=True)
@click.option("--max-sequence-length", default=256, show_default=True)
@click.option("--seed", default=13, show_default=True)
def finetune_cmd(train_tsv: Path, dev_tsv: Path, base_model: Path,
                 out_dir: Path, entities: str | None, epochs: int,
                 batch_size: int, learning_rate: float,
                 max_sequence_length: int, seed: int) -> None:
    """Fine-tune a base model on TSV-encoded training data."""
    if entities:
        entity_labels = [e.strip() for e in entities.split(",") if e.strip()]
    else:
        found = labels_used(load_tsv(train_tsv)) - {"O"}
        entity_labels = sorted({label[2:] for label in found})
    if not entity_labels:
        raise click.ClickException(
            "no entity labels given and the training split carries none")
    try:
        config = FinetuneConfig(
            base_model=base_model, epochs=epochs, batch_size=batch_size,
            learning_rate=learning_rate,
            max_sequence_length=max_sequence_length, seed=seed)
        finetune(train_tsv, dev_tsv, out_dir, config, entity_labels)
    except (LabelMismatch, BaseModelUnavailable, ValueError) as exc:
        raise click.ClickException(str(exc))
    entries = read_provenance(out_dir)
    click.echo("wrote model to %s (best epoch %s/%s, dev F1 %s)"
               % (out_dir, entries.get("best_epoch", "?"),
                  entries.get("epochs", "?"), entries.get("dev_f1", "?")))


@main.command("serve")
@click.argument("model_dir",
                type=click.Path(exists=True, file_okay=False, path_type=Path))
def serve_cmd(model_dir: Path) -> None:
    """Answer tagging requests on stdin/stdout until bye."""
    from .serve import serve

    sys.exit(serve(model_dir))
