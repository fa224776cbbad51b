"""Build a small randomly-initialised BERT base model on local disk.

Fine-tuning needs a starting checkpoint; in an offline environment that
checkpoint has to be manufactured rather than downloaded.  Two vocabulary
modes are supported:

- "chars": the WordPiece vocabulary holds single characters only, so every
  word fragments into one subword per character.  Useful for exercising
  subword alignment and truncation paths hard.
- "words": the vocabulary holds the supplied words verbatim (plus their
  characters as fallback), so sequences stay short and a toy model can
  actually learn from a handful of sentences.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable

SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]")


def _wordpiece_vocab(mode: str, words: Iterable[str]) -> dict[str, int]:
    if mode not in ("chars", "words"):
        raise ValueError("vocab mode must be 'chars' or 'words', got %r" % (mode,))
    entries: list[str] = list(SPECIALS)
    seen = set(entries)

    def add(piece: str) -> None:
        if piece not in seen:
            seen.add(piece)
            entries.append(piece)

    chars = sorted({c for w in words for c in w})
    for c in chars:
        add(c)
        add("##" + c)
    if mode == "words":
        for w in sorted(set(words)):
            add(w)
    return {piece: i for i, piece in enumerate(entries)}


def _build_tokenizer(vocab: dict[str, int]):
    # BertTokenizerFast(vocab_file=...) does not rebuild the backend from a
    # plain vocab file any more; assembling the pipeline explicitly does.
    from tokenizers import Tokenizer, models, normalizers, pre_tokenizers, processors
    from transformers import PreTrainedTokenizerFast

    backend = Tokenizer(models.WordPiece(
        vocab=vocab, unk_token="[UNK]", continuing_subword_prefix="##"))
    backend.normalizer = normalizers.NFC()
    backend.pre_tokenizer = pre_tokenizers.WhitespaceSplit()
    backend.post_processor = processors.TemplateProcessing(
        single="[CLS] $A [SEP]",
        pair="[CLS] $A [SEP] $B [SEP]",
        special_tokens=[("[CLS]", vocab["[CLS]"]), ("[SEP]", vocab["[SEP]"])])
    return PreTrainedTokenizerFast(
        tokenizer_object=backend,
        unk_token="[UNK]", pad_token="[PAD]", cls_token="[CLS]",
        sep_token="[SEP]", mask_token="[MASK]")


def build_base(out_dir: Path, mode: str = "chars",
               words: Iterable[str] = (), seed: int = 13,
               hidden_size: int = 32, num_layers: int = 2,
               num_heads: int = 2, intermediate_size: int = 64,
               max_positions: int = 384) -> Path:
    """Write a loadable base model directory and return its path."""
    import torch
    from transformers import BertConfig, BertModel

    word_list = [w for w in words if w]
    vocab = _wordpiece_vocab(mode, word_list)
    tokenizer = _build_tokenizer(vocab)

    torch.manual_seed(seed)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=hidden_size,
        num_hidden_layers=num_layers,
        num_attention_heads=num_heads,
        intermediate_size=intermediate_size,
        max_position_embeddings=max_positions,
        pad_token_id=vocab["[PAD]"])
    model = BertModel(config)

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model.save_pretrained(out_dir)
    tokenizer.save_pretrained(out_dir)
    meta = {"vocab_mode": mode, "vocab_size": len(vocab), "seed": seed}
    (out_dir / "base-meta.json").write_text(
        json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return out_dir
