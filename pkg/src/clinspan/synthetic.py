"""Deterministic synthetic clinical-note generator for tests and demos.

Documents are built from per-language sentence templates with slots for a
closed inventory of ten entity phrases per track.  Offsets are tracked
while the text is assembled, so the gold annotations are correct by
construction.  Everything is driven by one seeded RNG: the same
(seed, counts, track, language) always yields byte-identical corpora.
"""
from __future__ import annotations

import random
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .brat import AnnotatedDocument, EntityMention, TextDocument, serialize_ann

MEDICATION_PHRASES = (
    "aspirina", "ibuprofeno", "paracetamol", "omeprazol", "atorvastatina",
    "enalapril", "metformina", "amoxicilina", "bisoprolol",
    "ácido acetilsalicílico",
)

DISEASE_PHRASES = (
    "hipertensión", "diabetes", "asma", "neumonía", "anemia",
    "migraña", "epilepsia", "artritis", "insuficiencia cardíaca",
    "fibrilación auricular",
)

TRACK_PHRASES = {"medications": MEDICATION_PHRASES, "diseases": DISEASE_PHRASES}
TRACK_LABELS = {"medications": "FARMACO", "diseases": "ENFERMEDAD"}

# {} marks the entity slot; templates without a slot yield entity-free
# sentences so the O label stays dominant, as in real notes
_TEMPLATES = {
    "es": (
        "El paciente recibió {} durante el ingreso.",
        "Se pauta {} cada ocho horas.",
        "Tratamiento actual con {} a dosis plenas.",
        "Tras valorar el cuadro se suspende {} por intolerancia.",
        "En la anamnesis destaca {} de larga evolución.",
        "Se recomienda continuar con {} al alta.",
        "El paciente permanece estable y afebril.",
        "Acude a urgencias por malestar general.",
        "La exploración física no muestra hallazgos relevantes.",
    ),
    "en": (
        "The patient was started on {} at admission.",
        "Treatment with {} was continued for two weeks.",
        "History includes {} under regular follow-up.",
        "We discontinued {} after reassessment.",
        "The patient remains stable overnight.",
        "Physical examination was unremarkable.",
    ),
    "it": (
        "Il paziente ha ricevuto {} durante il ricovero.",
        "Si prescrive {} ogni otto ore.",
        "In anamnesi si segnala {} di lunga data.",
        "Si sospende {} per intolleranza.",
        "Il paziente resta stabile e apiretico.",
        "L'esame obiettivo non mostra reperti di rilievo.",
    ),
}


def _make_document(rng: random.Random, doc_id: str, track: str,
                   language: str) -> AnnotatedDocument:
    phrases = TRACK_PHRASES[track]
    label = TRACK_LABELS[track]
    templates = _TEMPLATES[language]
    parts: list[str] = []
    mentions: list[EntityMention] = []
    offset = 0
    for i in range(rng.randint(3, 6)):
        if i:
            sep = "\n\n" if rng.random() < 0.2 else " "
            parts.append(sep)
            offset += len(sep)
        template = rng.choice(templates)
        if "{}" in template:
            phrase = rng.choice(phrases)
            head, tail = template.split("{}")
            start = offset + len(head)
            mentions.append(EntityMention(
                start=start, end=start + len(phrase), label=label,
                surface=phrase, mention_id="T%d" % (len(mentions) + 1)))
            sentence = head + phrase + tail
        else:
            sentence = template
        parts.append(sentence)
        offset += len(sentence)
    text = "".join(parts)
    doc = TextDocument(doc_id=doc_id, text=text, language=language)
    return AnnotatedDocument(document=doc, mentions=tuple(mentions))


def generate_documents(n: int, seed: int, track: str = "medications",
                       language: str = "es",
                       prefix: str = "doc") -> list[AnnotatedDocument]:
    rng = random.Random(seed)
    return [_make_document(rng, "%s-%04d" % (prefix, i + 1), track, language)
            for i in range(n)]


def generate_corpus(seed: int = 13, track: str = "medications",
                    language: str = "es", train: int = 200, dev: int = 0,
                    test: int = 50,
                    background: int = 0) -> dict[str, list[AnnotatedDocument]]:
    """Split corpus drawn sequentially from one RNG stream, so any prefix
    of the document sequence is stable under changes to later counts."""
    rng = random.Random(seed)
    out: dict[str, list[AnnotatedDocument]] = {}
    counter = 0
    for split, n in (("train", train), ("dev", dev),
                     ("test", test), ("background", background)):
        docs = []
        for _ in range(n):
            counter += 1
            docs.append(_make_document(rng, "%s-%04d" % (split, counter),
                                       track, language))
        if docs:
            out[split] = docs
    return out


def write_corpus(splits: Mapping[str, Sequence[AnnotatedDocument]],
                 root: str | Path, annotate_background: bool = False) -> Path:
    """Materialize `<root>/<split>/<doc_id>.txt|.ann` on disk."""
    root = Path(root)
    for split, docs in splits.items():
        split_dir = root / split
        split_dir.mkdir(parents=True, exist_ok=True)
        for doc in docs:
            stem = split_dir / doc.document.doc_id
            stem.with_suffix(".txt").write_text(doc.document.text, encoding="utf-8")
            if split != "background" or annotate_background:
                stem.with_suffix(".ann").write_text(serialize_ann(doc), encoding="utf-8")
    return root
