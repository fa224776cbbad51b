"""provenance.txt: flat key=value lines describing how a model was built.

This file is the only part of a model directory with a stable format;
everything else in the directory is an implementation detail of the
serialisation library.
"""
from __future__ import annotations

from pathlib import Path

FILENAME = "provenance.txt"


def write_provenance(model_dir: Path, entries: dict[str, str]) -> None:
    lines = ["%s=%s" % (k, v) for k, v in entries.items()]
    for key, value in entries.items():
        if "=" in key or "\n" in key or "\n" in value:
            raise ValueError("provenance entry %r is not representable" % (key,))
    (Path(model_dir) / FILENAME).write_text(
        "\n".join(lines) + "\n", encoding="utf-8")


def read_provenance(model_dir: Path) -> dict[str, str]:
    path = Path(model_dir) / FILENAME
    entries: dict[str, str] = {}
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError("bad provenance line: %r" % (raw,))
        entries[key.strip()] = value.strip()
    return entries
