"""Neural reference tagger for the clinspan bridge protocol.

Consumes the host toolkit only through its documented externals: the
token TSV produced by `clinspan encode`, the JSON-lines tagging protocol
(version 1), and the `provenance.txt` key=value file inside a model
directory.
"""
import os

# stdout belongs to the tagging protocol when serving; make sure nothing
# in the ML stack draws progress bars before we get a say.
os.environ.setdefault("HF_HUB_DISABLE_PROGRESS_BARS", "1")
os.environ.setdefault("TOKENIZERS_PARALLELISM", "false")

__version__ = "0.1.0"
