"""Interchangeable sentence-labeling engines.

Every tagger is an sklearn-style estimator: construct with a tag set,
``fit`` on training material where that makes sense, and ``predict`` a
list of sentences into one BIO label sequence per sentence.
"""
from .base import EmptyCorpus, SentenceTagger, ensure_labeled, ensure_sentences
from .bridge import (BatchTimeout, BridgeClient, BridgeConfig, BridgeError,
                     BridgeLaunchFailure, BridgeTagger, HandshakeTimeout,
                     ProtocolViolation, external_tag, validate_transcript)
from .gazetteer import GazetteerTagger, tag_gazetteer, train_gazetteer
from .perceptron import (PerceptronModel, PerceptronTagger, extract_features,
                         train_perceptron, viterbi_decode)
from .persistence import ModelFormatError, load_model, save_model, serialize_model

__all__ = [
    "BatchTimeout", "BridgeClient", "BridgeConfig", "BridgeError",
    "BridgeLaunchFailure", "BridgeTagger", "EmptyCorpus", "GazetteerTagger",
    "HandshakeTimeout", "ModelFormatError", "PerceptronModel",
    "PerceptronTagger", "ProtocolViolation", "SentenceTagger",
    "ensure_labeled", "ensure_sentences", "external_tag", "extract_features",
    "load_model", "save_model", "serialize_model", "tag_gazetteer",
    "train_gazetteer", "train_perceptron", "validate_transcript",
    "viterbi_decode",
]
