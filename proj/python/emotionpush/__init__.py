"""Emotion classification for chat messages and the message-service state machine."""

from ._core import (
    ChecksumError,
    EmbeddingTable,
    Error,
    InvalidArgument,
    MessageService,
    Model,
    ModelUnavailable,
    NotFound,
    ParseError,
    VersionError,
    auc,
    default_taxonomy,
    embed,
    evaluate,
    load_corpus,
    load_word2vec,
    mann_whitney,
    synth,
    tokenize,
    train,
)

__all__ = [
    "ChecksumError",
    "EmbeddingTable",
    "Error",
    "InvalidArgument",
    "MessageService",
    "Model",
    "ModelUnavailable",
    "NotFound",
    "ParseError",
    "VersionError",
    "auc",
    "default_taxonomy",
    "embed",
    "evaluate",
    "load_corpus",
    "load_word2vec",
    "mann_whitney",
    "synth",
    "tokenize",
    "train",
]
