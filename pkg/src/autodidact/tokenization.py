"""Shared tokenizer used by chunking, metrics, and grading.

Rule: unicode NFC normalization, lowercase, punctuation split into
separate tokens, then whitespace split. Fixed and simple so every
metric value is hand-checkable.
"""

import re
import unicodedata

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def normalize_text(text: str) -> str:
    """NFC-normalize and lowercase; collapse whitespace runs to single spaces."""
    text = unicodedata.normalize("NFC", text).lower()
    return " ".join(text.split())


def tokenize(text: str) -> list[str]:
    """Split text into lowercase word and punctuation tokens."""
    return _TOKEN_RE.findall(normalize_text(text))
