"""Deterministic tokenization and sentence segmentation."""
from __future__ import annotations

import re

HEAD_MARKER = "[HEAD]"
TAIL_MARKER = "[TAIL]"
MASK_MARKER = "[MASK]"
RESERVED_MARKERS = frozenset({HEAD_MARKER, TAIL_MARKER, MASK_MARKER})

_MARKER_RE = re.compile(r"\[(?:HEAD|TAIL|MASK)\]")
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_SENTENCE_RE = re.compile(r"(?<=[.!?])\s+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on word/punctuation boundaries.

    Punctuation characters become separate tokens. The reserved markers
    [HEAD], [TAIL] and [MASK] survive as single tokens (case-sensitive),
    so probe strings and template token streams round-trip.
    """
    out: list[str] = []
    pos = 0
    for m in _MARKER_RE.finditer(text):
        out.extend(_TOKEN_RE.findall(text[pos : m.start()].lower()))
        out.append(m.group(0))
        pos = m.end()
    out.extend(_TOKEN_RE.findall(text[pos:].lower()))
    return out


def split_sentences(text: str) -> list[str]:
    """Split on '.', '!' or '?' followed by whitespace; terminators stay attached."""
    return [part.strip() for part in _SENTENCE_RE.split(text) if part.strip()]


def join_tokens(tokens) -> str:
    """Inverse-ish of tokenize: single-space join (detokenization is lossy by design)."""
    return " ".join(tokens)
