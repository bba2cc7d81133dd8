"""Sentence segmentation, tokenization and script detection."""

from __future__ import annotations

import re
import unicodedata

TERMINATORS = ".!?。！？"

# A run of terminators followed by whitespace or end of text closes a sentence.
_BREAK = re.compile(r"[.!?。！？]+(?=\s|$)")


def sentence_spans(text: str) -> list[tuple[int, int]]:
    """Return ``(start, end)`` offsets of each sentence, whitespace excluded.

    The gaps between consecutive spans (and before the first / after the last)
    contain only whitespace, so the spans partition the non-space text.
    """
    spans = []
    start = 0
    for m in _BREAK.finditer(text):
        spans.append((start, m.end()))
        start = m.end()
    spans.append((start, len(text)))

    out = []
    for a, b in spans:
        while a < b and text[a].isspace():
            a += 1
        while b > a and text[b - 1].isspace():
            b -= 1
        if a < b:
            out.append((a, b))
    return out


def segment_sentences(text: str) -> list[str]:
    """Split ``text`` after terminator characters that precede whitespace or the end.

    >>> segment_sentences("A. B!")
    ['A.', 'B!']
    """
    return [text[a:b] for a, b in sentence_spans(text)]


def split_paragraphs(text: str) -> list[str]:
    """Paragraphs are separated by one or more blank lines."""
    parts = re.split(r"\n[ \t]*\n", text)
    return [p.strip() for p in parts if p.strip()]


def tokenize(text: str, mode: str = "word") -> tuple[str, ...]:
    """Tokenize by whitespace (``word``) or into non-space characters (``char``)."""
    if mode == "word":
        return tuple(text.split())
    if mode == "char":
        return tuple(ch for ch in text if not ch.isspace())
    raise ValueError(f"unknown tokenization mode {mode!r}")


def detokenize(tokens, mode: str = "word") -> str:
    return ("" if mode == "char" else " ").join(tokens)


def char_script(ch: str) -> str | None:
    """Coarse script class of an alphabetic character, ``None`` for non-letters."""
    if not ch.isalpha():
        return None
    cp = ord(ch)
    if (
        0x3040 <= cp <= 0x30FF  # kana
        or 0x3400 <= cp <= 0x4DBF
        or 0x4E00 <= cp <= 0x9FFF
        or 0xF900 <= cp <= 0xFAFF
        or 0x20000 <= cp <= 0x2FA1F
        or 0xAC00 <= cp <= 0xD7AF  # hangul
    ):
        return "cjk"
    name = unicodedata.name(ch, "")
    if name.startswith("LATIN"):
        return "latin"
    return "other"


def script_fraction(text: str, script: str) -> float:
    """Fraction of letters in ``text`` that belong to ``script``.

    Text without letters scores 0.0 so that it never passes a language check.
    """
    classes = [c for c in map(char_script, text) if c is not None]
    if not classes:
        return 0.0
    return sum(c == script for c in classes) / len(classes)
