"""Tokenization used everywhere a term meets text.

One fixed rule for the whole workbench: tokens are maximal runs of word
characters or single punctuation characters; whitespace separates.  Hyphens
are punctuation, so "medium-sized" lexes as three tokens.  Word counts and
the sub-term relation only consider word tokens; occurrence matching and
KWIC keep punctuation tokens so contexts read naturally.
"""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_WORD_RE = re.compile(r"\w+$")


def lex(text: str) -> list[tuple[str, int, int]]:
    """All tokens (words and punctuation) with character offsets."""
    return [(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def tokens(text: str) -> list[str]:
    """Lowercased full token stream, punctuation included."""
    return [t.lower() for t, _, _ in lex(text)]


def word_tokens(text: str) -> list[str]:
    """Lowercased word tokens only; the basis of word_count."""
    return [t.lower() for t, _, _ in lex(text) if _WORD_RE.match(t)]


def is_subsequence(needle: list[str], haystack: list[str]) -> bool:
    """Contiguous occurrence of ``needle`` inside ``haystack``."""
    n = len(needle)
    if n == 0 or n > len(haystack):
        return False
    return any(haystack[i : i + n] == needle for i in range(len(haystack) - n + 1))


def is_subterm(lemma_a: str, lemma_b: str) -> bool:
    """True iff a's token sequence occurs contiguously in b's and a != b."""
    ta, tb = tokens(lemma_a), tokens(lemma_b)
    return ta != tb and is_subsequence(ta, tb)


def normalize_ws(text: str) -> str:
    return " ".join(text.split())
