"""Character-level cleaning rules shared by the classifier and embedding tokenizers.

A word is a run of Basic Latin or Latin-1 Supplement letters (after
lowercasing); everything else is a separator. ``×`` and ``÷`` are not letters.
"""

import re

_NON_LETTER = re.compile(r"[^a-zß-öø-ÿ]+")
_NON_WORD = re.compile(r"[^0-9a-zß-öø-ÿ]+")
_URL = re.compile(r"https?://\S*", re.IGNORECASE)


def letter_words(text: str) -> list[str]:
    """Lowercase, replace non-letters with spaces, split."""
    if not text:
        return []
    return _NON_LETTER.sub(" ", text.lower()).split()


def word_tokens(text: str) -> list[str]:
    """Like :func:`letter_words` but digits survive (``id2020``, ``covid19``)."""
    if not text:
        return []
    return _NON_WORD.sub(" ", text.lower()).split()


def strip_urls(text: str) -> str:
    return _URL.sub(" ", text)
