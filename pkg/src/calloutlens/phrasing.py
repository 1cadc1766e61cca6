"""Bigram collocation detection and greedy merging into ``a_b`` tokens.

Scoring follows the discounted, corpus-size scaled form::

    score(a, b) = (count(ab) - delta) * N / (count(a) * count(b))
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import DataError

DELIMITER = "_"


@dataclass
class PhraseModel:
    phrases: dict = field(default_factory=dict)  # (a, b) -> score
    delta: float = 5.0
    threshold: float = 10.0
    token_total: int = 1

    def __contains__(self, pair) -> bool:
        return pair in self.phrases


@dataclass
class PhraseCounts:
    """Unigram and bigram counts; shards combine with ``+``."""

    unigrams: Counter = field(default_factory=Counter)
    bigrams: Counter = field(default_factory=Counter)

    def add(self, tokens: Sequence[str]) -> None:
        self.unigrams.update(tokens)
        self.bigrams.update(zip(tokens, tokens[1:]))

    def __add__(self, other: "PhraseCounts") -> "PhraseCounts":
        return PhraseCounts(self.unigrams + other.unigrams, self.bigrams + other.bigrams)

    @property
    def total(self) -> int:
        return sum(self.unigrams.values())


def phrase_score(n_ab: int, n_a: int, n_b: int, total: int, delta: float) -> float:
    return (n_ab - delta) * total / (n_a * n_b)


def count_phrases(corpus: Iterable[Sequence[str]]) -> PhraseCounts:
    counts = PhraseCounts()
    for seq in corpus:
        counts.add(list(seq))
    return counts


def learn_phrases(corpus: Iterable[Sequence[str]], delta: float = 5.0,
                  threshold: float = 10.0, min_count: int = 5) -> PhraseModel:
    return phrases_from_counts(count_phrases(corpus), delta, threshold, min_count)


def phrases_from_counts(counts: PhraseCounts, delta: float = 5.0,
                        threshold: float = 10.0, min_count: int = 5) -> PhraseModel:
    if not threshold > 0:
        raise DataError(f"phrase threshold must be positive, got {threshold}")
    total = counts.total
    if total == 0:
        raise DataError("cannot learn phrases from an empty corpus")
    kept = {}
    uni = counts.unigrams
    for (a, b), n_ab in counts.bigrams.items():
        if n_ab < min_count:
            continue
        score = phrase_score(n_ab, uni[a], uni[b], total, delta)
        if score >= threshold:
            kept[(a, b)] = score
    return PhraseModel(kept, delta, threshold, total)


def apply_phrases(tokens: Sequence[str], model: PhraseModel) -> list[str]:
    """Single left-to-right pass; a merged pair consumes both tokens."""
    out = []
    i, n = 0, len(tokens)
    phrases = model.phrases
    while i < n:
        if i + 1 < n and (tokens[i], tokens[i + 1]) in phrases:
            out.append(tokens[i] + DELIMITER + tokens[i + 1])
            i += 2
        else:
            out.append(tokens[i])
            i += 1
    return out


def save_phrases(model: PhraseModel, path) -> None:
    rows = sorted(model.phrases.items(), key=lambda kv: (-kv[1], kv[0]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for (a, b), score in rows:
            fh.write(f"{a}\t{b}\t{score!r}\n")


def load_phrases(path) -> PhraseModel:
    phrases = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            try:
                a, b, score = parts
                phrases[(a, b)] = float(score)
            except ValueError:
                raise DataError(f"{path}:{lineno}: expected tokenA<TAB>tokenB<TAB>score") from None
    threshold = min(phrases.values()) if phrases else 1.0
    return PhraseModel(phrases, threshold=threshold)
