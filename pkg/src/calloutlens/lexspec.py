"""Lexical specificity: how surprising a term's subcorpus frequency is.

For a reference corpus of ``T`` tokens in which a term occurs ``F`` times,
and a subcorpus of ``t`` tokens drawn from it in which the term occurs ``f``
times, the specificity is ``-log10 P(X >= f)`` with
``X ~ Hypergeometric(T, F, t)``. Tails are summed in log space so scores in
the tens of thousands stay finite.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import DataError

_LN10 = math.log(10.0)
# stop summing once a term is this far (in natural log) below the running max
_LOG_EPS = math.log(1e-18)


@dataclass(frozen=True)
class FreqTable:
    counts: dict
    total: int

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "FreqTable":
        counts = Counter(tokens)
        return cls(dict(counts), sum(counts.values()))

    @classmethod
    def from_sequences(cls, seqs: Iterable[Iterable[str]]) -> "FreqTable":
        counts = Counter()
        for seq in seqs:
            counts.update(seq)
        return cls(dict(counts), sum(counts.values()))

    def __post_init__(self):
        if any(n <= 0 for n in self.counts.values()):
            object.__setattr__(self, "counts", {k: n for k, n in self.counts.items() if n > 0})
        if sum(self.counts.values()) != self.total:
            raise DataError("frequency table total does not match its counts")

    def __getitem__(self, token) -> int:
        return self.counts.get(token, 0)


@dataclass(frozen=True)
class SpecificityQuery:
    T: int
    F: int
    t: int
    f: int

    def __post_init__(self):
        T, F, t, f = self.T, self.F, self.t, self.f
        if min(T, F, t, f) < 0 or F > T or t > T or f > min(F, t):
            raise DataError(f"invalid specificity query T={T} F={F} t={t} f={f}")


def _log_comb(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _log_pmf(k, T, F, t, log_norm):
    return _log_comb(F, k) + _log_comb(T - F, t - k) - log_norm


def _log_sum(T, F, t, ks, log_norm) -> float:
    """log of the pmf summed over ``ks``, stopping once terms become negligible.

    ``ks`` must walk away from the mode so terms eventually shrink.
    """
    acc = -math.inf
    for k in ks:
        lp = _log_pmf(k, T, F, t, log_norm)
        if lp > acc:
            acc = lp + math.log1p(math.exp(acc - lp)) if acc > -math.inf else lp
        else:
            acc = acc + math.log1p(math.exp(lp - acc))
            if lp - acc < _LOG_EPS:
                break
    return acc


def log_hypergeom_tail(q: SpecificityQuery) -> float:
    """Natural log of P(X >= f)."""
    T, F, t, f = q.T, q.F, q.t, q.f
    kmin = max(0, t - (T - F))
    kmax = min(F, t)
    if f <= kmin:
        return 0.0
    log_norm = _log_comb(T, t)
    mode = math.floor((t + 1) * (F + 1) / (T + 2))
    if f > mode:
        # upper tail is small; sum upward from f
        return min(0.0, _log_sum(T, F, t, range(f, kmax + 1), log_norm))
    # upper tail holds the bulk; take the complement of the lower tail
    lower = _log_sum(T, F, t, range(f - 1, kmin - 1, -1), log_norm)
    return math.log1p(-min(math.exp(lower), 1.0)) if lower < 0 else -math.inf


def hypergeom_tail(q: SpecificityQuery) -> float:
    """P(X >= f) for X ~ Hypergeometric(population T, successes F, draws t)."""
    return math.exp(log_hypergeom_tail(q))


def specificity_from_counts(T: int, F: int, t: int, f: int) -> float:
    if f == 0:
        return 0.0
    lt = log_hypergeom_tail(SpecificityQuery(T, F, t, f))
    return max(0.0, -lt / _LN10)


def specificity(ref: FreqTable, sub: FreqTable, term: str) -> float:
    """``-log10 P(X >= f)``; zero when the term is absent from the subcorpus."""
    f, F = sub[term], ref[term]
    if f and not F:
        raise DataError(f"term {term!r} occurs in the subcorpus but not in the reference corpus")
    if sub.total > ref.total or f > F:
        raise DataError(f"subcorpus is not contained in the reference corpus (term {term!r})")
    return specificity_from_counts(ref.total, F, sub.total, f)


@dataclass(frozen=True)
class SpecificityRow:
    term: str
    f: int
    F: int
    score: float


def top_terms(ref: FreqTable, sub: FreqTable, k: int,
              wordlist: Optional[set] = None) -> list[SpecificityRow]:
    """The ``k`` highest-specificity terms of ``sub``; ties broken by term."""
    if k < 1:
        raise DataError(f"k must be positive, got {k}")
    rows = []
    for term in sub.counts:
        if wordlist is not None and term not in wordlist:
            continue
        rows.append(SpecificityRow(term, sub[term], ref[term], specificity(ref, sub, term)))
    rows.sort(key=lambda r: (-r.score, r.term))
    return rows[:k]


def format_table(rows: list[SpecificityRow]) -> str:
    lines = ["rank\tterm\tf\tF\tscore"]
    for i, r in enumerate(rows, 1):
        lines.append(f"{i}\t{r.term}\t{r.f}\t{r.F}\t{r.score:.6f}")
    return "\n".join(lines) + "\n"


def read_wordlist(path) -> set:
    with open(path, encoding="utf-8") as fh:
        return {line.strip() for line in fh if line.strip()}
