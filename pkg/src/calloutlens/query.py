"""Nearest neighbours, 3CosAdd analogies and cross-model neighbourhood comparison."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embed import EmbeddingModel
from .errors import DataError, VocabularyError


@dataclass(frozen=True)
class NeighborList:
    query: str
    entries: tuple  # ((token, cosine), ...)

    @property
    def tokens(self) -> list[str]:
        return [t for t, _ in self.entries]

    def to_tsv(self) -> str:
        lines = ["rank\ttoken\tcosine"]
        lines += [f"{i}\t{t}\t{c:.6f}" for i, (t, c) in enumerate(self.entries, 1)]
        return "\n".join(lines) + "\n"


def unit_rows(vectors: np.ndarray) -> np.ndarray:
    """Rows scaled to unit length; zero rows stay zero (cosine 0 with everything)."""
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return np.divide(vectors, norms, out=np.zeros_like(vectors, dtype=np.float64), where=norms > 0)


def cosine(u, v) -> float:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def _rank(model: EmbeddingModel, target: np.ndarray, exclude: set, k: int, query: str) -> NeighborList:
    if k < 1:
        raise DataError(f"k must be positive, got {k}")
    unit = unit_rows(model.input_vectors)
    tn = np.linalg.norm(target)
    sims = unit @ (target / tn) if tn > 0 else np.zeros(len(model.vocab))
    tokens = np.array(model.tokens, dtype=object)
    mask = np.ones(len(tokens), dtype=bool)
    for i in exclude:
        mask[i] = False
    idx = np.flatnonzero(mask)
    # descending cosine, then ascending token
    order = sorted(idx.tolist(), key=lambda i: (-sims[i], tokens[i]))[:k]
    return NeighborList(query, tuple((tokens[i], float(sims[i])) for i in order))


def nearest_neighbors(model: EmbeddingModel, query: str, k: int = 10) -> NeighborList:
    qi = model.lookup(query)
    return _rank(model, model.input_vectors[qi], {qi}, k, query)


def analogy(model: EmbeddingModel, a: str, b: str, c: str, k: int = 1) -> NeighborList:
    """Rank tokens by cosine to ``v(b) + v(a) - v(c)``, excluding a, b and c."""
    ia, ib, ic = (model.lookup(t) for t in (a, b, c))
    target = model.input_vectors[ib] + model.input_vectors[ia] - model.input_vectors[ic]
    return _rank(model, target, {ia, ib, ic}, k, f"{b}+{a}-{c}")


def jaccard(a, b) -> float:
    a, b = set(a), set(b)
    if not a and not b:
        return 1.0
    return len(a & b) / len(a | b)


def compare_neighborhoods(model_a: EmbeddingModel, model_b: EmbeddingModel, query: str, k: int = 10):
    """Top-k neighbours of ``query`` in both models and the Jaccard overlap of the two sets."""
    for name, m in (("model A", model_a), ("model B", model_b)):
        if query not in m:
            raise VocabularyError(query, name)
    na = nearest_neighbors(model_a, query, k)
    nb = nearest_neighbors(model_b, query, k)
    return na, nb, jaccard(na.tokens, nb.tokens)
