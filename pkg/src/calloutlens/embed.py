"""CBOW word embeddings trained with negative sampling.

The hot loop is compiled with numba and releases the GIL, so ``threads > 1``
runs shards concurrently against shared weight matrices without locks.
Only single-threaded runs are bit-reproducible.

Model files use the plain word2vec text layout: a ``<vocab_size> <dim>``
header, then ``token v1 v2 ...`` per line in descending-count order.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from collections import Counter
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numba
import numpy as np

from .errors import DataError, VocabularyError
from .text import strip_urls, word_tokens

logger = logging.getLogger(__name__)

_U64 = np.uint64


@dataclass(frozen=True)
class TrainConfig:
    dim: int = 100
    window: int = 5
    min_count: int = 5
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    subsample_t: float = 1e-4
    seed: int = 1
    threads: int = 1

    def __post_init__(self):
        for name in ("dim", "window", "min_count", "negatives", "epochs", "threads"):
            if getattr(self, name) < 1:
                raise DataError(f"{name} must be a positive integer")
        if not self.initial_lr > 0 or not self.subsample_t > 0:
            raise DataError("initial_lr and subsample_t must be positive")

    @property
    def min_lr(self) -> float:
        return self.initial_lr * 1e-4


@dataclass
class EmbeddingModel:
    vocab: list  # [(token, count)], descending count then token
    input_vectors: np.ndarray
    output_vectors: Optional[np.ndarray] = None
    config: Optional[TrainConfig] = None
    epoch_losses: list = field(default_factory=list)

    def __post_init__(self):
        self.index = {tok: i for i, (tok, _) in enumerate(self.vocab)}
        if len(self.index) != len(self.vocab):
            raise DataError("duplicate tokens in vocabulary")
        if self.input_vectors.shape[0] != len(self.vocab):
            raise DataError("vector table does not match vocabulary size")

    @property
    def dim(self) -> int:
        return self.input_vectors.shape[1]

    @property
    def tokens(self) -> list[str]:
        return [t for t, _ in self.vocab]

    def __contains__(self, token) -> bool:
        return token in self.index

    def __len__(self):
        return len(self.vocab)

    def lookup(self, token: str, where: str = "vocabulary") -> int:
        try:
            return self.index[token]
        except KeyError:
            raise VocabularyError(token, where) from None

    def vector(self, token: str) -> np.ndarray:
        return self.input_vectors[self.lookup(token)]


# -- text ---------------------------------------------------------------------

def preprocess_text(raw: str, lemma_dict: Optional[dict] = None) -> list[str]:
    """Tokenize tweet text for embedding training.

    Drops a leading ``RT`` token and any ``http(s)://`` URLs, lowercases,
    turns punctuation into separators and maps tokens through ``lemma_dict``.
    """
    text = raw.strip()
    if text.startswith("RT") and (len(text) == 2 or not (text[2].isalnum() or text[2] == "_")):
        text = text[2:]
    tokens = word_tokens(strip_urls(text))
    if lemma_dict:
        tokens = [lemma_dict.get(t, t) for t in tokens]
    return tokens


def load_lemmas(path) -> dict:
    """Read a ``form<TAB>lemma`` dictionary."""
    lemmas = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise DataError(f"{path}:{lineno}: expected form<TAB>lemma")
            lemmas[parts[0]] = parts[1]
    return lemmas


def build_vocab(sequences: Iterable[Sequence[str]], min_count: int = 5) -> list[tuple[str, int]]:
    counts = Counter()
    for seq in sequences:
        counts.update(seq)
    vocab = sorted(((t, n) for t, n in counts.items() if n >= min_count), key=lambda x: (-x[1], x[0]))
    if not vocab:
        raise DataError(f"vocabulary is empty after applying min_count={min_count}")
    return vocab


# -- compiled kernels -----------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _next_u64(state):
    # splitmix64
    state[0] += np.uint64(0x9E3779B97F4A7C15)
    z = state[0]
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True, nogil=True)
def _uniform(state):
    return (_next_u64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True, nogil=True)
def _draw(cum, state):
    return np.searchsorted(cum, _uniform(state) * cum[-1], side="right")


@numba.njit(cache=True, nogil=True)
def _draw_many(cum, n, state):
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _draw(cum, state)
    return out


@numba.njit(cache=True, nogil=True)
def _log_sigmoid(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True, nogil=True)
def _cbow_update(win, wout, context, n_ctx, target, negs, n_negs, lr, h, e):
    """One CBOW negative-sampling update; returns the loss before the update."""
    dim = win.shape[1]
    for d in range(dim):
        h[d] = 0.0
        e[d] = 0.0
    for c in range(n_ctx):
        for d in range(dim):
            h[d] += win[context[c], d]
    inv = 1.0 / n_ctx
    for d in range(dim):
        h[d] *= inv
    loss = 0.0
    for j in range(n_negs + 1):
        if j == 0:
            w = target
            label = 1.0
        else:
            w = negs[j - 1]
            label = 0.0
        dot = 0.0
        for d in range(dim):
            dot += h[d] * wout[w, d]
        if label > 0:
            loss -= _log_sigmoid(dot)
        else:
            loss -= _log_sigmoid(-dot)
        s = 1.0 / (1.0 + math.exp(-dot)) if dot >= 0 else math.exp(dot) / (1.0 + math.exp(dot))
        g = s - label
        for d in range(dim):
            e[d] += g * wout[w, d]
            wout[w, d] -= lr * g * h[d]
    for c in range(n_ctx):
        for d in range(dim):
            win[context[c], d] -= lr * e[d] * inv
    return loss


@numba.njit(cache=True, nogil=True)
def _train_epoch(win, wout, tokens, offsets, keep_prob, cum, window, negatives,
                 lr0, min_lr, done0, total_work, seed):
    """Train one pass over a shard; returns (loss_sum, n_updates, words_seen)."""
    state = np.empty(1, dtype=np.uint64)
    state[0] = seed
    dim = win.shape[1]
    h = np.empty(dim)
    e = np.empty(dim)
    ctx = np.empty(2 * window, dtype=np.int64)
    negs = np.empty(negatives, dtype=np.int64)
    sent = np.empty(tokens.shape[0], dtype=np.int64)
    loss_sum = 0.0
    n_updates = 0
    seen = 0
    for si in range(offsets.shape[0] - 1):
        a = offsets[si]
        b = offsets[si + 1]
        n = 0
        for p in range(a, b):
            w = tokens[p]
            if keep_prob[w] >= 1.0 or _uniform(state) < keep_prob[w]:
                sent[n] = w
                n += 1
        seen += b - a
        lr = lr0 * (1.0 - (done0 + seen) / (total_work + 1.0))
        if lr < min_lr:
            lr = min_lr
        for pos in range(n):
            reduced = 1 + int(_next_u64(state) % np.uint64(window))
            n_ctx = 0
            lo = pos - reduced
            hi = pos + reduced
            if lo < 0:
                lo = 0
            if hi > n - 1:
                hi = n - 1
            for q in range(lo, hi + 1):
                if q != pos:
                    ctx[n_ctx] = sent[q]
                    n_ctx += 1
            if n_ctx == 0:
                continue
            target = sent[pos]
            n_negs = 0
            for k in range(negatives):
                cand = _draw(cum, state)
                if cand != target:
                    negs[n_negs] = cand
                    n_negs += 1
            loss_sum += _cbow_update(win, wout, ctx, n_ctx, target, negs, n_negs, lr, h, e)
            n_updates += 1
    return loss_sum, n_updates, seen


# -- python surface ---------------------------------------------------------------

class NegativeSampler:
    """Draws token indices from the unigram distribution raised to ``power``."""

    def __init__(self, counts: Sequence[int], power: float = 0.75):
        weights = np.asarray(counts, dtype=np.float64) ** power
        self.probs = weights / weights.sum()
        self.cum = np.cumsum(weights)

    def draw(self, n: int, seed: int = 0) -> np.ndarray:
        state = np.array([seed], dtype=np.uint64)
        return _draw_many(self.cum, n, state)


def keep_probabilities(counts: Sequence[int], subsample_t: float) -> np.ndarray:
    """Per-token keep probability ``min(1, sqrt(t / freq))``."""
    counts = np.asarray(counts, dtype=np.float64)
    freq = counts / counts.sum()
    return np.minimum(1.0, np.sqrt(subsample_t / freq))


def cbow_loss(input_vectors, output_vectors, context, target, negatives) -> float:
    """Negative-sampling CBOW loss, evaluated directly (no update)."""
    h = input_vectors[np.asarray(context)].mean(axis=0)
    pos = output_vectors[target] @ h
    neg = output_vectors[np.asarray(negatives, dtype=np.int64)] @ h if len(negatives) else np.zeros(0)
    return float(np.logaddexp(0.0, -pos) + np.logaddexp(0.0, neg).sum())


def cbow_step(model: EmbeddingModel, context_indices, target_index, negative_indices, lr: float) -> float:
    """Apply one CBOW update in place and return the pre-update loss."""
    context = np.ascontiguousarray(context_indices, dtype=np.int64)
    negs = np.ascontiguousarray(negative_indices, dtype=np.int64)
    if context.size == 0:
        raise DataError("context must be non-empty")
    n = len(model.vocab)
    if (context.min() < 0 or context.max() >= n or not 0 <= target_index < n
            or (negs.size and (negs.min() < 0 or negs.max() >= n))):
        raise DataError("index out of vocabulary range")
    h = np.empty(model.dim)
    e = np.empty(model.dim)
    return _cbow_update(model.input_vectors, model.output_vectors, context, context.size,
                        int(target_index), negs, negs.size, float(lr), h, e)


def encode_corpus(sequences: Iterable[Sequence[str]], index: dict):
    """Map token sequences to a flat int array plus sentence offsets, dropping OOV tokens."""
    flat, offsets = [], [0]
    for seq in sequences:
        ids = [index[t] for t in seq if t in index]
        flat.extend(ids)
        offsets.append(len(flat))
    return np.asarray(flat, dtype=np.int64), np.asarray(offsets, dtype=np.int64)


def _shard_bounds(offsets: np.ndarray, parts: int) -> list[tuple[int, int]]:
    n_sent = len(offsets) - 1
    edges = np.linspace(0, n_sent, parts + 1).round().astype(int)
    return [(int(edges[i]), int(edges[i + 1])) for i in range(parts) if edges[i + 1] > edges[i]]


def _stream_seed(seed: int, worker: int, epoch: int) -> int:
    return int(np.random.SeedSequence([seed, worker, epoch]).generate_state(1, dtype=np.uint64)[0])


def train_cbow(sequences: Sequence[Sequence[str]], config: TrainConfig = TrainConfig()) -> EmbeddingModel:
    """Train CBOW embeddings on tokenized sentences (each tweet is one sentence)."""
    sequences = list(sequences)
    if not any(sequences):
        raise DataError("cannot train embeddings on an empty corpus")
    vocab = build_vocab(sequences, config.min_count)
    index = {t: i for i, (t, _) in enumerate(vocab)}
    counts = np.array([n for _, n in vocab], dtype=np.float64)
    tokens, offsets = encode_corpus(sequences, index)

    rng = np.random.default_rng(config.seed)
    win = (rng.random((len(vocab), config.dim)) - 0.5) / config.dim
    wout = np.zeros((len(vocab), config.dim))
    keep = keep_probabilities(counts, config.subsample_t)
    cum = NegativeSampler(counts).cum

    shards = _shard_bounds(offsets, config.threads)
    shard_data = [(tokens, offsets[a:b + 1]) for a, b in shards]
    work = [int(o[-1] - o[0]) for _, o in shard_data]
    losses = []
    with ThreadPoolExecutor(max_workers=len(shard_data)) as pool:
        for epoch in range(config.epochs):
            def run(i):
                toks, offs = shard_data[i]
                return _train_epoch(
                    win, wout, toks, offs, keep, cum, config.window, config.negatives,
                    config.initial_lr, config.min_lr, float(epoch * work[i]),
                    float(config.epochs * work[i]), _U64(_stream_seed(config.seed, i, epoch)))
            results = list(pool.map(run, range(len(shard_data))))
            loss = sum(r[0] for r in results)
            steps = sum(r[1] for r in results)
            losses.append(loss / steps if steps else 0.0)
            logger.info("epoch %d: mean loss %.5f over %d updates", epoch + 1, losses[-1], steps)
    if not (np.isfinite(win).all() and np.isfinite(wout).all()):
        raise DataError("training diverged (non-finite weights)")
    return EmbeddingModel(vocab, win, wout, config, losses)


# -- persistence ------------------------------------------------------------------

def save_model(model: EmbeddingModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(model.vocab)} {model.dim}\n")
        for (tok, _), row in zip(model.vocab, model.input_vectors):
            fh.write(tok + " " + " ".join("%.6f" % x for x in row) + "\n")


def load_model(path) -> EmbeddingModel:
    """Read a text model; counts are not stored in the format and load as 0."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.strip():
            raise DataError(f"{path}:1: empty model file")
        try:
            n, dim = (int(x) for x in header.split())
        except ValueError:
            raise DataError(f"{path}:1: expected '<vocab_size> <dim>' header") from None
        tokens, rows = [], []
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise DataError(f"{path}:{lineno}: expected token and {dim} values, got {len(parts) - 1}")
            try:
                rows.append([float(x) for x in parts[1:]])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric vector component") from None
            tokens.append(parts[0])
    if len(tokens) != n:
        raise DataError(f"{path}: header declares {n} tokens but body has {len(tokens)}")
    vectors = np.asarray(rows, dtype=np.float64).reshape(n, dim)
    if not np.isfinite(vectors).all():
        raise DataError(f"{path}: non-finite vector component")
    try:
        return EmbeddingModel([(t, 0) for t in tokens], vectors)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
