"""Multinomial Naive Bayes over user-profile metadata.

Features are the description words plus the whole location collapsed into a
single underscore-joined token (``"New York"`` -> ``new_york``). Models
persist as a small versioned TSV::

    nbmodel v1 alpha=1.0
    prior<TAB>E<TAB>-0.69...
    tok<TAB>E<TAB>london<TAB>-1.79...
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .corpus import CorpusSlice, TweetRecord
from .errors import DataError
from .geolabel import EUROPEAN_CODES, LabeledExample, RegionLabel, assign_region_label
from .text import letter_words

E, NE = RegionLabel.EUROPEAN, RegionLabel.NON_EUROPEAN
CLASSES = (E, NE)
MODEL_MAGIC = "nbmodel v1"


@dataclass(frozen=True)
class FeatureDoc:
    id: str
    tokens: tuple = ()


def build_features(record: TweetRecord) -> FeatureDoc:
    tokens = letter_words(record.user_description)
    loc = letter_words(record.user_location)
    if loc:
        tokens.append("_".join(loc))
    return FeatureDoc(record.id, tuple(tokens))


def labeled_examples(corpus: Iterable[TweetRecord], codes=EUROPEAN_CODES) -> list[LabeledExample]:
    """Geotagged records turned into training examples; untagged records are skipped."""
    out = []
    for rec in corpus:
        label = assign_region_label(rec, codes)
        if label is not None:
            out.append(LabeledExample(rec.id, build_features(rec).tokens, label))
    return out


@dataclass
class NBModel:
    log_priors: dict
    log_likelihoods: dict  # label -> {token: logp}
    vocabulary: frozenset
    alpha: float = 1.0

    def token_logp(self, label: RegionLabel, token: str) -> float:
        return self.log_likelihoods[label][token]

    def scores(self, doc: FeatureDoc) -> dict:
        out = {}
        for c in CLASSES:
            s = self.log_priors[c]
            for tok in doc.tokens:
                if tok in self.vocabulary:
                    s += self.token_logp(c, tok)
            out[c] = s
        return out


def train_nb(docs: Sequence, alpha: float = 1.0) -> NBModel:
    """Fit add-alpha smoothed multinomial NB on ``(FeatureDoc, RegionLabel)`` pairs."""
    if not alpha > 0:
        raise DataError(f"smoothing alpha must be positive, got {alpha}")
    doc_counts = Counter()
    tok_counts = {c: Counter() for c in CLASSES}
    for doc, label in docs:
        doc_counts[label] += 1
        tok_counts[label].update(doc.tokens)
    missing = [c.code for c in CLASSES if doc_counts[c] == 0]
    if missing:
        raise DataError(f"training data has no examples of class {', '.join(missing)}")
    n_docs = sum(doc_counts.values())
    vocab = frozenset().union(*(tok_counts[c].keys() for c in CLASSES))
    v = len(vocab)
    priors, likes = {}, {}
    for c in CLASSES:
        counts = tok_counts[c]
        denom = math.log(sum(counts.values()) + alpha * v)
        priors[c] = math.log(doc_counts[c] / n_docs)
        likes[c] = {t: math.log(counts[t] + alpha) - denom for t in vocab}
    return NBModel(priors, likes, vocab, alpha)


def train_on_examples(examples: Iterable[LabeledExample], alpha: float = 1.0) -> NBModel:
    return train_nb([(FeatureDoc(ex.id, ex.tokens), ex.label) for ex in examples], alpha)


def predict(model: NBModel, doc: FeatureDoc) -> tuple[RegionLabel, float]:
    """Most probable region and its normalized posterior; ties go to European."""
    scores = model.scores(doc)
    top = max(scores.values())
    z = top + math.log(sum(math.exp(s - top) for s in scores.values()))
    label = E if scores[E] >= scores[NE] else NE
    return label, math.exp(scores[label] - z)


@dataclass(frozen=True)
class EvalMetrics:
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: tuple  # rows gold (E, NE), columns predicted (E, NE)

    def row(self, digits: int = 4) -> list[str]:
        return [f"{x:.{digits}f}" for x in
                (self.macro_precision, self.macro_recall, self.accuracy, self.macro_f1)]


def evaluate(predictions: Sequence[RegionLabel], gold: Sequence[RegionLabel]) -> EvalMetrics:
    if len(predictions) != len(gold):
        raise DataError(f"{len(predictions)} predictions for {len(gold)} gold labels")
    if not gold:
        raise DataError("cannot evaluate on an empty set")
    idx = {c: i for i, c in enumerate(CLASSES)}
    conf = [[0, 0], [0, 0]]
    for p, g in zip(predictions, gold):
        conf[idx[g]][idx[p]] += 1
    precs, recs, f1s = [], [], []
    for i in range(2):
        tp = conf[i][i]
        predicted = conf[0][i] + conf[1][i]
        actual = sum(conf[i])
        p = tp / predicted if predicted else 0.0
        r = tp / actual if actual else 0.0
        precs.append(p)
        recs.append(r)
        f1s.append(2 * p * r / (p + r) if p + r else 0.0)
    return EvalMetrics(
        accuracy=(conf[0][0] + conf[1][1]) / len(gold),
        macro_precision=sum(precs) / 2,
        macro_recall=sum(recs) / 2,
        macro_f1=sum(f1s) / 2,
        confusion=tuple(map(tuple, conf)),
    )


def naive_baseline(n: int) -> list[RegionLabel]:
    """The all-European predictor."""
    return [E] * n


# -- label import -----------------------------------------------------------

@dataclass
class ImportStats:
    rows: int = 0
    matched: int = 0
    unmatched: int = 0
    malformed: int = 0


def read_label_tsv(path) -> tuple[dict, ImportStats]:
    """Read ``id<TAB>label`` rows; malformed rows are tallied, conflicting duplicates raise."""
    stats = ImportStats()
    labels: dict[str, RegionLabel] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n").rstrip("\r")
            if not line:
                continue
            stats.rows += 1
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or parts[1] not in ("E", "NE"):
                stats.malformed += 1
                continue
            rid, label = parts[0], RegionLabel(parts[1])
            if labels.get(rid, label) is not label:
                raise DataError(f"{path}:{lineno}: id {rid} labeled both "
                                f"{labels[rid].code} and {label.code}")
            labels[rid] = label
    return labels, stats


def import_labels(corpus: CorpusSlice, *paths) -> tuple[CorpusSlice, ImportStats]:
    """Attach region labels from one or more TSV files to matching records."""
    merged: dict[str, RegionLabel] = {}
    total = ImportStats()
    for path in paths:
        labels, st = read_label_tsv(path)
        for rid, lab in labels.items():
            if merged.get(rid, lab) is not lab:
                raise DataError(f"{path}: id {rid} conflicts with an earlier label file")
            merged[rid] = lab
        total.rows += st.rows
        total.malformed += st.malformed
    ids = {r.id for r in corpus}
    total.matched = sum(1 for rid in merged if rid in ids)
    total.unmatched = len(merged) - total.matched
    recs = [replace(r, region=merged[r.id]) if r.id in merged else r for r in corpus]
    return corpus.with_records(recs), total


def write_label_tsv(rows: Iterable[tuple[str, RegionLabel]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rid, label in rows:
            fh.write(f"{rid}\t{label.code}\n")


# -- persistence --------------------------------------------------------------

def save_model(model: NBModel, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{MODEL_MAGIC} alpha={model.alpha!r}\n")
        for c in CLASSES:
            fh.write(f"prior\t{c.code}\t{model.log_priors[c]!r}\n")
        for c in CLASSES:
            for tok in sorted(model.log_likelihoods[c]):
                fh.write(f"tok\t{c.code}\t{tok}\t{model.log_likelihoods[c][tok]!r}\n")


def load_model(path) -> NBModel:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith(MODEL_MAGIC + " alpha="):
        raise DataError(f"{path}:1: not an {MODEL_MAGIC} file")
    try:
        alpha = float(lines[0].split("alpha=", 1)[1])
    except ValueError:
        raise DataError(f"{path}:1: bad alpha") from None
    priors = {}
    likes = {c: {} for c in CLASSES}
    for lineno, line in enumerate(lines[1:], 2):
        parts = line.split("\t")
        try:
            kind = parts[0]
            label = RegionLabel(parts[1])
            if kind == "prior" and len(parts) == 3:
                priors[label] = float(parts[2])
            elif kind == "tok" and len(parts) == 4:
                likes[label][parts[2]] = float(parts[3])
            else:
                raise ValueError(kind)
        except (ValueError, IndexError):
            raise DataError(f"{path}:{lineno}: malformed model row") from None
    if set(priors) != set(CLASSES):
        raise DataError(f"{path}: missing class prior")
    vocab = frozenset(likes[E])
    if frozenset(likes[NE]) != vocab:
        raise DataError(f"{path}: token tables differ between classes")
    return NBModel(priors, likes, vocab, alpha)


def classify_slice(model: NBModel, corpus: CorpusSlice, only_untagged: bool = True):
    """Yield ``(id, label, posterior)`` for records (by default only those without a country code)."""
    for rec in corpus:
        if only_untagged and rec.country_code:
            continue
        label, post = predict(model, build_features(rec))
        yield rec.id, label, post


def posterior_table(model: NBModel, doc: FeatureDoc) -> dict:
    scores = model.scores(doc)
    top = max(scores.values())
    z = top + math.log(sum(math.exp(s - top) for s in scores.values()))
    return {c: math.exp(s - z) for c, s in scores.items()}


def check_model(model: NBModel, tol: float = 1e-9) -> Optional[str]:
    """Return a description of the first violated invariant, or None."""
    if abs(sum(math.exp(p) for p in model.log_priors.values()) - 1) > tol:
        return "priors do not sum to 1"
    for c in CLASSES:
        total = sum(math.exp(model.token_logp(c, t)) for t in model.vocabulary)
        if abs(total - 1) > tol:
            return f"likelihoods for {c.code} sum to {total}"
        if any(math.isinf(model.token_logp(c, t)) for t in model.vocabulary):
            return f"infinite log-likelihood in class {c.code}"
    return None
