"""Regional / temporal comparison tables and their figures."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .corpus import CorpusSlice, select_region  # noqa: E402
from .embed import preprocess_text  # noqa: E402
from .geolabel import RegionLabel  # noqa: E402
from .lexspec import FreqTable, SpecificityRow, top_terms  # noqa: E402
from .query import jaccard, nearest_neighbors  # noqa: E402

# keep PNGs byte-stable across runs and matplotlib patch releases
_PNG_META = {"Software": None}

plt.rcParams.update({
    "font.size": 8,
    "axes.titlesize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 120,
})


@dataclass
class RegionTop:
    slice_name: str
    language: str
    period: str
    region: RegionLabel
    rows: list  # SpecificityRow


def slice_tokens(corpus: CorpusSlice, lemmas=None) -> list[list[str]]:
    return [preprocess_text(r.text, lemmas) for r in corpus]


def regional_specificity(slices: Sequence[CorpusSlice], k: int = 5,
                         wordlist: Optional[set] = None, lemmas=None) -> list[RegionTop]:
    """Top terms of each region's records against the whole slice they came from."""
    out = []
    for s in slices:
        ref = FreqTable.from_sequences(slice_tokens(s, lemmas))
        for region in RegionLabel:
            sub_slice = select_region(s, region)
            sub = FreqTable.from_sequences(slice_tokens(sub_slice, lemmas))
            rows = top_terms(ref, sub, k, wordlist) if sub.total else []
            out.append(RegionTop(s.name, s.language, s.period.label if s.period else "all", region, rows))
    return out


def specificity_tsv(tops: Sequence[RegionTop]) -> str:
    lines = ["slice\tlanguage\tperiod\tregion\trank\tterm\tf\tF\tscore"]
    for t in tops:
        for i, r in enumerate(t.rows, 1):
            lines.append(f"{t.slice_name}\t{t.language}\t{t.period}\t{t.region.code}\t{i}\t"
                         f"{r.term}\t{r.f}\t{r.F}\t{r.score:.6f}")
    return "\n".join(lines) + "\n"


def plot_specificity(tops: Sequence[RegionTop], path) -> Path:
    """One horizontal bar chart per (slice, region), slices as rows."""
    names = list(dict.fromkeys(t.slice_name for t in tops))
    fig, axes = plt.subplots(len(names), 2, figsize=(7.0, 1.6 * len(names) + 0.4), squeeze=False)
    for t in tops:
        ax = axes[names.index(t.slice_name)][0 if t.region is RegionLabel.EUROPEAN else 1]
        rows: list[SpecificityRow] = t.rows[::-1]
        ax.barh(range(len(rows)), [r.score for r in rows],
                color="#3b6ea5" if t.region is RegionLabel.EUROPEAN else "#c0504d")
        ax.set_yticks(range(len(rows)))
        ax.set_yticklabels([r.term for r in rows])
        ax.set_title(f"{t.slice_name} {t.region.code}")
        ax.set_xlabel("specificity")
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
    return Path(path)


def neighbor_rows(models: dict, queries: Sequence[str], k: int = 10):
    """Neighbour lists per (query, model) plus pairwise Jaccard overlaps."""
    lists, overlaps = {}, {}
    for q in queries:
        for name, m in models.items():
            if q in m:
                lists[(q, name)] = nearest_neighbors(m, q, k)
        for a, b in itertools.combinations(models, 2):
            if (q, a) in lists and (q, b) in lists:
                overlaps[(q, a, b)] = jaccard(lists[(q, a)].tokens, lists[(q, b)].tokens)
    return lists, overlaps


def neighbors_tsv(lists: dict) -> str:
    lines = ["query\tmodel\trank\ttoken\tcosine"]
    for (q, name), nl in lists.items():
        for i, (tok, c) in enumerate(nl.entries, 1):
            lines.append(f"{q}\t{name}\t{i}\t{tok}\t{c:.6f}")
    return "\n".join(lines) + "\n"


def overlap_tsv(overlaps: dict) -> str:
    lines = ["query\tmodel_a\tmodel_b\tjaccard"]
    lines += [f"{q}\t{a}\t{b}\t{j:.6f}" for (q, a, b), j in overlaps.items()]
    return "\n".join(lines) + "\n"


def plot_overlap(models: Sequence[str], queries: Sequence[str], overlaps: dict, path) -> Path:
    """Jaccard heatmap of neighbour sets between models, one panel per query."""
    n = len(models)
    fig, axes = plt.subplots(1, len(queries), figsize=(3.2 * len(queries), 3.0), squeeze=False)
    for ax, q in zip(axes[0], queries):
        mat = np.full((n, n), np.nan)
        for i, a in enumerate(models):
            mat[i, i] = 1.0
            for j, b in enumerate(models):
                key = (q, a, b) if (q, a, b) in overlaps else (q, b, a)
                if key in overlaps:
                    mat[i, j] = overlaps[key]
        im = ax.imshow(mat, vmin=0, vmax=1, cmap="viridis")
        ax.set_xticks(range(n))
        ax.set_xticklabels(models, rotation=45, ha="right")
        ax.set_yticks(range(n))
        ax.set_yticklabels(models)
        ax.set_title(q)
    fig.colorbar(im, ax=axes[0].tolist(), shrink=0.8, label="jaccard")
    fig.savefig(path, metadata=_PNG_META, bbox_inches="tight")
    plt.close(fig)
    return Path(path)
