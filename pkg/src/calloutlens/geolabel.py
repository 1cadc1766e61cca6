"""European / non-European ground truth from country codes, and stratified splits."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Hashable, Optional, Sequence

import numpy as np

from .errors import DataError

if TYPE_CHECKING:
    from .corpus import TweetRecord


class RegionLabel(enum.Enum):
    EUROPEAN = "E"
    NON_EUROPEAN = "NE"

    @property
    def code(self) -> str:
        return self.value

    @property
    def slug(self) -> str:
        return "european" if self is RegionLabel.EUROPEAN else "noneuropean"

    @classmethod
    def parse(cls, text: str) -> "RegionLabel":
        try:
            return cls(text.strip().upper())
        except (ValueError, AttributeError):
            raise DataError(f"bad region label {text!r}, expected E or NE") from None

    def __lt__(self, other):
        # "E" < "NE": the European class wins every tie
        return self.value < other.value


EUROPEAN_CODES = frozenset("""
    AD AL AM AT AX AZ BA BE BG BY CH CY CZ DE DK EE ES FI FO FR
    GB GE GG GI GR HR HU IE IM IS IT JE KZ LI LT LU LV MC MD ME
    MK MT NL NO PL PT RO RS RU SE SI SK SM TR UA VA
""".split())


def assign_region_label(record: "TweetRecord", codes=EUROPEAN_CODES) -> Optional[RegionLabel]:
    code = record.country_code
    if not code:
        return None
    return RegionLabel.EUROPEAN if code.upper() in codes else RegionLabel.NON_EUROPEAN


@dataclass(frozen=True)
class LabeledExample:
    id: str
    tokens: tuple
    label: RegionLabel


@dataclass(frozen=True)
class SplitSpec:
    ratios: tuple = (0.8, 0.1, 0.1)
    seed: int = 0

    def __post_init__(self):
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise DataError(f"split ratios must be three non-negative numbers, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise DataError(f"split ratios must sum to 1, got {sum(self.ratios)}")


def largest_remainder(n: int, ratios: Sequence[float]) -> list[int]:
    """Integer allocation of ``n`` proportional to ``ratios`` (ties go to the earlier slot)."""
    quotas = [n * r for r in ratios]
    alloc = [math.floor(q) for q in quotas]
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - alloc[i]), i))
    for i in order[: n - sum(alloc)]:
        alloc[i] += 1
    return alloc


def _allocate(class_sizes: list[int], ratios) -> list[list[int]]:
    """Per-class split counts whose split totals follow the overall largest remainder.

    Every cell is floor or ceil of its exact quota (at worst one off), and the
    column totals match ``largest_remainder(N, ratios)``.
    """
    totals = largest_remainder(sum(class_sizes), ratios)
    quotas = [[n * r for r in ratios] for n in class_sizes]
    cells = [[math.floor(q) for q in row] for row in quotas]
    need = [n - sum(row) for n, row in zip(class_sizes, cells)]
    room = [t - sum(col) for t, col in zip(totals, zip(*cells))]
    # Gale-Ryser style greedy: each class spreads its extra units over the
    # splits with the most remaining room, preferring larger fractional parts.
    for c in sorted(range(len(class_sizes)), key=lambda c: (-need[c], c)):
        cands = sorted(
            range(len(ratios)),
            key=lambda s: (-room[s], -(quotas[c][s] - cells[c][s]), s))
        for s in cands[: need[c]]:
            if room[s] <= 0:
                break
            cells[c][s] += 1
            room[s] -= 1
    # fallback for pathological ratios: dump leftovers where room remains
    for c, row in enumerate(cells):
        while sum(row) < class_sizes[c]:
            s = max(range(len(ratios)), key=lambda s: (room[s], -s))
            row[s] += 1
            room[s] -= 1
    return cells


def stratified_split(examples: Sequence, spec: SplitSpec = SplitSpec(), key=lambda ex: ex.label):
    """Partition ``examples`` into (train, validation, test) preserving class proportions.

    Within each class the members are shuffled with ``spec.seed``; each part
    keeps the input order of its members, so identical input and seed give
    identical partitions.
    """
    if not examples:
        raise DataError("cannot split an empty example list")
    by_class: dict[Hashable, list[int]] = {}
    for i, ex in enumerate(examples):
        by_class.setdefault(key(ex), []).append(i)
    if len(by_class) < 2:
        raise DataError(f"stratified split needs at least two classes, got {sorted(map(str, by_class))}")
    classes = sorted(by_class, key=lambda c: getattr(c, "value", c))
    cells = _allocate([len(by_class[c]) for c in classes], spec.ratios)
    rng = np.random.default_rng(spec.seed)
    parts: list[list[int]] = [[], [], []]
    for c, row in zip(classes, cells):
        idx = np.array(by_class[c])
        rng.shuffle(idx)
        start = 0
        for s, k in enumerate(row):
            parts[s].extend(idx[start:start + k].tolist())
            start += k
    return tuple([examples[i] for i in sorted(p)] for p in parts)
