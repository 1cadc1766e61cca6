"""Tweet records, corpus slices, and the streaming ingestion / filtering pass.

Input is one JSON object per line, shaped like the Twitter v1.1 payload::

    {"id": "...", "full_text": "...", "lang": "en",
     "created_at": "Thu May 23 10:00:00 +0000 2019",
     "user": {"location": "...", "description": "..."},
     "place": {"country_code": "GB"}}

Slices are written as JSONL (one normalized record per line) next to a
small JSON header file holding name, language, period, region and count.
"""

from __future__ import annotations

import gzip
import json
import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence

from .errors import DataError
from .geolabel import RegionLabel

logger = logging.getLogger(__name__)

ANY_LANGUAGE = "*"
HEADER_SUFFIX = ".header"

_TWITTER_TIME = "%a %b %d %H:%M:%S %z %Y"
_COUNTRY_RE = re.compile(r"^[A-Z]{2}$")

# Terms used to select callout tweets per language; duplicate translations
# (misinformation / disinformation share one word in es and fr) collapse.
DISINFO_TERMS = {
    "en": (
        "active measures", "conspiracy", "deceive", "deep state",
        "disinformation", "fabrication", "fake news", "influence",
        "interference", "manipulate", "misinformation", "propaganda",
        "subversion",
    ),
    "es": (
        "medidas activas", "conspiración", "engañar", "estado profundo",
        "desinformación", "invención", "noticias falsas", "influencia",
        "interferencia", "manipular", "desinformación", "propaganda",
        "subversión",
    ),
    "fr": (
        "mesures actives", "complot", "tromper", "état profond",
        "désinformation", "invention", "fausse nouvelle", "influence",
        "ingérence", "manipuler", "désinformation", "propagande",
        "subversion",
    ),
}


def normalize_country_code(code) -> Optional[str]:
    """Uppercase and validate a country code; anything but two ASCII letters is dropped."""
    if not isinstance(code, str):
        return None
    code = code.strip().upper()
    return code if _COUNTRY_RE.match(code) else None


def parse_timestamp(value) -> datetime:
    """Parse a Twitter-style or ISO-8601 timestamp into an aware UTC datetime."""
    if not isinstance(value, str) or not value:
        raise ValueError(f"bad timestamp {value!r}")
    try:
        dt = datetime.strptime(value, _TWITTER_TIME)
    except ValueError:
        dt = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


@dataclass(frozen=True)
class TweetRecord:
    id: str
    text: str
    lang: str
    created_at: datetime
    user_location: str = ""
    user_description: str = ""
    country_code: Optional[str] = None
    region: Optional[RegionLabel] = None

    def __post_init__(self):
        if not self.id:
            raise DataError("record id must be non-empty")
        if not self.lang:
            raise DataError(f"record {self.id}: lang must be non-empty")
        if self.country_code is not None and not _COUNTRY_RE.match(self.country_code):
            raise DataError(f"record {self.id}: bad country code {self.country_code!r}")

    @classmethod
    def from_tweet_json(cls, obj: dict) -> "TweetRecord":
        """Build a record from a raw tweet object; raises ValueError/KeyError/TypeError on bad input."""
        if not isinstance(obj, dict):
            raise TypeError("line is not a JSON object")
        rid = obj.get("id_str") or obj.get("id")
        if rid is None or rid == "":
            raise KeyError("id")
        text = obj.get("full_text")
        if text is None:
            text = (obj.get("extended_tweet") or {}).get("full_text")
        if text is None:
            text = obj.get("text", "")
        user = obj.get("user") or {}
        place = obj.get("place") or {}
        lang = obj.get("lang")
        if not isinstance(lang, str) or not lang:
            raise KeyError("lang")
        return cls(
            id=str(rid),
            text=str(text),
            lang=lang,
            created_at=parse_timestamp(obj.get("created_at")),
            user_location=user.get("location") or "",
            user_description=user.get("description") or "",
            country_code=normalize_country_code(place.get("country_code")),
        )

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "text": self.text,
            "lang": self.lang,
            "created_at": self.created_at.isoformat(),
            "user_location": self.user_location,
            "user_description": self.user_description,
            "country_code": self.country_code,
            "region": self.region.code if self.region else None,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TweetRecord":
        region = obj.get("region")
        return cls(
            id=obj["id"],
            text=obj["text"],
            lang=obj["lang"],
            created_at=parse_timestamp(obj["created_at"]),
            user_location=obj.get("user_location", ""),
            user_description=obj.get("user_description", ""),
            country_code=obj.get("country_code"),
            region=RegionLabel.parse(region) if region else None,
        )


@dataclass(frozen=True)
class Period:
    """Inclusive date range, compared on the UTC calendar date."""

    start: date
    end: date

    def __post_init__(self):
        if self.end < self.start:
            raise DataError(f"period ends before it starts: {self.start}..{self.end}")

    def __contains__(self, when) -> bool:
        if isinstance(when, datetime):
            when = when.astimezone(timezone.utc).date()
        return self.start <= when <= self.end

    def overlaps(self, other: "Period") -> bool:
        return self.start <= other.end and other.start <= self.end

    @property
    def label(self) -> str:
        if self.start.year == self.end.year:
            return str(self.start.year)
        return f"{self.start.isoformat()}_{self.end.isoformat()}"

    @classmethod
    def parse(cls, text: str) -> "Period":
        """Parse ``YYYY-MM-DD:YYYY-MM-DD``."""
        try:
            a, b = text.split(":")
            return cls(date.fromisoformat(a.strip()), date.fromisoformat(b.strip()))
        except ValueError as exc:
            raise DataError(f"bad period {text!r}, expected YYYY-MM-DD:YYYY-MM-DD") from exc

    def to_json(self):
        return [self.start.isoformat(), self.end.isoformat()]


# The two collection windows of the callout dataset.
STUDY_PERIODS = (
    Period(date(2019, 4, 17), date(2019, 6, 30)),
    Period(date(2020, 4, 17), date(2020, 6, 30)),
)


@dataclass(frozen=True)
class CorpusSlice:
    name: str
    records: tuple
    language: str
    period: Optional[Period] = None
    region: Optional[RegionLabel] = None

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for rec in self.records:
            if self.language != ANY_LANGUAGE and rec.lang != self.language:
                raise DataError(
                    f"slice {self.name}: record {rec.id} has lang {rec.lang!r}, "
                    f"expected {self.language!r}")
            if self.period is not None and rec.created_at not in self.period:
                raise DataError(f"slice {self.name}: record {rec.id} outside period")

    def __len__(self):
        return len(self.records)

    def __iter__(self) -> Iterator[TweetRecord]:
        return iter(self.records)

    def with_records(self, records, **changes) -> "CorpusSlice":
        return replace(self, records=tuple(records), **changes)

    def header(self) -> dict:
        return {
            "name": self.name,
            "language": self.language,
            "period": self.period.to_json() if self.period else None,
            "region": self.region.code if self.region else None,
            "count": len(self.records),
        }


@dataclass
class IngestStats:
    lines_read: int = 0
    kept: int = 0
    skipped_malformed: int = 0
    skipped_language: int = 0

    def __iadd__(self, other: "IngestStats"):
        self.lines_read += other.lines_read
        self.kept += other.kept
        self.skipped_malformed += other.skipped_malformed
        self.skipped_language += other.skipped_language
        return self


@dataclass(frozen=True)
class TermList:
    language: str
    terms: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        terms = frozenset(" ".join(t.split()) for t in self.terms)
        terms = frozenset(t for t in terms if t)
        if not terms:
            raise DataError(f"term list for {self.language!r} is empty")
        if any(t != t.lower() for t in terms):
            raise DataError("terms must be lowercase")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def default(cls, language: str) -> "TermList":
        try:
            return cls(language, frozenset(DISINFO_TERMS[language]))
        except KeyError:
            raise DataError(f"no built-in term list for language {language!r}") from None

    @classmethod
    def from_file(cls, language: str, path) -> "TermList":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(language, frozenset(line.strip().lower() for line in lines if line.strip()))

    def pattern(self) -> re.Pattern:
        # longest first so multi-word terms win over their prefixes
        alts = sorted(self.terms, key=lambda t: (-len(t), t))
        body = "|".join(re.escape(t) for t in alts)
        return re.compile(rf"(?<!\w)(?:{body})(?!\w)")


def _open_text(path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def iter_tweet_lines(path, lang_allowlist, stats: IngestStats) -> Iterator[TweetRecord]:
    """Yield kept records from one JSONL file, tallying into ``stats``."""
    allow = set(lang_allowlist)
    with _open_text(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            stats.lines_read += 1
            try:
                rec = TweetRecord.from_tweet_json(json.loads(line))
            except (ValueError, KeyError, TypeError, AttributeError) as exc:
                stats.skipped_malformed += 1
                logger.debug("%s:%d skipped: %s", path, lineno, exc)
                continue
            if rec.lang not in allow:
                stats.skipped_language += 1
                continue
            stats.kept += 1
            yield rec


def ingest_records(path, lang_allowlist) -> tuple[CorpusSlice, IngestStats]:
    """Stream one JSONL file into a slice of records whose lang is allowed.

    Malformed lines are tallied, never fatal. An unreadable path raises
    OSError. With more than one allowed language the slice language is
    ``"*"``; use :func:`split_by_language` to get monolingual slices.
    """
    stats = IngestStats()
    records = list(iter_tweet_lines(path, lang_allowlist, stats))
    langs = sorted(set(lang_allowlist))
    language = langs[0] if len(langs) == 1 else ANY_LANGUAGE
    return CorpusSlice(Path(path).stem, records, language), stats


def ingest_many(paths: Sequence, lang_allowlist, threads: int = 1):
    """Ingest several files concurrently; merged in the order of ``paths``."""
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(lambda p: ingest_records(p, lang_allowlist), paths))
    stats = IngestStats()
    records = []
    for part, st in results:
        records.extend(part.records)
        stats += st
    langs = sorted(set(lang_allowlist))
    language = langs[0] if len(langs) == 1 else ANY_LANGUAGE
    return CorpusSlice("ingest", records, language), stats


def split_by_language(corpus: CorpusSlice) -> dict[str, CorpusSlice]:
    by_lang: dict[str, list] = {}
    for rec in corpus:
        by_lang.setdefault(rec.lang, []).append(rec)
    return {
        lang: CorpusSlice(f"{lang}", recs, lang, corpus.period, corpus.region)
        for lang, recs in sorted(by_lang.items())
    }


def filter_disinfo_terms(corpus: CorpusSlice, terms: TermList) -> CorpusSlice:
    """Keep records whose lowercased text mentions at least one term on word boundaries."""
    if terms.language != corpus.language:
        raise DataError(
            f"term list language {terms.language!r} does not match slice {corpus.language!r}")
    pat = terms.pattern()
    kept = [r for r in corpus if pat.search(" ".join(r.text.lower().split()))]
    return corpus.with_records(kept)


def partition_corpus(corpus: CorpusSlice, periods: Sequence[Period]):
    """Split a slice into one slice per (pairwise disjoint) period.

    Returns ``(slices, dropped)`` where ``dropped`` counts records outside
    every period.
    """
    periods = list(periods)
    for i, a in enumerate(periods):
        for b in periods[i + 1:]:
            if a.overlaps(b):
                raise DataError(f"periods overlap: {a.to_json()} and {b.to_json()}")
    buckets = [[] for _ in periods]
    dropped = 0
    for rec in corpus:
        for i, p in enumerate(periods):
            if rec.created_at in p:
                buckets[i].append(rec)
                break
        else:
            dropped += 1
    slices = [
        corpus.with_records(recs, name=f"{corpus.language}-{p.label}", period=p)
        for p, recs in zip(periods, buckets)
    ]
    return slices, dropped


def select_region(corpus: CorpusSlice, region: RegionLabel) -> CorpusSlice:
    recs = [r for r in corpus if r.region is region]
    return corpus.with_records(recs, name=f"{corpus.name}-{region.slug}", region=region)


def header_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + HEADER_SUFFIX)


def save_slice(corpus: CorpusSlice, path) -> None:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in corpus:
            fh.write(json.dumps(rec.to_json(), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
    header_path(path).write_text(
        json.dumps(corpus.header(), sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_slice(path) -> CorpusSlice:
    path = Path(path)
    hpath = header_path(path)
    try:
        header = json.loads(hpath.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DataError(f"missing slice header {hpath}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{hpath}: bad header: {exc}") from None
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(TweetRecord.from_json(json.loads(line)))
            except (ValueError, KeyError, TypeError) as exc:
                raise DataError(f"{path}:{lineno}: bad record: {exc}") from None
    if header.get("count") != len(records):
        raise DataError(f"{path}: header count {header.get('count')} != {len(records)} records")
    period = header.get("period")
    region = header.get("region")
    return CorpusSlice(
        name=header["name"],
        records=records,
        language=header["language"],
        period=Period(date.fromisoformat(period[0]), date.fromisoformat(period[1])) if period else None,
        region=RegionLabel.parse(region) if region else None,
    )


def iter_texts(corpora: Iterable[CorpusSlice]) -> Iterator[str]:
    for c in corpora:
        for rec in c:
            yield rec.text
