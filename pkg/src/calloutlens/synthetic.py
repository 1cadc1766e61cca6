"""Deterministic synthetic corpora for tests, demos and the bundled 10k-record file."""

from __future__ import annotations

import gzip
import io
import json
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import DISINFO_TERMS, STUDY_PERIODS

BUNDLED_CORPUS = Path(__file__).parent / "data" / "synthetic_10k.jsonl.gz"
BUNDLED_SEED = 20190523

_EU_CODES = ["GB", "FR", "ES", "DE", "IE", "IT", "PT", "BE", "NL", "CH"]
_NE_CODES = ["US", "CA", "MX", "AR", "CO", "BR", "SN", "MA", "IN", "AU"]

_LOCATIONS = {
    "E": ["London, UK", "Manchester", "Paris, France", "Lyon", "Madrid, España", "Barcelona",
          "Dublin, Ireland", "Berlin", "Bruxelles", "Lisboa, Portugal", "Cardiff, Wales", "Roma"],
    "NE": ["New York", "Texas, USA", "Los Angeles, CA", "Mexico City", "Buenos Aires",
           "Bogotá, Colombia", "Montréal, Québec", "Dakar, Sénégal", "Florida", "Lima, Perú",
           "Toronto", "Caracas"],
}
_DESCRIPTIONS = {
    "E": ["proud european", "remainer", "football fan", "socialiste", "ciudadano europeo",
          "pint lover", "eurovision", "rugby", "militant", "madrileño"],
    "NE": ["maga patriot", "american", "latino", "god bless", "nfl fan", "conservador",
           "québécois", "chilango", "veteran", "texan"],
    "any": ["journalist", "mum of two", "writer", "teacher", "views my own", "student",
            "periodista", "journaliste", "🔥🔥🔥", "", "", ""],
}
_FILLER = {
    "en": "the a is of to and in that it for on with this they are was about what all".split(),
    "es": "el la de que y en los se del las por un para con una su es lo como más".split(),
    "fr": "le la de et les des en un une est que pour dans qui pas sur au il ce".split(),
}
_TOPICS = {
    ("en", 2019, "E"): "brexit farage bbc electoral europe parliament remain".split(),
    ("en", 2019, "NE"): "trump mueller obama media president russia collusion".split(),
    ("en", 2020, "E"): "tory boris cummings johnson lockdown nhs".split(),
    ("en", 2020, "NE"): "trump president obama democrats election biden".split(),
    ("es", 2019, "E"): "advertencia esbirros terrorista asesina europa".split(),
    ("es", 2019, "NE"): "banco presidente bolsonaro maduro venezuela".split(),
    ("es", 2020, "E"): "sánchez españa gobierno vox iglesias".split(),
    ("es", 2020, "NE"): "trump india fox ccp maduro".split(),
    ("fr", 2019, "E"): "macron monde europe gilets élections".split(),
    ("fr", 2019, "NE"): "mueller trump clinton québec algérie".split(),
    ("fr", 2020, "E"): "macron confinement gouvernement masques raoult".split(),
    ("fr", 2020, "NE"): "eua sedition secession ccp venezuela".split(),
}
_SHARED = {
    ("en", 2019): "vaccine measles immigrant migrant refugee laboratory furniture warehouse".split(),
    ("en", 2020): "vaccine microchip immigrant refugee laboratory wuhan lab biolab".split(),
    ("es", 2019): "vacuna vih inmigrante embajada".split(),
    ("es", 2020): "vacuna microchip inmigrante laboratorio".split(),
    ("fr", 2019): "vaccin vaccination immigré invasion".split(),
    ("fr", 2020): "vaccin puce immigré chloroquine".split(),
}
_COLLOCATIONS = {
    "en": [("bill", "gates"), ("fort", "detrick"), ("boris", "johnson")],
    "es": [("bill", "gates"), ("pedro", "sánchez")],
    "fr": [("bill", "gates"), ("big", "pharma")],
}


def _twitter_time(dt: datetime) -> str:
    return dt.strftime("%a %b %d %H:%M:%S +0000 %Y")


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _random_time(rng) -> tuple[datetime, int]:
    u = rng.random()
    if u < 0.05:
        base = datetime(2019, 8, 1, tzinfo=timezone.utc)  # outside both windows
        year = 0
    else:
        period = STUDY_PERIODS[0] if u < 0.525 else STUDY_PERIODS[1]
        base = datetime(period.start.year, period.start.month, period.start.day, tzinfo=timezone.utc)
        span = (period.end - period.start).days + 1
        base += timedelta(days=int(rng.integers(span)))
        year = period.start.year
    return base + timedelta(seconds=int(rng.integers(86400))), year


def _tweet_text(rng, lang, year, region) -> str:
    year_key = year if year else 2019
    topic = _TOPICS[(lang, year_key, region)]
    other = _TOPICS[(lang, year_key, "NE" if region == "E" else "E")]
    shared = _SHARED[(lang, year_key)]
    words = []
    for _ in range(int(rng.integers(8, 16))):
        u = rng.random()
        if u < 0.25:
            words.append(_pick(rng, topic))
        elif u < 0.30:
            words.append(_pick(rng, other))
        elif u < 0.42:
            words.append(_pick(rng, shared))
        elif u < 0.47:
            words.extend(_pick(rng, _COLLOCATIONS[lang]))
        else:
            words.append(_pick(rng, _FILLER[lang]))
    if rng.random() < 0.88:
        term = _pick(rng, sorted(set(DISINFO_TERMS[lang])))
        words.insert(int(rng.integers(len(words) + 1)), term.title() if rng.random() < 0.2 else term)
    text = " ".join(words)
    if rng.random() < 0.3:
        text += "!" if rng.random() < 0.5 else ","
    if rng.random() < 0.3:
        text += f" https://t.co/{int(rng.integers(10**8)):08x}"
    if rng.random() < 0.25:
        text = f"RT @user{int(rng.integers(500))}: " + text
    return text


def generate_tweets(n: int = 10_000, seed: int = BUNDLED_SEED, geotag_rate: float = 0.35,
                    malformed: int = 5) -> list[str]:
    """Twitter-shaped JSONL lines for ``n`` tweets plus a few malformed / off-language lines."""
    rng = np.random.default_rng(seed)
    lines = []
    langs = ["en"] * 5 + ["es"] * 3 + ["fr"] * 2
    for i in range(n):
        lang = _pick(rng, langs)
        region = "E" if rng.random() < 0.45 else "NE"
        created, year = _random_time(rng)
        desc_words = [_pick(rng, _DESCRIPTIONS[region]) if rng.random() < 0.7
                      else _pick(rng, _DESCRIPTIONS["any"])]
        if rng.random() < 0.5:
            desc_words.append(_pick(rng, _DESCRIPTIONS["any"]))
        loc = _pick(rng, _LOCATIONS[region]) if rng.random() < 0.85 else ""
        obj = {
            "id": str(10**17 + i),
            "created_at": _twitter_time(created),
            "full_text": _tweet_text(rng, lang, year, region),
            "lang": lang,
            "user": {"location": loc, "description": " | ".join(d for d in desc_words if d)},
            "place": None,
        }
        if rng.random() < geotag_rate:
            codes = _EU_CODES if region == "E" else _NE_CODES
            obj["place"] = {"country_code": _pick(rng, codes)}
        lines.append(json.dumps(obj, ensure_ascii=False, sort_keys=True))
    for j in range(malformed):
        pos = int(rng.integers(len(lines) + 1))
        lines.insert(pos, "not json" if j % 2 == 0 else '{"id": "broken", "lang": "en"}')
    for j in range(malformed):
        lines.append(json.dumps({"id": f"de{j}", "created_at": "2019-05-01T00:00:00Z",
                                 "full_text": "Propaganda überall", "lang": "de"}))
    return lines


def write_bundled(path=BUNDLED_CORPUS) -> Path:
    """Regenerate the bundled corpus with a fixed gzip timestamp (byte-stable)."""
    data = ("\n".join(generate_tweets()) + "\n").encode("utf-8")
    buf = io.BytesIO()
    with gzip.GzipFile(filename="", mode="wb", fileobj=buf, mtime=0) as gz:
        gz.write(data)
    Path(path).write_bytes(buf.getvalue())
    return Path(path)


# -- small fixtures ---------------------------------------------------------------

def separable_profiles(n: int = 2000, seed: int = 0):
    """Profiles whose location token alone determines the region."""
    from .corpus import TweetRecord

    rng = np.random.default_rng(seed)
    eu = [f"eucity{i}" for i in range(20)]
    ne = [f"necity{i}" for i in range(20)]
    desc = "journalist writer teacher student news politics football music art love".split()
    recs = []
    for i in range(n):
        is_eu = i % 2 == 0
        recs.append(TweetRecord(
            id=f"u{i}",
            text="",
            lang="en",
            created_at=datetime(2019, 5, 1, tzinfo=timezone.utc),
            user_location=_pick(rng, eu if is_eu else ne),
            user_description=" ".join(_pick(rng, desc) for _ in range(3)),
            country_code="FR" if is_eu else "US",
        ))
    return recs


def two_topic_corpus(n_sentences: int = 5000, length: int = 10, topic_size: int = 20, seed: int = 0):
    """Sentences drawn entirely from one of two disjoint word clusters."""
    rng = np.random.default_rng(seed)
    topics = [[f"a{i}" for i in range(topic_size)], [f"b{i}" for i in range(topic_size)]]
    sents = []
    for s in range(n_sentences):
        words = topics[s % 2]
        sents.append([words[int(j)] for j in rng.integers(topic_size, size=length)])
    return sents, topics


def analogy_corpus(n_pairs: int = 8, n_sentences: int = 12000, seed: int = 0):
    """Templated sentences planting a country/capital relation over ``n_pairs`` pairs.

    Each pair shares its own topic words; countries co-occur with nation-role
    words and capitals with city-role words, so ``capital_i - country_i +
    country_j`` should land on ``capital_j``.
    """
    rng = np.random.default_rng(seed)
    countries = [f"country{i}" for i in range(n_pairs)]
    capitals = [f"capital{i}" for i in range(n_pairs)]
    topic = [[f"t{i}x{k}" for k in range(4)] for i in range(n_pairs)]
    nation_role = "nation border flag state republic territory".split()
    city_role = "city mayor downtown metro district suburb".split()
    filler = "the of and a in is".split()
    sents = []
    for s in range(n_sentences):
        i = int(rng.integers(n_pairs))
        kind = s % 3
        if kind == 0:
            head, roles = countries[i], nation_role
        elif kind == 1:
            head, roles = capitals[i], city_role
        else:
            sents.append([capitals[i], "is", "the", "capital", "of", countries[i]])
            continue
        body = [_pick(rng, topic[i]) for _ in range(2)] + [_pick(rng, roles) for _ in range(2)]
        body += [_pick(rng, filler) for _ in range(2)]
        order = rng.permutation(len(body))
        words = [body[j] for j in order]
        words.insert(int(rng.integers(len(words) + 1)), head)
        sents.append(words)
    pairs = list(zip(countries, capitals))
    return sents, pairs
