import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from calloutlens.errors import DataError
from calloutlens.phrasing import (
    PhraseCounts, PhraseModel, apply_phrases, count_phrases, learn_phrases, load_phrases,
    phrase_score, phrases_from_counts, save_phrases,
)


def hand_fixture():
    """50 x "a b", 10 more a, 30 more b, filler up to 10,000 tokens."""
    sents = [["a", "b"]] * 50 + [["a"]] * 10 + [["b"]] * 30
    used = 140
    filler = [[f"w{i}" for i in range(j, j + 10)] for j in range(0, 10_000 - used, 10)]
    return sents + filler


def planted_corpus(n=3000, seed=0):
    """Random filler with "new york" inserted into every fifth sentence."""
    rng = np.random.default_rng(seed)
    vocab = [f"f{i}" for i in range(150)]
    sents = []
    for s in range(n):
        words = [vocab[int(j)] for j in rng.integers(len(vocab), size=8)]
        if s % 5 == 0:
            k = int(rng.integers(len(words) + 1))
            words[k:k] = ["new", "york"]
        sents.append(words)
    return sents


class TestScore:
    def test_hand_arithmetic(self):
        assert phrase_score(50, 60, 80, 10_000, 5) == 93.75

    def test_hand_fixture_counts(self):
        counts = count_phrases(hand_fixture())
        assert counts.total == 10_000
        assert (counts.bigrams[("a", "b")], counts.unigrams["a"], counts.unigrams["b"]) == (50, 60, 80)
        model = phrases_from_counts(counts)
        assert model.phrases[("a", "b")] == 93.75

    def test_delta_discount(self):
        counts = PhraseCounts()
        for _ in range(5):
            counts.add(["x", "y"])
        assert phrase_score(5, 5, 5, 10, 5) == 0
        assert ("x", "y") not in phrases_from_counts(counts, min_count=1)

    def test_min_count_floor(self):
        counts = count_phrases([["x", "y"]] + [["z"]] * 1000)
        assert ("x", "y") not in phrases_from_counts(counts, delta=0, min_count=5)
        assert ("x", "y") in phrases_from_counts(counts, delta=0, min_count=1)

    def test_all_kept_meet_threshold(self):
        model = learn_phrases(planted_corpus(), threshold=2.0, min_count=2)
        assert all(s >= 2.0 for s in model.phrases.values())

    def test_errors(self):
        with pytest.raises(DataError):
            learn_phrases([["a"]], threshold=0)
        with pytest.raises(DataError):
            learn_phrases([[]])

    def test_counts_merge_like_whole(self):
        corpus = planted_corpus(200)
        whole = count_phrases(corpus)
        parts = count_phrases(corpus[:70]) + count_phrases(corpus[70:])
        assert parts.unigrams == whole.unigrams and parts.bigrams == whole.bigrams

    def test_planted_outranks(self):
        counts = count_phrases(planted_corpus())
        scores = {pair: phrase_score(n, counts.unigrams[pair[0]], counts.unigrams[pair[1]],
                                     counts.total, 5.0)
                  for pair, n in counts.bigrams.items()}
        planted = scores.pop(("new", "york"))
        assert planted > max(scores.values())
        assert set(learn_phrases(planted_corpus()).phrases) == {("new", "york")}


class TestApply:
    def test_single_merge(self):
        m = PhraseModel({("fake", "news"): 50.0})
        assert apply_phrases(["fake", "news", "today"], m) == ["fake_news", "today"]

    def test_greedy_non_overlap(self):
        m = PhraseModel({("a", "b"): 20.0, ("b", "c"): 30.0})
        assert apply_phrases(["a", "b", "c"], m) == ["a_b", "c"]

    def test_empty_model(self):
        assert apply_phrases(["x", "y"], PhraseModel()) == ["x", "y"]

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from("abcd"), max_size=20),
           st.sets(st.tuples(st.sampled_from("abcd"), st.sampled_from("abcd")), max_size=6))
    def test_length_and_recovery(self, tokens, pairs):
        out = apply_phrases(tokens, PhraseModel({p: 11.0 for p in pairs}))
        merges = sum(1 for t in out if "_" in t)
        assert len(out) == len(tokens) - merges
        assert [piece for t in out for piece in t.split("_")] == tokens


class TestFiles:
    def test_round_trip(self, tmp_path):
        m = learn_phrases(hand_fixture())
        save_phrases(m, tmp_path / "p.tsv")
        back = load_phrases(tmp_path / "p.tsv")
        assert back.phrases == m.phrases
        assert (tmp_path / "p.tsv").read_text() == "a\tb\t93.75\n"

    def test_malformed(self, tmp_path):
        p = tmp_path / "p.tsv"
        p.write_text("a\tb\t1.0\nonly two\tcols\n")
        with pytest.raises(DataError, match=":2:"):
            load_phrases(p)
