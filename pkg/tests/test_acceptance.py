"""One test per acceptance criterion, each under its runtime budget (seconds)."""

import itertools
import os
import subprocess
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest

from calloutlens import embed, nbclassifier as nb
from calloutlens.corpus import STUDY_PERIODS, CorpusSlice, TweetRecord, load_slice, save_slice
from calloutlens.geolabel import LabeledExample, RegionLabel, SplitSpec, stratified_split
from calloutlens.lexspec import SpecificityQuery, hypergeom_tail, specificity_from_counts
from calloutlens.phrasing import PhraseModel, apply_phrases, count_phrases, phrase_score, phrases_from_counts
from calloutlens.query import analogy, unit_rows
from calloutlens.synthetic import analogy_corpus, separable_profiles, two_topic_corpus

from oracles import exact_tails, finite_difference_grads

E, NE = RegionLabel.EUROPEAN, RegionLabel.NON_EUROPEAN
ROOT = Path(__file__).resolve().parents[1]


def report(number, ok, detail):
    print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")


@pytest.mark.acceptance(1, "all-European baseline metrics on balanced gold", budget=1)
@pytest.mark.parametrize("n", [2, 10, 1000])
def test_01_naive_baseline_metrics(n):
    gold = [E, NE] * (n // 2)
    m = nb.evaluate(nb.naive_baseline(len(gold)), gold)
    got = (m.macro_precision, m.macro_recall, m.accuracy, m.macro_f1)
    ok = all(abs(g - w) <= 0.005 for g, w in zip(got, (0.25, 0.50, 0.50, 0.33)))
    report(1, ok, f"n={n} prec/rec/acc/f1={got}")
    assert ok


@pytest.mark.acceptance(2, "hypergeometric tail vs exact enumeration, T <= 60", budget=60)
def test_02_specificity_oracle_grid():
    worst, checked, monotone = 0.0, 0, True
    for T in range(61):
        for F in range(T + 1):
            for t in range(T + 1):
                exact = exact_tails(T, F, t)
                prev = -1.0
                for f, want in enumerate(exact):
                    worst = max(worst, abs(hypergeom_tail(SpecificityQuery(T, F, t, f)) - want))
                    s = specificity_from_counts(T, F, t, f)
                    monotone &= s >= prev
                    prev = s
                    checked += 1
    ok = worst <= 1e-9 and monotone
    report(2, ok, f"{checked} queries, max abs error {worst:.3e}, monotone={monotone}")
    assert worst <= 1e-9
    assert monotone


def _doc(tok):
    return nb.FeatureDoc(tok, (tok,))


@pytest.mark.acceptance(3, "Naive Bayes toy posterior and separable-corpus accuracy", budget=10)
def test_03_naive_bayes():
    toy = nb.train_nb([(_doc("london"), E), (_doc("paris"), E), (_doc("texas"), NE), (_doc("usa"), NE)])
    label, post = nb.predict(toy, _doc("usa"))
    assert label is NE
    assert abs(post - 2 / 3) <= 1e-9

    examples = nb.labeled_examples(separable_profiles(2000, seed=0))
    assert len(examples) == 2000
    train, _, test = stratified_split(examples, SplitSpec((0.8, 0.1, 0.1), seed=0))
    model = nb.train_on_examples(train)
    gold = [ex.label for ex in test]
    acc = nb.evaluate([nb.predict(model, nb.FeatureDoc(ex.id, ex.tokens))[0] for ex in test], gold).accuracy
    base = nb.evaluate(nb.naive_baseline(len(gold)), gold).accuracy
    ok = acc >= 0.95 and acc > base
    report(3, ok, f"posterior {post:.12f}, test accuracy {acc:.4f} vs baseline {base:.4f} on {len(gold)}")
    assert acc >= 0.95
    assert acc > base == 0.5


@pytest.mark.acceptance(4, "stratified split over 100 random labeled sets", budget=5)
def test_04_stratified_split():
    rng = np.random.default_rng(2024)
    for trial in range(100):
        n_e, n_ne = (int(x) for x in rng.integers(1, 300, size=2))
        labels = [E] * n_e + [NE] * n_ne
        rng.shuffle(labels)
        ex = [LabeledExample(f"r{trial}-{i}", (), lab) for i, lab in enumerate(labels)]
        raw = rng.dirichlet([4, 1, 1])
        ratios = (float(raw[0]), float(raw[1]), 1.0 - float(raw[0]) - float(raw[1]))
        seed = int(rng.integers(2**31))
        parts = stratified_split(ex, SplitSpec(ratios, seed))
        ids = [x.id for p in parts for x in p]
        assert len(ids) == len(set(ids)), "parts overlap"
        assert set(ids) == {x.id for x in ex}, "parts not exhaustive"
        assert parts == stratified_split(ex, SplitSpec(ratios, seed)), "not seed-deterministic"
        for part, r in zip(parts, ratios):
            for cls, n in ((E, n_e), (NE, n_ne)):
                assert abs(sum(x.label is cls for x in part) - r * n) <= 1 + 1e-9
    report(4, True, "100 sets disjoint, exhaustive, deterministic, within +-1 per class")


@pytest.mark.acceptance(5, "CBOW analytic vs finite-difference gradients", budget=10)
def test_05_cbow_gradient_check():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        v, dim = int(rng.integers(6, 15)), int(rng.integers(2, 9))
        n_ctx, n_neg = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        win, wout = rng.normal(0, 0.5, (v, dim)), rng.normal(0, 0.5, (v, dim))
        # output rows must be distinct so a single update equals one gradient step
        outs = rng.choice(v, size=n_neg + 1, replace=False)
        target, negs = int(outs[0]), outs[1:]
        context = rng.integers(v, size=n_ctx)
        fd = finite_difference_grads(lambda: embed.cbow_loss(win, wout, context, target, negs),
                                     [win, wout], eps=1e-4)
        model = embed.EmbeddingModel([(f"w{i}", 1) for i in range(v)], win.copy(), wout.copy())
        lr = 1e-3
        embed.cbow_step(model, context, target, negs, lr)
        an = [(win - model.input_vectors) / lr, (wout - model.output_vectors) / lr]
        scale = max(np.max(np.abs(g)) for g in fd)
        err = max(np.max(np.abs(a - g)) for a, g in zip(an, fd)) / scale
        worst = max(worst, err)
    ok = worst <= 1e-4
    report(5, ok, f"max relative error {worst:.3e} over 100 configurations")
    assert ok


def _mean_cos(unit, rows_a, rows_b, same):
    sims = unit[rows_a] @ unit[rows_b].T
    if same:
        n = len(rows_a)
        return (sims.sum() - np.trace(sims)) / (n * (n - 1))
    return sims.mean()


@pytest.mark.acceptance(6, "two-topic embedding separation and falling loss", budget=120)
def test_06_embedding_sanity():
    sents, topics = two_topic_corpus(5000, length=10)
    cfg = embed.TrainConfig(dim=50, window=5, min_count=1, negatives=5, epochs=5,
                            subsample_t=1e-3, seed=1, threads=1)
    m = embed.train_cbow(sents, cfg)
    unit = unit_rows(m.input_vectors)
    a, b = ([m.index[t] for t in topic] for topic in topics)
    intra = (_mean_cos(unit, a, a, True) + _mean_cos(unit, b, b, True)) / 2
    inter = _mean_cos(unit, a, b, False)
    first, last = m.epoch_losses[0], m.epoch_losses[-1]
    ok = intra - inter >= 0.2 and last < first
    report(6, ok, f"{sum(map(len, sents))} tokens, intra {intra:.3f} inter {inter:.3f}, "
                  f"loss epoch1 {first:.4f} epoch5 {last:.4f}")
    assert intra - inter >= 0.2
    assert last < first


@pytest.mark.acceptance(7, "3CosAdd recovers planted pair relations", budget=120)
def test_07_analogy_recovery():
    sents, pairs = analogy_corpus(n_pairs=8, n_sentences=12000)
    cfg = embed.TrainConfig(dim=50, window=5, min_count=1, negatives=5, epochs=5,
                            subsample_t=1e-3, seed=1, threads=1)
    m = embed.train_cbow(sents, cfg)
    hits = total = 0
    for (country_i, capital_i), (country_j, capital_j) in itertools.permutations(pairs, 2):
        # capital_i - country_i + country_j -> capital_j
        got = analogy(m, country_j, capital_i, country_i, k=1).tokens[0]
        hits += got == capital_j
        total += 1
    rate = hits / total
    ok = rate >= 0.8
    report(7, ok, f"top-1 {hits}/{total} = {rate:.3f}")
    assert ok


@pytest.mark.acceptance(8, "phrase scoring, planted collocation, greedy merge", budget=10)
def test_08_phrase_detection():
    hand = [["a", "b"]] * 50 + [["a"]] * 10 + [["b"]] * 30
    hand += [[f"w{i}" for i in range(j, j + 10)] for j in range(0, 10_000 - 140, 10)]
    model = phrases_from_counts(count_phrases(hand), delta=5, threshold=10, min_count=5)
    assert model.phrases[("a", "b")] == 93.75

    rng = np.random.default_rng(8)
    filler = [f"f{i}" for i in range(150)]
    corpus = []
    for s in range(3000):
        words = [filler[int(j)] for j in rng.integers(len(filler), size=8)]
        if s % 5 == 0:
            k = int(rng.integers(len(words) + 1))
            words[k:k] = ["new", "york"]
        corpus.append(words)
    counts = count_phrases(corpus)
    scores = {p: phrase_score(n, counts.unigrams[p[0]], counts.unigrams[p[1]], counts.total, 5.0)
              for p, n in counts.bigrams.items()}
    planted = scores.pop(("new", "york"))
    runner_up = max(scores.values())
    assert planted > runner_up

    greedy = apply_phrases(["a", "b", "c"], PhraseModel({("a", "b"): 20.0, ("b", "c"): 30.0}))
    assert greedy == ["a_b", "c"]
    report(8, True, f"hand score 93.75, planted {planted:.2f} > best other {runner_up:.2f}, greedy {greedy}")


@pytest.mark.acceptance(9, "embedding, classifier and slice file round-trips", budget=10)
def test_09_round_trips(tmp_path):
    rng = np.random.default_rng(9)
    vocab = [(f"tok{i}", 100 - i) for i in range(50)]
    em = embed.EmbeddingModel(vocab, rng.normal(0, 1, (50, 32)))
    embed.save_model(em, tmp_path / "m.vec")
    back = embed.load_model(tmp_path / "m.vec")
    emb_err = float(np.max(np.abs(back.input_vectors - em.input_vectors)))
    assert back.tokens == em.tokens
    assert emb_err <= 5e-7

    recs = separable_profiles(400, seed=9)
    model = nb.train_on_examples(nb.labeled_examples(recs))
    nb.save_model(model, tmp_path / "nb.tsv")
    loaded = nb.load_model(tmp_path / "nb.tsv")
    docs = [nb.build_features(r) for r in recs] + [nb.FeatureDoc("x", ("unseen", "tokens"))]
    assert all(nb.predict(loaded, d) == nb.predict(model, d) for d in docs)

    recs = [TweetRecord(f"{i}", f"tweet {i} ünïcode\t\"quoted\"", "en",
                        datetime(2019, 5, 1 + i % 28, i % 24, tzinfo=timezone.utc),
                        user_location="Lyon", user_description="a | b",
                        country_code=["FR", "US", None][i % 3],
                        region=[E, NE, None][i % 3]) for i in range(300)]
    sl = CorpusSlice("en-2019", recs, "en", STUDY_PERIODS[0])
    save_slice(sl, tmp_path / "s.slice")
    assert load_slice(tmp_path / "s.slice") == sl
    report(9, True, f"embedding max error {emb_err:.1e}, NB predictions identical, slice identical")


def _run_pipeline(workdir: Path) -> dict:
    env = dict(os.environ, CALLOUTLENS=f"{sys.executable} -m calloutlens")
    proc = subprocess.run(["bash", str(ROOT / "scripts" / "pipeline.sh"), "out"], cwd=workdir, env=env,
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    out = workdir / "out"
    return {str(p.relative_to(out)): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()}


@pytest.mark.acceptance(10, "end-to-end CLI pipeline is reproducible byte-for-byte", budget=300)
def test_10_end_to_end(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "b").mkdir()
    first = _run_pipeline(tmp_path / "a")
    second = _run_pipeline(tmp_path / "b")
    for name in ("report/specificity.tsv", "report/specificity.png", "report/overlap.png",
                 "report/neighbors.tsv", "models/cbow-en-2019.vec", "tables/eval-en-2019.tsv"):
        assert first.get(name), f"missing {name}"
    assert first.keys() == second.keys()
    differing = [k for k in first if first[k] != second[k]]
    report(10, not differing, f"{len(first)} files, differing: {differing or 'none'}")
    assert not differing
