"""Command-line entry point.

Exit status: 0 on success, 1 on usage errors, 2 on data errors. Diagnostics
go to stderr; tables go to stdout unless ``--out`` names a file.

A ``--config`` file of ``key = value`` lines supplies defaults for the
chosen subcommand's options; explicit flags win, unknown keys are rejected.
"""

from __future__ import annotations

import argparse
import glob
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from . import corpus as corp
from . import embed, lexspec, nbclassifier as nb, phrasing, query
from .errors import DataError
from .geolabel import LabeledExample, RegionLabel, SplitSpec, assign_region_label, stratified_split

logger = logging.getLogger("calloutlens")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


# -- helpers ------------------------------------------------------------------------

def _csv(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)


def _lemmas(args):
    return embed.load_lemmas(args.lemmas) if getattr(args, "lemmas", None) else None


def _region(text):
    return RegionLabel.parse(text) if text else None


def _slice_sentences(sl, lemmas=None, phrases=None):
    seqs = [embed.preprocess_text(r.text, lemmas) for r in sl]
    if phrases is not None:
        seqs = [phrasing.apply_phrases(s, phrases) for s in seqs]
    return seqs


def _out_path(template: str, lang: str, period: Optional[str], multi_lang: bool) -> Path:
    if "{" in template:
        return Path(template.format(lang=lang, period=period or "all"))
    path = Path(template)
    if not multi_lang and period is None:
        return path
    tag = lang + (f"-{period}" if period else "")
    return path.with_name(f"{path.stem}.{tag}{path.suffix}")


# -- subcommands -------------------------------------------------------------------

def cmd_ingest(args):
    paths = []
    for pattern in args.input:
        matched = sorted(glob.glob(pattern))
        if not matched:
            raise DataError(f"no input files match {pattern!r}")
        paths.extend(matched)
    langs = _csv(args.langs)
    merged, stats = corp.ingest_many(paths, langs, args.threads)
    logger.info("read %d lines: kept %d, malformed %d, other language %d",
                stats.lines_read, stats.kept, stats.skipped_malformed, stats.skipped_language)
    per_lang = corp.split_by_language(merged)
    periods = [corp.Period.parse(p) for p in _csv(args.periods)] if args.periods else None
    print("path\tname\tlanguage\tperiod\trecords")
    for lang in langs:
        sl = per_lang.get(lang, corp.CorpusSlice(lang, [], lang))
        if args.filter:
            terms = corp.TermList.from_file(lang, args.terms) if args.terms else corp.TermList.default(lang)
            before = len(sl)
            sl = corp.filter_disinfo_terms(sl, terms)
            logger.info("%s: term filter kept %d of %d", lang, len(sl), before)
        if periods:
            parts, dropped = corp.partition_corpus(sl, periods)
            logger.info("%s: %d records outside all periods dropped", lang, dropped)
        else:
            parts = [replace(sl, name=lang)]
        for part in parts:
            label = part.period.label if part.period else None
            path = _out_path(args.out, lang, label, len(langs) > 1)
            corp.save_slice(part, path)
            print(f"{path}\t{part.name}\t{lang}\t{label or 'all'}\t{len(part)}")


def cmd_label(args):
    sl = corp.load_slice(args.slice)
    rows = []
    for rec in sl:
        lab = assign_region_label(rec)
        if lab is not None:
            rows.append((rec.id, lab))
    nb.write_label_tsv(rows, args.out)
    logger.info("labeled %d of %d records from country codes", len(rows), len(sl))


def cmd_split(args):
    sl = corp.load_slice(args.slice)
    examples = nb.labeled_examples(sl)
    ratios = tuple(float(x) for x in _csv(args.ratios))
    parts = stratified_split(examples, SplitSpec(ratios, args.seed))
    for name, part in zip(("train", "val", "test"), parts):
        nb.write_label_tsv(((ex.id, ex.label) for ex in part), f"{args.out_prefix}.{name}.tsv")
        logger.info("%s: %d examples", name, len(part))


def _training_examples(sl, labels_path=None):
    if labels_path is None:
        return nb.labeled_examples(sl)
    labels, stats = nb.read_label_tsv(labels_path)
    if stats.malformed:
        logger.warning("%s: %d malformed rows skipped", labels_path, stats.malformed)
    return [LabeledExample(r.id, nb.build_features(r).tokens, labels[r.id]) for r in sl if r.id in labels]


def cmd_train_clf(args):
    sl = corp.load_slice(args.slice)
    examples = _training_examples(sl, args.labels)
    model = nb.train_on_examples(examples, args.alpha)
    nb.save_model(model, args.out)
    logger.info("trained on %d examples, vocabulary %d", len(examples), len(model.vocabulary))


def cmd_classify(args):
    sl = corp.load_slice(args.slice)
    model = nb.load_model(args.model)
    rows = [(rid, lab) for rid, lab, _ in nb.classify_slice(model, sl, only_untagged=not args.all)]
    nb.write_label_tsv(rows, args.out)
    logger.info("classified %d records", len(rows))


def cmd_eval_clf(args):
    train_sl = corp.load_slice(args.train_slice)
    same = Path(args.train_slice).resolve() == Path(args.test_slice).resolve()
    if same:
        test_name = train_sl.name
        examples = nb.labeled_examples(train_sl)
        train, _, test = stratified_split(examples, SplitSpec(seed=args.seed))
    else:
        test_sl = corp.load_slice(args.test_slice)
        test_name = test_sl.name
        train = nb.labeled_examples(train_sl)
        test = nb.labeled_examples(test_sl)
    if not test:
        raise DataError("test slice has no geotagged records")
    model = nb.train_on_examples(train, args.alpha)
    gold = [ex.label for ex in test]
    preds = [nb.predict(model, nb.FeatureDoc(ex.id, ex.tokens))[0] for ex in test]
    lines = ["trained\ttested\tclassifier\tprec\trec\tacc\tf1\tn_test"]
    for name, p in (("naive_bayes", preds), ("naive_baseline", nb.naive_baseline(len(gold)))):
        m = nb.evaluate(p, gold)
        lines.append("\t".join([train_sl.name, test_name, name, *m.row(), str(len(gold))]))
    _emit("\n".join(lines) + "\n", args.out)


def cmd_import_labels(args):
    sl = corp.load_slice(args.slice)
    labeled, stats = nb.import_labels(sl, *args.labels)
    corp.save_slice(labeled, args.out)
    n = sum(1 for r in labeled if r.region is not None)
    logger.info("%d label rows: %d matched, %d unknown ids, %d malformed; %d of %d records labeled",
                stats.rows, stats.matched, stats.unmatched, stats.malformed, n, len(labeled))


def cmd_specificity(args):
    lemmas = _lemmas(args)
    ref_sl = corp.load_slice(args.ref)
    if args.sub:
        sub_sl = corp.load_slice(args.sub)
    elif args.sub_region:
        sub_sl = corp.select_region(ref_sl, RegionLabel.parse(args.sub_region))
        if not len(sub_sl):
            raise DataError(f"{args.ref}: no records labeled {args.sub_region}; run import-labels first")
    else:
        raise UsageError("specificity: one of --sub or --sub-region is required")
    ref = lexspec.FreqTable.from_sequences(_slice_sentences(ref_sl, lemmas))
    sub = lexspec.FreqTable.from_sequences(_slice_sentences(sub_sl, lemmas))
    wordlist = lexspec.read_wordlist(args.wordlist) if args.wordlist else None
    rows = lexspec.top_terms(ref, sub, args.top, wordlist)
    _emit(lexspec.format_table(rows), args.out)


def cmd_build_phrases(args):
    sl = corp.load_slice(args.slice)
    model = phrasing.learn_phrases(_slice_sentences(sl, _lemmas(args)), args.delta,
                                   args.threshold, args.min_count)
    phrasing.save_phrases(model, args.out)
    logger.info("%d phrases above threshold %g", len(model.phrases), args.threshold)


def cmd_apply_phrases(args):
    sl = corp.load_slice(args.slice)
    model = phrasing.load_phrases(args.phrases)
    seqs = _slice_sentences(sl, _lemmas(args), model)
    _emit("".join(" ".join(s) + "\n" for s in seqs), args.out)


def cmd_train_embeddings(args):
    sl = corp.load_slice(args.slice)
    region = _region(args.region)
    if region is not None:
        sl = corp.select_region(sl, region)
    phrases = phrasing.load_phrases(args.phrases) if args.phrases else None
    config = embed.TrainConfig(
        dim=args.dim, window=args.window, min_count=args.min_count, negatives=args.negatives,
        epochs=args.epochs, initial_lr=args.lr, subsample_t=args.subsample, seed=args.seed,
        threads=args.threads)
    model = embed.train_cbow(_slice_sentences(sl, _lemmas(args), phrases), config)
    embed.save_model(model, args.out)
    logger.info("vocabulary %d, epoch losses %s", len(model),
                " ".join(f"{x:.4f}" for x in model.epoch_losses))


def cmd_neighbors(args):
    model = embed.load_model(args.model)
    _emit(query.nearest_neighbors(model, args.query, args.top).to_tsv(), args.out)


def cmd_analogy(args):
    model = embed.load_model(args.model)
    _emit(query.analogy(model, args.a, args.b, args.c, args.top).to_tsv(), args.out)


def cmd_compare(args):
    ma, mb = embed.load_model(args.model_a), embed.load_model(args.model_b)
    na, nb_, jac = query.compare_neighborhoods(ma, mb, args.query, args.top)
    lines = ["rank\ttoken_a\tcosine_a\ttoken_b\tcosine_b"]
    for i in range(max(len(na.entries), len(nb_.entries))):
        a = na.entries[i] if i < len(na.entries) else ("", float("nan"))
        b = nb_.entries[i] if i < len(nb_.entries) else ("", float("nan"))
        lines.append(f"{i + 1}\t{a[0]}\t{a[1]:.6f}\t{b[0]}\t{b[1]:.6f}")
    lines.append(f"# jaccard\t{jac:.6f}")
    _emit("\n".join(lines) + "\n", args.out)


def cmd_report(args):
    from . import report

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    slices = [corp.load_slice(p) for p in args.slice]
    wordlist = lexspec.read_wordlist(args.wordlist) if args.wordlist else None
    tops = report.regional_specificity(slices, args.top, wordlist, _lemmas(args))
    (out / "specificity.tsv").write_text(report.specificity_tsv(tops), encoding="utf-8")
    report.plot_specificity(tops, out / "specificity.png")
    written = ["specificity.tsv", "specificity.png"]
    if args.model and args.query:
        models = {}
        for spec in args.model:
            name, _, path = spec.partition("=")
            if not path:
                raise UsageError(f"report: --model expects NAME=PATH, got {spec!r}")
            models[name] = embed.load_model(path)
        lists, overlaps = report.neighbor_rows(models, args.query, args.neighbors)
        (out / "neighbors.tsv").write_text(report.neighbors_tsv(lists), encoding="utf-8")
        (out / "overlap.tsv").write_text(report.overlap_tsv(overlaps), encoding="utf-8")
        report.plot_overlap(list(models), args.query, overlaps, out / "overlap.png")
        written += ["neighbors.tsv", "overlap.tsv", "overlap.png"]
    for name in written:
        print(out / name)


# -- parser ---------------------------------------------------------------------------

# (dest, kind) for path validation before any work: "in" must exist, "out" needs a parent dir
_PATHS = {
    "slice": "in", "ref": "in", "sub": "in", "model": "in", "labels": "in",
    "model_a": "in", "model_b": "in", "train_slice": "in", "test_slice": "in",
    "wordlist": "in", "lemmas": "in", "phrases": "in", "terms": "in",
    "out": "out", "out_prefix": "out",
}
_REQUIRED: dict[str, tuple] = {}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
    common.add_argument("--config", help="file of 'key = value' defaults")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="calloutlens", parents=[common],
                     description="Region labeling and lexical / embedding analysis of tweet corpora.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)

    def add(name, func, help_, required=()):
        p = sub.add_parser(name, help=help_, parents=[common], description=help_)
        p.set_defaults(func=func)
        _REQUIRED[name] = required
        return p

    p = add("ingest", cmd_ingest, "read tweet JSONL into per-language slice files", ("input", "langs", "out"))
    p.add_argument("--input", action="append", help="input file or glob (repeatable)")
    p.add_argument("--langs", help="comma-separated language allowlist, e.g. en,es,fr")
    p.add_argument("--out", help="slice path; {lang} and {period} placeholders allowed")
    p.add_argument("--filter", action="store_true", help="keep only tweets matching the term list")
    p.add_argument("--terms", help="term list file (one per line) instead of the built-in list")
    p.add_argument("--periods", help="comma-separated YYYY-MM-DD:YYYY-MM-DD ranges")

    p = add("label", cmd_label, "write gold region labels from country codes", ("slice", "out"))
    p.add_argument("--slice")
    p.add_argument("--out")

    p = add("split", cmd_split, "stratified train/val/test split of geotagged records", ("slice", "out_prefix"))
    p.add_argument("--slice")
    p.add_argument("--out-prefix")
    p.add_argument("--ratios", default="0.8,0.1,0.1")
    p.add_argument("--seed", type=int, default=0)

    p = add("train-clf", cmd_train_clf, "train the Naive Bayes region classifier", ("slice", "out"))
    p.add_argument("--slice")
    p.add_argument("--labels", help="id<TAB>label file restricting / supplying training labels")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out")

    p = add("classify", cmd_classify, "predict region labels for records", ("slice", "model", "out"))
    p.add_argument("--slice")
    p.add_argument("--model")
    p.add_argument("--out")
    p.add_argument("--all", action="store_true", help="also classify geotagged records")

    p = add("eval-clf", cmd_eval_clf, "evaluate the classifier across slices", ("train_slice", "test_slice"))
    p.add_argument("--train-slice")
    p.add_argument("--test-slice")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")

    p = add("import-labels", cmd_import_labels, "attach externally produced labels to a slice",
            ("slice", "labels", "out"))
    p.add_argument("--slice")
    p.add_argument("--labels", nargs="+")
    p.add_argument("--out")

    p = add("specificity", cmd_specificity, "top terms by lexical specificity", ("ref",))
    p.add_argument("--ref")
    p.add_argument("--sub")
    p.add_argument("--sub-region", help="use the ref slice's E or NE records as subcorpus")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--wordlist")
    p.add_argument("--lemmas")
    p.add_argument("--out")

    p = add("build-phrases", cmd_build_phrases, "learn bigram phrases", ("slice", "out"))
    p.add_argument("--slice")
    p.add_argument("--delta", type=float, default=5.0)
    p.add_argument("--threshold", type=float, default=10.0)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--lemmas")
    p.add_argument("--out")

    p = add("apply-phrases", cmd_apply_phrases, "write phrase-merged token lines", ("slice", "phrases"))
    p.add_argument("--slice")
    p.add_argument("--phrases")
    p.add_argument("--lemmas")
    p.add_argument("--out")

    p = add("train-embeddings", cmd_train_embeddings, "train CBOW embeddings on a slice", ("slice", "out"))
    d = embed.TrainConfig()
    p.add_argument("--slice")
    p.add_argument("--region", help="restrict to E or NE records")
    p.add_argument("--phrases")
    p.add_argument("--lemmas")
    p.add_argument("--dim", type=int, default=d.dim)
    p.add_argument("--window", type=int, default=d.window)
    p.add_argument("--min-count", type=int, default=d.min_count)
    p.add_argument("--negatives", type=int, default=d.negatives)
    p.add_argument("--epochs", type=int, default=d.epochs)
    p.add_argument("--lr", type=float, default=d.initial_lr)
    p.add_argument("--subsample", type=float, default=d.subsample_t)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--out")

    p = add("neighbors", cmd_neighbors, "nearest neighbours of a token", ("model", "query"))
    p.add_argument("--model")
    p.add_argument("--query")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out")

    p = add("analogy", cmd_analogy, "3CosAdd analogy: rank tokens near b + a - c", ("model", "a", "b", "c"))
    p.add_argument("--model")
    p.add_argument("--a")
    p.add_argument("--b")
    p.add_argument("--c")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out")

    p = add("compare", cmd_compare, "compare a token's neighbourhood in two models",
            ("model_a", "model_b", "query"))
    p.add_argument("--model-a")
    p.add_argument("--model-b")
    p.add_argument("--query")
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out")

    p = add("report", cmd_report, "regional/temporal specificity tables, neighbour overlaps and figures",
            ("slice", "out_dir"))
    p.add_argument("--slice", action="append", help="labeled slice (repeatable)")
    p.add_argument("--top", type=int, default=5)
    p.add_argument("--wordlist")
    p.add_argument("--lemmas")
    p.add_argument("--model", action="append", help="NAME=PATH embedding model (repeatable)")
    p.add_argument("--query", action="append", help="query token for neighbour tables (repeatable)")
    p.add_argument("--neighbors", type=int, default=10)
    p.add_argument("--out-dir")
    return parser


def _subparser(parser, name):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices.get(name)
    return None


def _apply_config(parser, sub, path):
    dests = {a.dest: a for a in sub._actions if a.dest not in ("help", "config", "func")}
    defaults = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in dests:
            raise UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        action = dests[key]
        value = value.strip()
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction) or action.nargs == "+":
            defaults[key] = _csv(value)
        else:
            defaults[key] = action.type(value) if action.type else value
    sub.set_defaults(**defaults)


def _validate_paths(args):
    for dest, kind in _PATHS.items():
        value = getattr(args, dest, None)
        if not value or (dest == "model" and isinstance(value, list)):
            continue
        for v in value if isinstance(value, list) else [value]:
            p = Path(v)
            if kind == "in" and not p.is_file():
                raise DataError(f"--{dest.replace('_', '-')}: no such file: {v}")
            if kind == "out" and not p.parent.is_dir():
                raise DataError(f"--{dest.replace('_', '-')}: directory does not exist: {p.parent}")
    for v in getattr(args, "model", None) or []:
        if isinstance(v, str) and "=" in v and not Path(v.partition("=")[2]).is_file():
            raise DataError(f"--model: no such file: {v.partition('=')[2]}")


def run(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            parser.print_help(sys.stderr)
            return 1
        if args.config:
            sub = _subparser(parser, args.command)
            if not Path(args.config).is_file():
                raise UsageError(f"--config: no such file: {args.config}")
            _apply_config(parser, sub, args.config)
            args = parser.parse_args(argv)
        missing = [d for d in _REQUIRED[args.command] if getattr(args, d, None) in (None, [])]
        if missing:
            raise UsageError(f"{args.command}: missing required option(s): "
                             + ", ".join("--" + m.replace("_", "-") for m in missing))
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except SystemExit as exc:  # --help
        return 0 if not exc.code else 1

    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr,
                        force=True)
    try:
        _validate_paths(args)
        args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    except (DataError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
