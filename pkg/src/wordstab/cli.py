"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data error. ``WORDSTAB_OUT_DIR``
sets the default output directory; an explicit ``--out`` wins.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .embedding_io import Vocabulary, common_vocabulary, load_embeddings, read_word_list, save_word2vec_text
from .errors import DataError
from .knn import batch_top_k, write_neighbors_tsv
from .manifest import build_manifest, write_manifest
from .pipeline import PipelineConfig, read_averages, run_pipeline, write_averages, write_report
from .plot import box_chart, line_chart, read_bucket_csv, read_grouped_tsv
from .regression import (
    DEFAULT_LAMBDA,
    RidgeModel,
    bootstrap_fit,
    correlate_weights,
    explain,
    fit_ridge,
    r_squared,
    significant_weights,
    write_explain_tsv,
)
from .sampling import (
    SamplePlan,
    downsample_disjoint,
    downsample_with_overlap,
    read_corpus,
    shared_vocabulary,
    write_samples,
)
from .sgns import TrainConfig, train_model
from .stability import language_stability
from .wals import (
    binarize,
    convert_wals_export,
    coverage_filter,
    encode_rows,
    load_wals_csv,
    morphology_subset,
    write_wals_csv,
)

log = logging.getLogger("wordstab")

OUT_ENV = "WORDSTAB_OUT_DIR"
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def default_out_dir() -> str:
    return os.environ.get(OUT_ENV, ".")


def _out_dir(args) -> str:
    d = args.out if args.out else default_out_dir()
    os.makedirs(d, exist_ok=True)
    return d


def _out_file(args, default_name: str) -> str:
    if args.out:
        parent = os.path.dirname(args.out)
        if parent:
            os.makedirs(parent, exist_ok=True)
        return args.out
    d = default_out_dir()
    os.makedirs(d, exist_ok=True)
    return os.path.join(d, default_name)


def _train_config(args, seed=None) -> TrainConfig:
    return TrainConfig(
        dim=args.dim, window=args.window, min_count=args.min_count, negatives=args.negatives,
        epochs=args.epochs, initial_lr=args.lr, subsample_threshold=args.sample,
        seed=args.seed if seed is None else seed, deterministic=not args.parallel, export=args.export,
    )


def _add_train_flags(p):
    p.add_argument("--dim", type=int, default=300)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.025, help="initial learning rate (linear decay)")
    p.add_argument("--sample", type=float, default=1e-3, help="frequent-word subsampling threshold")
    p.add_argument("--export", choices=["input", "average"], default="input")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--deterministic", action="store_true", default=True,
                      help="single-threaded, bit-reproducible training (default)")
    mode.add_argument("--parallel", action="store_true", help="lock-free multi-threaded training; not reproducible")


# --- subcommands ----------------------------------------------------------


def cmd_downsample(args) -> int:
    corpus = read_corpus(args.corpus)
    if args.overlap is not None and args.disjoint:
        raise UsageError("--disjoint and --overlap are mutually exclusive")
    if args.overlap is not None:
        samples = downsample_with_overlap(corpus, args.k, args.n, args.overlap, args.seed)
    else:
        samples = downsample_disjoint(corpus, args.k, args.n, args.seed)
    plan = SamplePlan(args.k, args.n, args.overlap, args.seed)
    label = args.label or os.path.basename(args.corpus).rsplit(".", 1)[0]
    out = _out_dir(args)
    manifest = write_samples(samples, out, label, plan, extra={
        "provenance": build_manifest("downsample", asdict(plan), [args.corpus], seeds=[args.seed]),
    })
    off = np.asarray(manifest["measured_overlap"])
    offdiag = off[~np.eye(len(off), dtype=bool)] if len(off) > 1 else np.array([0.0])
    print(f"wrote {len(samples)} samples of {args.n} sentences to {out} "
          f"(measured pairwise overlap {offdiag.min():.4f}..{offdiag.max():.4f})")
    return 0


def cmd_train(args) -> int:
    corpus = read_corpus(args.corpus)
    cfg = _train_config(args)
    result = train_model(corpus, cfg)
    path = _out_file(args, f"{os.path.basename(args.corpus).rsplit('.', 1)[0]}.seed{cfg.seed}.vec")
    save_word2vec_text(result.space, path)
    write_manifest(path + ".manifest.json", {
        **build_manifest("train", asdict(cfg), [args.corpus], [path], [cfg.seed]),
        "epoch_losses": result.epoch_losses,
        "vocab_size": len(result.space),
    })
    print(f"trained {len(result.space)} vectors of dim {cfg.dim} -> {path}")
    return 0


def cmd_neighbors(args) -> int:
    space = load_embeddings(args.embeddings, args.format)
    restrict = space.vocab
    if args.restrict:
        others = [load_embeddings(p, args.format) for p in args.restrict]
        restrict = common_vocabulary([space, *others])
    if args.words_file:
        queries = [w for w in read_word_list(args.words_file).words if w in restrict]
    elif args.word:
        queries = args.word
    else:
        queries = list(restrict.words)
    lists = batch_top_k(space, queries, args.k, restrict)
    path = _out_file(args, "neighbors.tsv")
    write_neighbors_tsv(path, lists, restrict)
    print(f"wrote neighbours for {len(lists)} words -> {path}")
    return 0


def cmd_stability(args) -> int:
    X = [load_embeddings(p, args.format) for p in args.embeddings]
    Y = [load_embeddings(p, args.format) for p in args.vs] if args.vs else None
    if Y is None and len(X) < 2:
        raise UsageError("stability needs at least two embedding files (or --vs)")
    restrict = common_vocabulary(X + (Y or [])) if len(X + (Y or [])) > 1 else X[0].vocab
    desc = "common vocabulary of all spaces"
    if args.samples:
        shared = shared_vocabulary([read_corpus(p) for p in args.samples], args.min_count, args.vocab_rule)
        words = set(restrict.words) & set(shared.words)
        if not words:
            raise DataError("no common word passes the sample frequency filter")
        restrict = Vocabulary.sorted_from(words)
        desc += f" and shared sample vocabulary ({args.vocab_rule}, min_count={args.min_count})"
    words = None
    if args.words_file:
        words = sorted(set(restrict.words) & set(read_word_list(args.words_file).words))
        if not words:
            raise DataError("no listed word is in the common vocabulary")
        desc += f"; scored words from {args.words_file}"
    report = language_stability(X, Y, restrict, args.k, args.bucket_width, desc, words)
    out = _out_dir(args)
    paths = write_report(report, out, args.name)
    if args.language:
        write_averages(os.path.join(out, f"{args.name}.average.tsv"), {args.language: report.average})
    inputs = list(args.embeddings) + list(args.vs or []) + list(args.samples or [])
    write_manifest(os.path.join(out, f"{args.name}.manifest.json"),
                   build_manifest("stability", report.config, inputs, paths))
    print(f"average stability {report.average:.4f}% over {len(report.per_word)} words -> {out}")
    return 0


def cmd_pipeline(args) -> int:
    plan = None
    if args.method == "multi-downsample-train":
        if args.n is None:
            raise UsageError("multi-downsample-train needs --n")
        plan = SamplePlan(args.samples_k, args.n, None, args.sample_seed)
    cfg = PipelineConfig(
        method=args.method, corpora=list(args.corpus or []), seeds=list(args.seeds), k=args.k,
        bucket_width=args.bucket_width, plan=plan, train=_train_config(args, seed=args.seed),
        embeddings=list(args.embeddings or []), embedding_format=args.format,
        samples=list(args.samples or []), vocab_rule=args.vocab_rule,
    )
    result = run_pipeline(cfg)
    out = _out_dir(args)
    outputs = []
    for label, report in result.reports.items():
        outputs += write_report(report, out, label)
    averages = {(args.language if args.language and len(result.reports) == 1 else label): r.average
                for label, r in result.reports.items()}
    avg_path = os.path.join(out, "averages.tsv")
    write_averages(avg_path, averages)
    outputs.append(avg_path)
    summary = {"averages": {lbl: r.average for lbl, r in sorted(result.reports.items())},
               "best_variant": result.best}
    with open(os.path.join(out, "pipeline.json"), "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    inputs = cfg.corpora + cfg.embeddings + cfg.samples
    seeds = cfg.seeds if cfg.method == "multi-seed-train" else [cfg.train.seed] + ([plan.seed] if plan else [])
    write_manifest(os.path.join(out, "pipeline.manifest.json"),
                   build_manifest("pipeline", cfg.to_dict(), inputs, outputs, seeds))
    for label, r in result.reports.items():
        print(f"{label}: average stability {r.average:.4f}% over {len(r.per_word)} words")
    if result.best is not None:
        print(f"best variant: {result.best}")
    return 0


def cmd_wals_prep(args) -> int:
    db = convert_wals_export(args.source, args.language_key)
    path = _out_file(args, "wals.csv")
    write_wals_csv(db, path)
    print(f"wrote {len(db.values)} values for {len(db.languages)} languages, {len(db.features)} features -> {path}")
    return 0


def _select_features(db, languages, args) -> list[str]:
    if args.morphology:
        return morphology_subset(db)
    feats = coverage_filter(db, languages, args.min_coverage)
    if not feats:
        raise DataError(f"no WALS feature covers {args.min_coverage:.0%} of the languages")
    return feats


def _regress_one(db, averages, args, features):
    languages = sorted(averages)
    design = binarize(db, languages, features)
    y = np.array([averages[lang] for lang in languages])
    model = fit_ridge(design.matrix, y, args.lam, design.names)
    model.keys = design.columns
    boot = bootstrap_fit(design.matrix, y, args.lam, args.n_boot, args.seed, design.names, args.bootstrap_mode)
    return design, y, model, boot


def cmd_regress(args) -> int:
    db = load_wals_csv(args.wals)
    per_file = [read_averages([p]) for p in args.stabilities]
    averages = read_averages(args.stabilities)
    if len(averages) < 3:
        raise DataError(f"regression needs at least 3 languages, got {len(averages)}")
    missing = sorted(set(averages) - set(db.languages))
    if missing:
        log.warning("%d languages have no WALS entries and are encoded as all-Unknown: %s",
                    len(missing), ", ".join(missing[:10]))
    languages = sorted(averages)
    features = _select_features(db, languages, args)
    design, y, model, boot = _regress_one(db, averages, args, features)
    out = _out_dir(args)
    outputs = [os.path.join(out, n) for n in
               ("model.json", "bootstrap.tsv", "significant.tsv", "design.tsv", "summary.json")]
    model.write_json(outputs[0])
    boot.write_tsv(outputs[1], args.z)
    with open(outputs[2], "w", encoding="utf-8", newline="\n") as fh:
        fh.write("column\tweight_mean\tstderr\n")
        for c, m, s in significant_weights(boot, args.z):
            fh.write(f"{c}\t{m:.6f}\t{s:.6f}\n")
    design.write_tsv(outputs[3])
    summary = {
        "languages": languages,
        "features": features,
        "n_columns": len(design.columns),
        "r2_full_fit": r_squared(model, design.matrix, y),
        **boot.summary(),
        "z": args.z,
    }
    if args.compare:
        if len(per_file) != 2:
            raise UsageError("--compare needs exactly two --stabilities files")
        summary["comparison"] = _compare(db, per_file, args, features)
    with open(outputs[4], "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")
    write_manifest(os.path.join(out, "regress.manifest.json"), build_manifest(
        "regress", {k: v for k, v in vars(args).items() if k != "func"},
        [args.wals, *args.stabilities], outputs, [args.seed]))
    print(f"R^2 (bootstrap) {boot.r2_mean:.4f} +/- {boot.r2_stderr:.4f}; "
          f"{len(significant_weights(boot, args.z))} significant of {len(design.columns)} columns -> {out}")
    return 0


def _compare(db, per_file, args, features) -> dict:
    shared_langs = sorted(set(per_file[0]) & set(per_file[1]))
    if len(shared_langs) < 3:
        raise DataError("the two stability files share fewer than 3 languages")
    fits = []
    for avg in per_file:
        sub = {lang: avg[lang] for lang in shared_langs}
        fits.append(_regress_one(db, sub, args, features))
    names = fits[0][3].columns
    sig = {c for _, _, _, b in fits for c, _, _ in significant_weights(b, args.z)}
    idx = [i for i, c in enumerate(names) if c in sig]
    r, p = correlate_weights(fits[0][3].weight_mean, fits[1][3].weight_mean, idx, seed=args.seed)
    return {
        "languages": shared_langs,
        "r2": [[b.r2_mean, b.r2_stderr] for _, _, _, b in fits],
        "n_shared_significant": len(idx),
        "pearson_r": r,
        "permutation_p": p,
    }


def cmd_explain(args) -> int:
    model = RidgeModel.read_json(args.model)
    if model.keys is None:
        raise DataError(f"{args.model}: model has no WALS column keys")
    db = load_wals_csv(args.wals)
    rows = encode_rows(db, args.languages, model.keys)
    explanations = {lang: explain(model, row, args.threshold) for lang, row in zip(args.languages, rows.matrix)}
    truth = read_averages(args.stabilities) if args.stabilities else None
    path = _out_file(args, "explain.tsv")
    write_explain_tsv(path, model, explanations, truth)
    for lang, e in explanations.items():
        print(f"{lang}: predicted {e.prediction:.4f}" + (f", ground truth {truth[lang]:.4f}" if truth and lang in truth else ""))
    return 0


def cmd_plot(args) -> int:
    if args.buckets:
        labels = args.labels or [os.path.basename(p).rsplit(".", 2)[0] for p in args.buckets]
        if len(labels) != len(args.buckets):
            raise UsageError("--labels must match --buckets in number")
        series = {lab: read_bucket_csv(p) for lab, p in zip(labels, args.buckets)}
        svg = line_chart(series, args.title)
    elif args.grouped:
        svg = box_chart(read_grouped_tsv(args.grouped), args.title)
    elif args.group_by_feature:
        if not (args.wals and args.stabilities):
            raise UsageError("--group-by-feature needs --wals and --stabilities")
        db = load_wals_csv(args.wals)
        averages = read_averages(args.stabilities)
        groups: dict[str, list[float]] = {}
        for lang in sorted(averages):
            groups.setdefault(db.values.get((lang, args.group_by_feature), "Unknown"), []).append(averages[lang])
        svg = box_chart(dict(sorted(groups.items())), args.title or args.group_by_feature)
    else:
        raise UsageError("plot needs --buckets, --grouped or --group-by-feature")
    path = _out_file(args, "plot.svg")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    print(f"wrote {path}")
    return 0


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wordstab", description="Word-embedding stability toolkit")
    parser.add_argument("--version", action="version", version=f"wordstab {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("downsample", help="draw disjoint or overlap-controlled corpus samples")
    p.add_argument("corpus")
    p.add_argument("--k", type=int, required=True, help="number of samples")
    p.add_argument("--n", type=int, required=True, help="sentences per sample")
    p.add_argument("--disjoint", action="store_true", help="pairwise-disjoint samples (default)")
    p.add_argument("--overlap", type=float, help="shared-core fraction in [0, 1]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--label")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_downsample)

    p = sub.add_parser("train", help="train skip-gram negative-sampling vectors")
    p.add_argument("corpus")
    _add_train_flags(p)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", help="output .vec file (word2vec text with header)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("neighbors", help="dump exact top-k cosine neighbours as TSV")
    p.add_argument("embeddings")
    p.add_argument("--format", choices=["auto", "word2vec", "glove"], default="auto")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--word", action="append", help="query word (repeatable)")
    p.add_argument("--words-file")
    p.add_argument("--restrict", nargs="+", help="restrict to the vocabulary shared with these files")
    p.add_argument("--out")
    p.set_defaults(func=cmd_neighbors)

    p = sub.add_parser("stability", help="stability across embedding files")
    p.add_argument("embeddings", nargs="+")
    p.add_argument("--vs", nargs="+", help="second set Y; without it pairs are drawn within the first set")
    p.add_argument("--format", choices=["auto", "word2vec", "glove"], default="auto")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--bucket-width", type=float, default=5.0)
    p.add_argument("--samples", nargs="+", help="corpus samples for the frequency filter")
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--vocab-rule", choices=["per-sample", "total"], default="per-sample")
    p.add_argument("--words-file")
    p.add_argument("--language", help="also write <name>.average.tsv under this language name")
    p.add_argument("--name", default="stability")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("pipeline", help="train/ingest spaces and compute stability end to end")
    p.add_argument("--method", choices=["multi-seed-train", "multi-downsample-train", "multi-downsample-ingest"],
                   required=True)
    p.add_argument("--corpus", action="append", help="corpus file; repeat for translation variants")
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3, 4, 5])
    p.add_argument("--seed", type=int, default=1, help="training seed for downsample methods")
    p.add_argument("--samples-k", type=int, default=5)
    p.add_argument("--n", type=int, help="sentences per downsample")
    p.add_argument("--sample-seed", type=int, default=0)
    p.add_argument("--embeddings", nargs="+")
    p.add_argument("--samples", nargs="+")
    p.add_argument("--format", choices=["auto", "word2vec", "glove"], default="auto")
    p.add_argument("--vocab-rule", choices=["per-sample", "total"], default="per-sample")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--bucket-width", type=float, default=5.0)
    p.add_argument("--language")
    _add_train_flags(p)
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("wals-prep", help="convert an official WALS export to language,feature,value CSV")
    p.add_argument("source", help="CLDF directory or wide language.csv")
    p.add_argument("--language-key", choices=["iso", "wals"], default="iso")
    p.add_argument("--out")
    p.set_defaults(func=cmd_wals_prep)

    p = sub.add_parser("regress", help="bootstrap ridge regression of average stability on WALS features")
    p.add_argument("--stabilities", nargs="+", required=True, help="language<TAB>average TSV files")
    p.add_argument("--wals", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=DEFAULT_LAMBDA)
    p.add_argument("--n-boot", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--min-coverage", type=float, default=0.01)
    p.add_argument("--morphology", action="store_true", help="use only Fusion, Exponence, Possessive classification")
    p.add_argument("--z", type=float, default=2.0)
    p.add_argument("--bootstrap-mode", choices=["rows", "columns"], default="rows")
    p.add_argument("--compare", action="store_true", help="also correlate models fitted per stability file")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_regress)

    p = sub.add_parser("explain", help="per-language weight breakdown of a fitted model")
    p.add_argument("--model", required=True)
    p.add_argument("--wals", required=True)
    p.add_argument("--languages", nargs="+", required=True)
    p.add_argument("--stabilities", nargs="+", help="ground-truth language<TAB>average TSVs")
    p.add_argument("--threshold", type=float, default=0.3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("plot", help="render bucket charts or grouped summaries as SVG")
    p.add_argument("--buckets", nargs="+", help="bucket CSV files, one series each")
    p.add_argument("--labels", nargs="+")
    p.add_argument("--grouped", help="TSV group<TAB>value")
    p.add_argument("--group-by-feature", help="WALS feature id to group language averages by")
    p.add_argument("--wals")
    p.add_argument("--stabilities", nargs="+")
    p.add_argument("--title", default="")
    p.add_argument("--out")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"wordstab {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"wordstab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
