"""Batch command-line front end: corpora, CRF models, ensembles, reports."""

import argparse
import concurrent.futures
import datetime
import json
import logging
import os
import sys
from pathlib import Path

from . import __version__, brat, crf, ensemble, evaluation

log = logging.getLogger("chempat")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


def _setup_logging() -> None:
    level = _LOG_LEVELS.get(os.environ.get("CHEMPAT_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _write_manifest(out_dir: Path, args: argparse.Namespace) -> None:
    manifest = {
        "tool": "chempat",
        "version": __version__,
        "command": args.command,
        "argv": sys.argv[1:],
        "created": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    (out_dir / "run_manifest.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )


def _emit(content: str, out: str | None) -> None:
    if out:
        Path(out).write_text(content, encoding="utf-8")
    else:
        sys.stdout.write(content)


def _load_prediction_sets(pred_dirs, texts: brat.Corpus) -> list[ensemble.PredictionSet]:
    text_map = {doc_id: texts[doc_id].text for doc_id in texts.documents}
    sets = []
    for pred_dir in pred_dirs:
        name = Path(pred_dir).name or str(pred_dir)
        sets.append(ensemble.PredictionSet(name, brat.load_corpus(pred_dir, texts=text_map)))
    return sets


def _parse_quorum(spec: str, members: list[str]) -> ensemble.EnsembleConfig:
    if spec == "strict-majority":
        return ensemble.EnsembleConfig(members=members)
    if spec.startswith("at-least:"):
        m = int(spec.split(":", 1)[1])
        if not 1 <= m <= len(members):
            raise ValueError(f"at-least quorum {m} out of range for {len(members)} members")
        return ensemble.EnsembleConfig(members=members, quorum="at-least", min_votes=m)
    raise ValueError(f"unknown quorum rule {spec!r} (use strict-majority or at-least:m)")


def cmd_stats(args) -> int:
    corpus = brat.load_corpus(args.corpus)
    lines = ["entity\tcount\tpercent\n"]
    for etype, count, pct in brat.corpus_stats(corpus):
        lines.append(f"{etype}\t{count}\t{pct}\n")
    _emit("".join(lines), args.out)
    return 0


def cmd_crf_train(args) -> int:
    corpus = brat.load_corpus(args.corpus)
    config = crf.TrainConfig(l2=args.l2, max_iterations=args.max_iter, tolerance=args.tol)
    model, history = crf.train(corpus, config)
    for it, obj in history:
        log.info("iteration %d objective %.6f", it, obj)
    crf.save_model(model, args.model)
    log.info("saved model with %d features, %d labels to %s",
             len(model.feature_index), len(model.labels), args.model)
    return 0


def cmd_crf_tag(args) -> int:
    model = crf.load_model(args.model)
    texts = brat.load_corpus(args.texts)
    doc_ids = sorted(texts.documents)
    out_dir = Path(args.out)

    def tag(doc_id):
        return brat.Document(doc_id, texts[doc_id].text,
                             crf.tag_document(model, texts[doc_id].text))

    tagged = brat.Corpus()
    if args.jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=args.jobs) as pool:
            for doc in pool.map(tag, doc_ids):
                tagged.add(doc)
    else:
        for doc_id in doc_ids:
            tagged.add(tag(doc_id))
    brat.save_corpus(tagged, out_dir)
    _write_manifest(out_dir, args)
    return 0


def cmd_vote(args) -> int:
    texts = brat.load_corpus(args.texts)
    sets = _load_prediction_sets(args.pred, texts)
    config = _parse_quorum(args.quorum, [s.model_name for s in sets])
    voted = ensemble.majority_vote(ensemble.tally_votes(sets), config)
    for doc_id in texts.documents:  # keep empty docs so the output is a full corpus
        if doc_id not in voted:
            voted.add(brat.Document(doc_id, texts[doc_id].text, []))
    out_dir = Path(args.out)
    brat.save_corpus(voted, out_dir)
    _write_manifest(out_dir, args)
    return 0


def cmd_search(args) -> int:
    texts = brat.load_corpus(args.texts)
    gold = brat.load_corpus(args.gold)
    sets = _load_prediction_sets(args.pred, texts)
    results = ensemble.search_composition(sets, gold, args.min, min(args.max, len(sets)))
    _emit(ensemble.composition_report_tsv(results), args.out)
    return 0


def cmd_evaluate(args) -> int:
    gold = brat.load_corpus(args.gold)
    text_map = {doc_id: gold[doc_id].text for doc_id in gold.documents}
    pred = brat.load_corpus(args.pred, texts=text_map)
    modes = ["exact", "relaxed"] if args.mode == "both" else [args.mode]
    results = {}
    for mode in modes:
        matcher = evaluation.match_exact if mode == "exact" else evaluation.match_relaxed
        results[mode] = evaluation.compute_metrics(matcher(gold, pred))
    _emit(evaluation.metrics_tsv(results), args.out)
    return 0


def cmd_analyze(args) -> int:
    gold = brat.load_corpus(args.gold)
    text_map = {doc_id: gold[doc_id].text for doc_id in gold.documents}
    pred = brat.load_corpus(args.pred, texts=text_map)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrix = evaluation.confusion(gold, pred)
    (out_dir / "confusion_counts.csv").write_text(
        evaluation.confusion_csv(matrix), encoding="utf-8")
    (out_dir / "confusion_normalized.csv").write_text(
        evaluation.confusion_csv(matrix, normalized=True), encoding="utf-8")
    (out_dir / "span_errors.tsv").write_text(
        evaluation.span_errors_tsv(evaluation.span_errors(gold, pred)), encoding="utf-8")
    _write_manifest(out_dir, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chempat",
        description="Chemical-patent NER toolkit: CRF tagging, vote ensembling, span evaluation",
    )
    parser.add_argument("--version", action="version", version=f"chempat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="entity distribution of a corpus directory")
    p.add_argument("corpus")
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("crf-train", help="train the CRF baseline")
    p.add_argument("--corpus", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--l2", type=float, default=0.1)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(func=cmd_crf_train)

    p = sub.add_parser("crf-tag", help="tag a texts directory with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_crf_tag)

    p = sub.add_parser("vote", help="majority-vote several prediction directories")
    p.add_argument("--pred", action="append", required=True,
                   help="prediction directory (repeat per model)")
    p.add_argument("--texts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quorum", default="strict-majority",
                   help="strict-majority (default) or at-least:m")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_vote)

    p = sub.add_parser("search", help="exhaustive ensemble composition search")
    p.add_argument("--pred", action="append", required=True)
    p.add_argument("--texts", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--min", type=int, default=2)
    p.add_argument("--max", type=int, default=7)
    p.add_argument("--out")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("evaluate", help="exact/relaxed P/R/F1 report")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--mode", choices=["exact", "relaxed", "both"], default="both")
    p.add_argument("--out")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("analyze", help="confusion matrix and span-error analysis")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_analyze)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (brat.AnnotationError, ValueError, OSError) as exc:
        print(f"chempat {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
