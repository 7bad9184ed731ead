"""Exact and relaxed span-matching evaluation, confusion matrix, span-error analysis.

Exact matching requires identical offsets and entity type. Relaxed matching
pairs same-type spans with at least one character of overlap, one-to-one,
greedily by overlap length.
"""

from dataclasses import dataclass, field

from .brat import Corpus, EntitySpan

NONE_LABEL = "NONE"

ENTITY_TYPES = [
    "example_label",
    "other_compound",
    "reaction_product",
    "reagent_catalyst",
    "solvent",
    "starting_material",
    "temperature",
    "time",
    "yield_other",
    "yield_percent",
]


@dataclass
class MatchReport:
    mode: str  # "exact" | "relaxed"
    pairs: dict[str, list[tuple[EntitySpan, EntitySpan]]] = field(default_factory=dict)
    false_negatives: dict[str, list[EntitySpan]] = field(default_factory=dict)
    false_positives: dict[str, list[EntitySpan]] = field(default_factory=dict)

    def all_pairs(self):
        for doc_id in sorted(self.pairs):
            yield from self.pairs[doc_id]


@dataclass
class Metrics:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        return f1_score(self.precision, self.recall)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _check_ids(gold: Corpus, pred: Corpus) -> None:
    extra = sorted(set(pred.documents) - set(gold.documents))
    if extra:
        raise ValueError(f"prediction documents not in gold corpus: {', '.join(extra)}")


def _overlap(a: EntitySpan, b: EntitySpan) -> int:
    return min(a.end, b.end) - max(a.start, b.start)


def match_exact(gold: Corpus, pred: Corpus) -> MatchReport:
    """Pair spans with identical (start, end, type); the rest are FP/FN."""
    _check_ids(gold, pred)
    report = MatchReport("exact")
    for doc_id in sorted(gold.documents):
        gspans = gold[doc_id].entities
        pspans = pred[doc_id].entities if doc_id in pred else []
        pindex = {p.triple: p for p in pspans}
        pairs, fns = [], []
        for g in sorted(gspans, key=lambda s: (s.start, s.end, s.type)):
            p = pindex.pop(g.triple, None)
            if p is not None:
                pairs.append((g, p))
            else:
                fns.append(g)
        report.pairs[doc_id] = pairs
        report.false_negatives[doc_id] = fns
        report.false_positives[doc_id] = sorted(
            pindex.values(), key=lambda s: (s.start, s.end, s.type)
        )
    return report


def match_relaxed(gold: Corpus, pred: Corpus) -> MatchReport:
    """One-to-one same-type overlap matching, greedy by overlap length.

    Candidate pairs are ordered by (overlap descending, gold start, gold end,
    pred start, pred end, type) so the matching is fully deterministic.
    """
    _check_ids(gold, pred)
    report = MatchReport("relaxed")
    for doc_id in sorted(gold.documents):
        gspans = gold[doc_id].entities
        pspans = pred[doc_id].entities if doc_id in pred else []
        candidates = [
            (g, p)
            for g in gspans
            for p in pspans
            if g.type == p.type and _overlap(g, p) > 0
        ]
        candidates.sort(
            key=lambda gp: (
                -_overlap(gp[0], gp[1]),
                gp[0].start, gp[0].end, gp[1].start, gp[1].end, gp[0].type,
            )
        )
        used_g, used_p = set(), set()
        pairs = []
        for g, p in candidates:
            if g.triple in used_g or p.triple in used_p:
                continue
            used_g.add(g.triple)
            used_p.add(p.triple)
            pairs.append((g, p))
        report.pairs[doc_id] = pairs
        report.false_negatives[doc_id] = sorted(
            (g for g in gspans if g.triple not in used_g),
            key=lambda s: (s.start, s.end, s.type),
        )
        report.false_positives[doc_id] = sorted(
            (p for p in pspans if p.triple not in used_p),
            key=lambda s: (s.start, s.end, s.type),
        )
    return report


def compute_metrics(report: MatchReport) -> dict[str, Metrics]:
    """Per-type TP/FP/FN counts plus a micro-averaged 'ALL' row."""
    tp: dict[str, int] = {}
    fp: dict[str, int] = {}
    fn: dict[str, int] = {}
    for doc_id in report.pairs:
        for g, _ in report.pairs[doc_id]:
            tp[g.type] = tp.get(g.type, 0) + 1
        for g in report.false_negatives.get(doc_id, []):
            fn[g.type] = fn.get(g.type, 0) + 1
        for p in report.false_positives.get(doc_id, []):
            fp[p.type] = fp.get(p.type, 0) + 1
    types = sorted(set(tp) | set(fp) | set(fn))
    result = {
        t: Metrics(tp.get(t, 0), fp.get(t, 0), fn.get(t, 0)) for t in types
    }
    result["ALL"] = Metrics(sum(tp.values()), sum(fp.values()), sum(fn.values()))
    return result


@dataclass
class ConfusionMatrix:
    types: list[str]  # entity types plus NONE, NONE last
    counts: list[list[int]]  # rows = gold type, columns = predicted type

    def normalized(self) -> list[list[float]]:
        out = []
        for row in self.counts:
            total = sum(row)
            out.append([c / total if total else 0.0 for c in row])
        return out


def confusion(gold: Corpus, pred: Corpus, types: list[str] | None = None) -> ConfusionMatrix:
    """Exact-offset confusion matrix with a NONE row/column for misses/spurious.

    For each gold span, a prediction with identical offsets increments the
    (gold type, predicted type) cell, preferring the same-type prediction
    when several types share the offsets; gold spans with no offset-matching
    prediction go to (gold type, NONE). Predictions whose offsets match no
    gold span go to (NONE, predicted type).
    """
    if types is None:
        observed = set()
        for corpus in (gold, pred):
            for doc_id in corpus.documents:
                observed.update(s.type for s in corpus[doc_id].entities)
        types = sorted(observed)
    all_types = list(types) + [NONE_LABEL]
    index = {t: k for k, t in enumerate(all_types)}
    counts = [[0] * len(all_types) for _ in all_types]

    for doc_id in sorted(gold.documents):
        gspans = gold[doc_id].entities
        pspans = pred[doc_id].entities if doc_id in pred else []
        pred_by_offsets: dict[tuple[int, int], list[str]] = {}
        for p in pspans:
            pred_by_offsets.setdefault((p.start, p.end), []).append(p.type)
        gold_offsets = {(g.start, g.end) for g in gspans}
        for g in gspans:
            ptypes = pred_by_offsets.get((g.start, g.end))
            if ptypes:
                chosen = g.type if g.type in ptypes else min(ptypes)
                counts[index[g.type]][index[chosen]] += 1
            else:
                counts[index[g.type]][index[NONE_LABEL]] += 1
        for p in pspans:
            if (p.start, p.end) not in gold_offsets:
                counts[index[NONE_LABEL]][index[p.type]] += 1
    return ConfusionMatrix(all_types, counts)


SPAN_ERROR_BUCKET_WIDTH = 5
SPAN_ERROR_MAX_BUCKETS = 10  # last bucket open-ended


@dataclass
class SpanErrorReport:
    longer: int
    shorter: int
    shifted: int
    histogram: list[tuple[int, int | None, int]]  # (bucket_start, bucket_end, count)
    multiword_fraction: float


def span_errors(gold: Corpus, pred: Corpus) -> SpanErrorReport:
    """Classify relaxed-but-not-exact matches and bucket them by gold length."""
    exact = match_exact(gold, pred)
    exact_pairs = {
        (doc_id, g.triple, p.triple)
        for doc_id in exact.pairs
        for g, p in exact.pairs[doc_id]
    }
    relaxed = match_relaxed(gold, pred)
    longer = shorter = shifted = 0
    multiword = total = 0
    bucket_counts = [0] * SPAN_ERROR_MAX_BUCKETS
    for doc_id in sorted(relaxed.pairs):
        for g, p in relaxed.pairs[doc_id]:
            if (doc_id, g.triple, p.triple) in exact_pairs:
                continue
            total += 1
            if p.start <= g.start and p.end >= g.end:
                longer += 1
            elif p.start >= g.start and p.end <= g.end:
                shorter += 1
            else:
                shifted += 1
            if any(c.isspace() for c in g.surface):
                multiword += 1
            bucket = min((len(g) - 1) // SPAN_ERROR_BUCKET_WIDTH, SPAN_ERROR_MAX_BUCKETS - 1)
            bucket_counts[bucket] += 1
    histogram = []
    for b, count in enumerate(bucket_counts):
        lo = b * SPAN_ERROR_BUCKET_WIDTH + 1
        hi = None if b == SPAN_ERROR_MAX_BUCKETS - 1 else lo + SPAN_ERROR_BUCKET_WIDTH - 1
        histogram.append((lo, hi, count))
    return SpanErrorReport(
        longer, shorter, shifted, histogram, multiword / total if total else 0.0
    )


def metrics_tsv(results: dict[str, dict[str, Metrics]]) -> str:
    """TSV report: entity, mode, tp, fp, fn, precision, recall, f1 (4 decimals)."""
    lines = ["entity\tmode\ttp\tfp\tfn\tprecision\trecall\tf1\n"]
    for mode in sorted(results):
        per_type = results[mode]
        order = sorted(t for t in per_type if t != "ALL") + ["ALL"]
        for etype in order:
            m = per_type[etype]
            lines.append(
                f"{etype}\t{mode}\t{m.tp}\t{m.fp}\t{m.fn}"
                f"\t{m.precision:.4f}\t{m.recall:.4f}\t{m.f1:.4f}\n"
            )
    return "".join(lines)


def confusion_csv(matrix: ConfusionMatrix, normalized: bool = False) -> str:
    lines = ["," + ",".join(matrix.types) + "\n"]
    rows = matrix.normalized() if normalized else matrix.counts
    for etype, row in zip(matrix.types, rows):
        if normalized:
            cells = ",".join(f"{v:.6f}" for v in row)
        else:
            cells = ",".join(str(v) for v in row)
        lines.append(f"{etype},{cells}\n")
    return "".join(lines)


def span_errors_tsv(report: SpanErrorReport) -> str:
    lines = ["bucket_start\tbucket_end\tcount\n"]
    for lo, hi, count in report.histogram:
        lines.append(f"{lo}\t{hi if hi is not None else 'inf'}\t{count}\n")
    lines.append(
        f"# longer={report.longer}\tshorter={report.shorter}\tshifted={report.shifted}"
        f"\tmultiword_fraction={report.multiword_fraction:.4f}\n"
    )
    return "".join(lines)
