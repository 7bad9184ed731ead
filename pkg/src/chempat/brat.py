"""Reading and writing BRAT standoff annotations (.ann) paired with raw text (.txt).

Only "T" (text-bound) annotations are handled; other line types are skipped
with a warning. Offsets are counted in Unicode characters, not bytes.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

log = logging.getLogger(__name__)


class AnnotationError(ValueError):
    """Base class for problems in .ann content or corpus layout."""


class AnnParseError(AnnotationError):
    """Malformed T-line (wrong field count, non-numeric offsets)."""


class OffsetBoundsError(AnnotationError):
    """Annotation offsets fall outside the document text."""


class SurfaceMismatchError(AnnotationError):
    """Annotation surface text disagrees with the document slice."""


class DiscontinuousSpanError(AnnotationError):
    """Discontinuous (semicolon-separated) spans are not supported."""


@dataclass(frozen=True)
class EntitySpan:
    """A typed character interval [start, end) with its surface text."""

    type: str
    start: int
    end: int
    surface: str

    @property
    def triple(self):
        return (self.start, self.end, self.type)

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end

    def __len__(self) -> int:
        return self.end - self.start


@dataclass
class Document:
    id: str
    text: str
    entities: list[EntitySpan] = field(default_factory=list)


@dataclass
class Corpus:
    documents: dict[str, Document] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self):
        return iter(sorted(self.documents))

    def __getitem__(self, doc_id: str) -> Document:
        return self.documents[doc_id]

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.documents

    def add(self, doc: Document) -> None:
        self.documents[doc.id] = doc


def _span_sort_key(span: EntitySpan):
    return (span.start, span.end, span.type)


def parse_ann(ann_content: str, doc_text: str) -> list[EntitySpan]:
    """Parse the T-lines of a .ann file into entity spans.

    Non-T lines (A/R/E/N/#...) are skipped with a warning. Duplicate
    (start, end, type) triples are collapsed to one span.
    """
    spans = []
    seen = set()
    for lineno, line in enumerate(ann_content.splitlines(), start=1):
        if not line.strip():
            continue
        if not line.startswith("T"):
            log.warning("line %d: skipping non-entity annotation %r", lineno, line.split("\t")[0])
            continue
        fields = line.split("\t")
        if len(fields) < 2:
            raise AnnParseError(f"line {lineno}: expected tab-separated fields in {line!r}")
        ann_id = fields[0]
        if ";" in fields[1]:
            raise DiscontinuousSpanError(
                f"line {lineno}: discontinuous span in {ann_id} is not supported"
            )
        head = fields[1].split(" ")
        if len(head) != 3:
            raise AnnParseError(f"line {lineno}: expected 'TYPE start end', got {fields[1]!r}")
        etype, start_s, end_s = head
        try:
            start, end = int(start_s), int(end_s)
        except ValueError:
            raise AnnParseError(f"line {lineno}: non-numeric offsets in {ann_id}") from None
        if not (0 <= start < end <= len(doc_text)):
            raise OffsetBoundsError(
                f"line {lineno}: offsets {start}..{end} of {ann_id} out of bounds "
                f"for text of length {len(doc_text)}"
            )
        surface = fields[2] if len(fields) > 2 else ""
        actual = doc_text[start:end]
        if surface != actual:
            raise SurfaceMismatchError(
                f"line {lineno}: surface of {ann_id} is {surface!r} but text slice is {actual!r}"
            )
        if (start, end, etype) in seen:
            continue
        seen.add((start, end, etype))
        spans.append(EntitySpan(etype, start, end, actual))
    return spans


def serialize_ann(entities: list[EntitySpan]) -> str:
    """Emit T-lines numbered T1..Tn, sorted by (start, end, type)."""
    lines = []
    for k, span in enumerate(sorted(entities, key=_span_sort_key), start=1):
        lines.append(f"T{k}\t{span.type} {span.start} {span.end}\t{span.surface}\n")
    return "".join(lines)


def load_corpus(directory, texts: dict[str, str] | None = None) -> Corpus:
    """Load a flat directory of <id>.txt / <id>.ann pairs.

    A .txt without a .ann yields a document with no entities. A .ann
    without a .txt is an error unless `texts` supplies the paired text
    (used for prediction directories sharing an external texts corpus).
    """
    directory = Path(directory)
    txt_files = {p.stem: p for p in sorted(directory.glob("*.txt"))}
    ann_files = {p.stem: p for p in sorted(directory.glob("*.ann"))}

    corpus = Corpus()
    for stem in sorted(set(txt_files) | set(ann_files)):
        if stem in txt_files:
            text = txt_files[stem].read_text(encoding="utf-8")
        elif texts is not None and stem in texts:
            text = texts[stem]
        else:
            raise AnnotationError(f"{ann_files[stem]}: .ann file without paired .txt")
        entities = []
        if stem in ann_files:
            try:
                entities = parse_ann(ann_files[stem].read_text(encoding="utf-8"), text)
            except AnnotationError as exc:
                raise type(exc)(f"{ann_files[stem]}: {exc}") from None
        corpus.add(Document(stem, text, entities))
    return corpus


def save_corpus(corpus: Corpus, directory, write_texts: bool = True) -> None:
    """Write each document as <id>.ann (and <id>.txt unless disabled)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc_id in sorted(corpus.documents):
        doc = corpus[doc_id]
        (directory / f"{doc_id}.ann").write_text(serialize_ann(doc.entities), encoding="utf-8")
        if write_texts:
            (directory / f"{doc_id}.txt").write_text(doc.text, encoding="utf-8")


def corpus_stats(corpus: Corpus) -> list[tuple[str, int, int]]:
    """Entity counts and integer percentages per type, plus an 'All' row.

    Percentages use largest-remainder apportionment so they always sum to
    exactly 100 (remainder ties broken by type name).
    """
    counts: dict[str, int] = {}
    for doc_id in sorted(corpus.documents):
        for span in corpus[doc_id].entities:
            counts[span.type] = counts.get(span.type, 0) + 1
    total = sum(counts.values())
    types = sorted(counts)
    pct = {t: 100 * counts[t] // total for t in types} if total else {}
    if total:
        remainders = sorted(
            types, key=lambda t: (-(100 * counts[t] % total), t)
        )
        for t in remainders[: 100 - sum(pct.values())]:
            pct[t] += 1
    rows = [(t, counts[t], pct[t]) for t in types]
    rows.append(("All", total, 100 if total else 0))
    return rows
