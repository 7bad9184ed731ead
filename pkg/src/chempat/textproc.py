"""Tokenization with character offsets and BIO label encoding/decoding."""

import logging
import re
from dataclasses import dataclass

from .brat import EntitySpan

log = logging.getLogger(__name__)

# digit runs, letter runs, then any other single non-space character
_TOKEN_RE = re.compile(r"\d+|[^\W\d_]+|\S", re.UNICODE)


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    """Split into maximal letter runs, maximal digit runs, and single other chars."""
    return [Token(m.group(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def resolve_overlaps(entities: list[EntitySpan]) -> list[EntitySpan]:
    """Greedy maximal non-overlapping subset, longest spans first.

    Ties break on (start ascending, type ascending) so the result is
    deterministic. Output keeps the original span order.
    """
    ranked = sorted(entities, key=lambda e: (-(e.end - e.start), e.start, e.type))
    kept: list[EntitySpan] = []
    for span in ranked:
        if not any(span.overlaps(k) for k in kept):
            kept.append(span)
    kept_set = set(kept)
    return [e for e in entities if e in kept_set]


def encode_bio(tokens: list[Token], entities: list[EntitySpan]) -> list[str]:
    """BIO2-encode non-overlapping entities onto a token sequence.

    A token belongs to an entity iff their character ranges overlap, so
    entity boundaries cutting through a token are snapped outward to the
    full token (counted and logged).
    """
    labels = ["O"] * len(tokens)
    n_snapped = 0
    for span in sorted(entities, key=lambda e: (e.start, e.end, e.type)):
        covered = [
            i for i, tok in enumerate(tokens) if tok.start < span.end and tok.end > span.start
        ]
        if not covered:
            log.warning("entity %r at %d..%d covers no token; dropped",
                        span.surface, span.start, span.end)
            continue
        if any(labels[i] != "O" for i in covered):
            log.warning("entity %r at %d..%d collides after snapping; dropped",
                        span.surface, span.start, span.end)
            continue
        if tokens[covered[0]].start != span.start or tokens[covered[-1]].end != span.end:
            n_snapped += 1
        labels[covered[0]] = f"B-{span.type}"
        for i in covered[1:]:
            labels[i] = f"I-{span.type}"
    if n_snapped:
        log.warning("snapped %d entity boundaries outward to token edges", n_snapped)
    return labels


def decode_bio(text: str, tokens: list[Token], labels: list[str]) -> list[EntitySpan]:
    """Turn a BIO label sequence back into entity spans.

    Ill-formed I-after-O (or after a different type) is repaired by
    treating the I as a B.
    """
    if len(tokens) != len(labels):
        raise ValueError(f"{len(tokens)} tokens but {len(labels)} labels")
    spans: list[EntitySpan] = []
    cur_type = None
    cur_start = cur_end = 0
    for tok, label in zip(tokens, labels):
        if label == "O":
            tag, etype = "O", None
        else:
            tag, etype = label.split("-", 1)
        if tag == "I" and etype == cur_type and cur_type is not None:
            cur_end = tok.end
            continue
        if cur_type is not None:
            spans.append(EntitySpan(cur_type, cur_start, cur_end, text[cur_start:cur_end]))
            cur_type = None
        if tag in ("B", "I"):  # I here means repaired start
            cur_type, cur_start, cur_end = etype, tok.start, tok.end
    if cur_type is not None:
        spans.append(EntitySpan(cur_type, cur_start, cur_end, text[cur_start:cur_end]))
    return spans
