"""Synthetic data generators shared by the test suite.

These generators are independent oracles: the labels they attach are
constructed directly from the templates, never from any tagger output.
"""

import random

from chempat.brat import Corpus, Document, EntitySpan

TYPES_10 = [
    "example_label", "other_compound", "reaction_product", "reagent_catalyst",
    "solvent", "starting_material", "temperature", "time", "yield_other",
    "yield_percent",
]

_OPENINGS = ["The mixture was", "The solution was", "The residue was", "The slurry was"]
_VERBS = ["stirred", "heated", "refluxed", "agitated"]
_TAILS = [" The product was dried.", " The layers were separated.", ""]


def make_reaction_doc(doc_id: str, rng: random.Random) -> Document:
    """One snippet like 'The mixture was stirred for 3 h at 25 ° C (61%).'"""
    text = ""
    entities = []

    def lit(s):
        nonlocal text
        text += s

    def ent(s, etype):
        nonlocal text
        entities.append(EntitySpan(etype, len(text), len(text) + len(s), s))
        text += s

    lit(f"{rng.choice(_OPENINGS)} {rng.choice(_VERBS)} for ")
    ent(f"{rng.randint(1, 48)} h", "time")
    if rng.random() < 0.9:
        lit(" at ")
        ent(f"{rng.choice([0, 20, 25, 40, 60, 80, 100, 120])} ° C", "temperature")
    if rng.random() < 0.9:
        lit(" (")
        ent(f"{rng.randint(10, 99)}%", "yield_percent")
        lit(")")
    lit(".")
    lit(rng.choice(_TAILS))
    return Document(doc_id, text, entities)


def make_reaction_corpus(n_docs: int, seed: int) -> Corpus:
    rng = random.Random(seed)
    corpus = Corpus()
    for k in range(n_docs):
        corpus.add(make_reaction_doc(f"doc{k:04d}", rng))
    return corpus


def random_span_corpus(rng: random.Random, n_docs: int = 1, max_spans: int = 20,
                       text_len: int = 100, types=TYPES_10) -> Corpus:
    """Random gold-style corpus over filler text; spans may overlap freely."""
    corpus = Corpus()
    text = "x" * text_len
    for k in range(n_docs):
        seen = set()
        entities = []
        for _ in range(rng.randrange(max_spans + 1)):
            start = rng.randrange(text_len - 8)
            end = start + rng.randint(1, 8)
            etype = rng.choice(types)
            if (start, end, etype) in seen:
                continue
            seen.add((start, end, etype))
            entities.append(EntitySpan(etype, start, end, text[start:end]))
        corpus.add(Document(f"d{k}", text, entities))
    return corpus


def perturbed_predictions(gold: Corpus, rng: random.Random, keep=0.8, jitter=0.3,
                          retype=0.1, extra=2) -> Corpus:
    """Noisy copy of a gold corpus: drops, boundary jitter, type swaps, spurious spans."""
    pred = Corpus()
    for doc_id in sorted(gold.documents):
        doc = gold[doc_id]
        text = doc.text
        seen = set()
        entities = []

        def add(start, end, etype):
            start = max(0, start)
            end = min(len(text), end)
            if start >= end or (start, end, etype) in seen:
                return
            seen.add((start, end, etype))
            entities.append(EntitySpan(etype, start, end, text[start:end]))

        for span in doc.entities:
            if rng.random() > keep:
                continue
            start, end, etype = span.start, span.end, span.type
            if rng.random() < jitter:
                start += rng.randint(-2, 2)
                end += rng.randint(-2, 2)
            if rng.random() < retype:
                etype = rng.choice(TYPES_10)
            add(start, end, etype)
        for _ in range(rng.randrange(extra + 1)):
            start = rng.randrange(max(1, len(text) - 8))
            add(start, start + rng.randint(1, 8), rng.choice(TYPES_10))
        pred.add(Document(doc_id, text, entities))
    return pred
