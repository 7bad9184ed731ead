"""Entity-level majority voting over per-model predictions, and composition search.

Votes pool only on identical (start, end, type) triples; each member model
casts at most one vote per triple, and every entity type is voted on
independently, so the ensemble output may contain overlapping spans and
multiple types on one passage.
"""

import itertools
from dataclasses import dataclass, field

from .brat import Corpus, Document, EntitySpan
from . import evaluation


@dataclass
class PredictionSet:
    model_name: str
    predictions: Corpus


@dataclass
class EnsembleConfig:
    members: list[str]
    quorum: str = "strict-majority"  # or "at-least"
    min_votes: int = 0  # used when quorum == "at-least"

    def accepts(self, votes: int) -> bool:
        if self.quorum == "strict-majority":
            return 2 * votes > len(self.members)
        if self.quorum == "at-least":
            return votes >= self.min_votes
        raise ValueError(f"unknown quorum rule {self.quorum!r}")


@dataclass
class VoteTally:
    # doc id -> (start, end, type) -> set of model names
    votes: dict[str, dict[tuple[int, int, str], set[str]]] = field(default_factory=dict)
    texts: dict[str, str] = field(default_factory=dict)


def tally_votes(sets: list[PredictionSet]) -> VoteTally:
    names = [s.model_name for s in sets]
    if len(set(names)) != len(names):
        raise ValueError(f"duplicate model names in {names}")
    tally = VoteTally()
    for pset in sets:
        for doc_id in sorted(pset.predictions.documents):
            doc = pset.predictions[doc_id]
            if doc.text and doc_id not in tally.texts:
                tally.texts[doc_id] = doc.text
            per_doc = tally.votes.setdefault(doc_id, {})
            for span in doc.entities:
                per_doc.setdefault(span.triple, set()).add(pset.model_name)
    return tally


def majority_vote(tally: VoteTally, config: EnsembleConfig) -> Corpus:
    """Emit every triple whose vote count meets the quorum.

    Surfaces are recomputed from the document texts captured in the tally.
    """
    members = set(config.members)
    corpus = Corpus()
    for doc_id in sorted(tally.votes):
        text = tally.texts.get(doc_id, "")
        entities = []
        for (start, end, etype), voters in tally.votes[doc_id].items():
            rogue = voters - members
            if rogue:
                raise ValueError(f"votes from non-member models: {sorted(rogue)}")
            if config.accepts(len(voters)):
                entities.append(EntitySpan(etype, start, end, text[start:end]))
        entities.sort(key=lambda e: (e.start, e.end, e.type))
        corpus.add(Document(doc_id, text, entities))
    return corpus


@dataclass
class CompositionResult:
    members: tuple[str, ...]
    exact: evaluation.Metrics
    relaxed: evaluation.Metrics


def search_composition(
    sets: list[PredictionSet], gold: Corpus, min_size: int, max_size: int
) -> list[CompositionResult]:
    """Evaluate every member subset of size min_size..max_size under
    strict-majority voting, ranked by overall exact F1 (descending; ties
    broken by smaller subset, then lexicographic member names)."""
    if not (2 <= min_size <= max_size <= len(sets)):
        raise ValueError(f"need 2 <= min_size <= max_size <= {len(sets)}")
    missing = sorted(
        {d for s in sets for d in s.predictions.documents} - set(gold.documents)
    )
    if missing:
        raise ValueError(f"prediction documents missing from gold corpus: {', '.join(missing)}")

    by_name = sorted(sets, key=lambda s: s.model_name)
    results = []
    for size in range(min_size, max_size + 1):
        for subset in itertools.combinations(by_name, size):
            config = EnsembleConfig(members=[s.model_name for s in subset])
            voted = majority_vote(tally_votes(list(subset)), config)
            for doc_id in gold.documents:  # evaluate over the full gold corpus
                if doc_id not in voted:
                    voted.add(Document(doc_id, gold[doc_id].text, []))
            exact = evaluation.compute_metrics(evaluation.match_exact(gold, voted))["ALL"]
            relaxed = evaluation.compute_metrics(evaluation.match_relaxed(gold, voted))["ALL"]
            results.append(CompositionResult(tuple(config.members), exact, relaxed))
    results.sort(key=lambda r: (-r.exact.f1, len(r.members), r.members))
    return results


def composition_report_tsv(results: list[CompositionResult]) -> str:
    lines = [
        "members\texact_precision\texact_recall\texact_f1"
        "\trelaxed_precision\trelaxed_recall\trelaxed_f1\n"
    ]
    for r in results:
        lines.append(
            ",".join(r.members)
            + f"\t{r.exact.precision:.4f}\t{r.exact.recall:.4f}\t{r.exact.f1:.4f}"
            + f"\t{r.relaxed.precision:.4f}\t{r.relaxed.recall:.4f}\t{r.relaxed.f1:.4f}\n"
        )
    return "".join(lines)
