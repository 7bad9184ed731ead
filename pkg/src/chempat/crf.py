"""Hand-featured linear-chain CRF: feature template, training, Viterbi decoding.

Features are drawn from a +/-2 token window (word forms, casing patterns,
token type, affixes, digit-size and character-combination flags), with no
part-of-speech tags and no gazetteers. Training maximizes the L2-regularized
conditional log-likelihood by deterministic full-batch gradient ascent with
backtracking line search; all chart computations are in log space.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .brat import Corpus, EntitySpan
from .textproc import Token, decode_bio, encode_bio, resolve_overlaps, tokenize

log = logging.getLogger(__name__)

MODEL_MAGIC = "CRFTAG v1"


@dataclass
class TrainConfig:
    l2: float = 0.1
    max_iterations: int = 200
    tolerance: float = 1e-6
    seed: int = 0  # reserved; training is deterministic


@dataclass
class CrfModel:
    labels: list[str]
    feature_index: dict[str, int]
    emissions: np.ndarray   # (num_features, num_labels)
    transitions: np.ndarray  # (num_labels, num_labels), row = previous label
    l2: float

    @property
    def weights(self) -> np.ndarray:
        """Flat weight vector: emissions row-major, then transitions."""
        return np.concatenate([self.emissions.ravel(), self.transitions.ravel()])

    def set_weights(self, w: np.ndarray) -> None:
        nf, nl = len(self.feature_index), len(self.labels)
        self.emissions = w[: nf * nl].reshape(nf, nl).copy()
        self.transitions = w[nf * nl:].reshape(nl, nl).copy()


def _token_type(s: str) -> str:
    if s.isdigit():
        return "digit"
    if s.isalpha():
        return "word"
    if not any(c.isalnum() for c in s):
        return "symbol"
    return "mixed"


def _cap_pattern(s: str) -> str:
    out = []
    for c in s:
        if c.isupper():
            out.append("A")
        elif c.islower():
            out.append("a")
        elif c.isdigit():
            out.append("0")
        else:
            out.append("-")
    return "".join(out)


def extract_features(tokens: list[Token], i: int) -> list[str]:
    """Feature strings for position i over the +/-2 window, sorted."""
    feats = set()
    n = len(tokens)
    for d in (-2, -1, 0, 1, 2):
        tag = "@0" if d == 0 else f"@{d:+d}"
        j = i + d
        if j < 0:
            feats.add(f"BOS{tag}")
            continue
        if j >= n:
            feats.add(f"EOS{tag}")
            continue
        w = tokens[j].surface
        feats.add(f"w={w}{tag}")
        feats.add(f"lw={w.lower()}{tag}")
        feats.add(f"pat={_cap_pattern(w)}{tag}")
        ttype = _token_type(w)
        feats.add(f"type={ttype}{tag}")
        if d == 0:
            for k in range(1, 5):
                if len(w) >= k:
                    feats.add(f"pre{k}={w[:k]}{tag}")
                    feats.add(f"suf{k}={w[-k:]}{tag}")
        if w.isdigit() and len(w) in (2, 4):
            feats.add(f"dlen={len(w)}{tag}")
        if any(c.isdigit() for c in w) and any(c.isalpha() for c in w):
            feats.add(f"has_digit_and_alpha{tag}")
        if "-" in w:
            feats.add(f"has_hyphen{tag}")
        if "," in w:
            feats.add(f"has_comma{tag}")
        if "." in w:
            feats.add(f"has_period{tag}")
        if w.isupper():
            feats.add(f"all_upper{tag}")
        if w.islower():
            feats.add(f"all_lower{tag}")
        if w.isalpha():
            feats.add(f"is_alpha{tag}")
        if w.isdigit():
            feats.add(f"is_digit{tag}")
        if ttype == "symbol":
            feats.add(f"is_symbol{tag}")
    return sorted(feats)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    return np.squeeze(m, axis=axis) + np.log(np.sum(np.exp(a - m), axis=axis))


def _feature_ids(model: CrfModel, feats: list[list[str]]) -> list[np.ndarray]:
    """Known-feature id arrays per position; unknown features contribute nothing."""
    idx = model.feature_index
    return [
        np.array(sorted(idx[f] for f in fv if f in idx), dtype=np.intp) for fv in feats
    ]


def _emission_scores(emissions: np.ndarray, fids: list[np.ndarray]) -> np.ndarray:
    n, nl = len(fids), emissions.shape[1]
    em = np.zeros((n, nl))
    for t, ids in enumerate(fids):
        if len(ids):
            em[t] = emissions[ids].sum(axis=0)
    return em


def _label_ids(model: CrfModel, labels: list[str]) -> np.ndarray:
    pos = {lab: k for k, lab in enumerate(model.labels)}
    try:
        return np.array([pos[lab] for lab in labels], dtype=np.intp)
    except KeyError as exc:
        raise ValueError(f"label {exc} not in model label set") from None


def _path_score(em: np.ndarray, trans: np.ndarray, y: np.ndarray) -> float:
    s = float(em[np.arange(len(y)), y].sum())
    if len(y) > 1:
        s += float(trans[y[:-1], y[1:]].sum())
    return s


def _forward_logz(em: np.ndarray, trans: np.ndarray) -> float:
    alpha = em[0].copy()
    for t in range(1, len(em)):
        alpha = em[t] + _logsumexp(alpha[:, None] + trans, axis=0)
    return float(_logsumexp(alpha, axis=0))


def _marginals(em: np.ndarray, trans: np.ndarray):
    """Node marginals (n, L), summed edge marginals (L, L), and log Z."""
    n, nl = em.shape
    alpha = np.empty((n, nl))
    beta = np.empty((n, nl))
    alpha[0] = em[0]
    for t in range(1, n):
        alpha[t] = em[t] + _logsumexp(alpha[t - 1][:, None] + trans, axis=0)
    beta[n - 1] = 0.0
    for t in range(n - 2, -1, -1):
        beta[t] = _logsumexp(trans + (em[t + 1] + beta[t + 1])[None, :], axis=1)
    logz = float(_logsumexp(alpha[-1], axis=0))
    node = np.exp(alpha + beta - logz)
    edge = np.zeros((nl, nl))
    for t in range(1, n):
        edge += np.exp(alpha[t - 1][:, None] + trans + (em[t] + beta[t])[None, :] - logz)
    return node, edge, logz


def score_sequence(model: CrfModel, feats: list[list[str]], labels: list[str]) -> float:
    """Unnormalized log score of a labeling (emissions plus transitions)."""
    if len(feats) != len(labels):
        raise ValueError(f"{len(feats)} positions but {len(labels)} labels")
    fids = _feature_ids(model, feats)
    em = _emission_scores(model.emissions, fids)
    return _path_score(em, model.transitions, _label_ids(model, labels))


def log_partition(model: CrfModel, feats: list[list[str]]) -> float:
    """Log normalizer of the label distribution for one sequence (forward pass)."""
    if not feats:
        raise ValueError("empty sequence")
    fids = _feature_ids(model, feats)
    em = _emission_scores(model.emissions, fids)
    return _forward_logz(em, model.transitions)


def log_likelihood_and_gradient(model: CrfModel, batch) -> tuple[float, np.ndarray]:
    """Regularized conditional log-likelihood and its gradient (flat vector).

    `batch` is a list of (feature vectors, gold BIO labels) pairs. The
    gradient layout matches CrfModel.weights: emissions row-major, then
    transitions. Gradient = empirical counts - expected counts - 2*l2*w.
    """
    nf, nl = len(model.feature_index), len(model.labels)
    ge = np.zeros((nf, nl))
    gt = np.zeros((nl, nl))
    ll = 0.0
    for feats, labels in batch:
        if len(feats) != len(labels):
            raise ValueError("feature/label length mismatch")
        fids = _feature_ids(model, feats)
        y = _label_ids(model, labels)
        em = _emission_scores(model.emissions, fids)
        node, edge, logz = _marginals(em, model.transitions)
        ll += _path_score(em, model.transitions, y) - logz
        for t, ids in enumerate(fids):
            if len(ids):
                ge[ids, y[t]] += 1.0
                ge[ids] -= node[t]
        gt -= edge
        if len(y) > 1:
            np.add.at(gt, (y[:-1], y[1:]), 1.0)
    w = model.weights
    ll -= model.l2 * float(w @ w)
    grad = np.concatenate([ge.ravel(), gt.ravel()]) - 2.0 * model.l2 * w
    if not (np.isfinite(ll) and np.all(np.isfinite(grad))):
        raise FloatingPointError("non-finite log-likelihood or gradient")
    return ll, grad


def viterbi(model: CrfModel, feats: list[list[str]]) -> list[str]:
    """Argmax labeling; ties prefer the lower label index at each backtrace step."""
    if not feats:
        raise ValueError("empty sequence")
    fids = _feature_ids(model, feats)
    em = _emission_scores(model.emissions, fids)
    n, nl = em.shape
    trans = model.transitions
    delta = em[0].copy()
    back = np.zeros((n, nl), dtype=np.intp)
    for t in range(1, n):
        cand = delta[:, None] + trans
        back[t] = np.argmax(cand, axis=0)  # first (lowest) index on ties
        delta = em[t] + cand[back[t], np.arange(nl)]
    path = [int(np.argmax(delta))]
    for t in range(n - 1, 0, -1):
        path.append(int(back[t, path[-1]]))
    path.reverse()
    return [model.labels[k] for k in path]


def _prepare_training_data(corpus: Corpus):
    """Tokenized, BIO-encoded sequences in document-id order."""
    sequences = []
    label_set = set()
    for doc_id in sorted(corpus.documents):
        doc = corpus[doc_id]
        tokens = tokenize(doc.text)
        if not tokens:
            continue
        labels = encode_bio(tokens, resolve_overlaps(doc.entities))
        feats = [extract_features(tokens, i) for i in range(len(tokens))]
        sequences.append((feats, labels))
        label_set.update(labels)
    label_set.discard("O")
    return sequences, ["O"] + sorted(label_set)


def train(corpus: Corpus, config: TrainConfig | None = None):
    """Train a CRF on a corpus; returns (model, [(iteration, objective), ...]).

    Deterministic full-batch gradient ascent with backtracking (Armijo)
    line search; accepted steps never decrease the objective.
    """
    if config is None:
        config = TrainConfig()
    sequences, labels = _prepare_training_data(corpus)
    if not sequences:
        raise ValueError("empty corpus")
    feature_index: dict[str, int] = {}
    for feats, _ in sequences:
        for fv in feats:
            for f in fv:
                if f not in feature_index:
                    feature_index[f] = len(feature_index)
    nf, nl = len(feature_index), len(labels)
    model = CrfModel(labels, feature_index, np.zeros((nf, nl)), np.zeros((nl, nl)), config.l2)

    fid_seqs = [(_feature_ids(model, feats), _label_ids(model, lab)) for feats, lab in sequences]

    def objective(w: np.ndarray) -> float:
        em_w = w[: nf * nl].reshape(nf, nl)
        tr_w = w[nf * nl:].reshape(nl, nl)
        ll = 0.0
        for fids, y in fid_seqs:
            em = _emission_scores(em_w, fids)
            ll += _path_score(em, tr_w, y) - _forward_logz(em, tr_w)
        return ll - config.l2 * float(w @ w)

    batch = sequences
    w = model.weights
    obj, grad = log_likelihood_and_gradient(model, batch)
    history = [(0, obj)]
    step = 1.0
    for it in range(1, config.max_iterations + 1):
        gnorm2 = float(grad @ grad)
        if gnorm2 == 0.0:
            break
        step = min(step * 2.0, 1.0)
        accepted = False
        while step > 1e-14:
            w_new = w + step * grad
            obj_new = objective(w_new)
            if obj_new >= obj + 1e-4 * step * gnorm2:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        rel_change = abs(obj_new - obj) / (abs(obj) + 1e-12)
        w = w_new
        model.set_weights(w)
        obj, grad = log_likelihood_and_gradient(model, batch)
        history.append((it, obj))
        log.info("iteration %d: objective %.6f (step %.3g)", it, obj, step)
        if rel_change < config.tolerance:
            break
    model.set_weights(w)
    return model, history


def tag_document(model: CrfModel, text: str) -> list[EntitySpan]:
    """Tokenize, feature-extract, decode, and return predicted entity spans."""
    tokens = tokenize(text)
    if not tokens:
        return []
    feats = [extract_features(tokens, i) for i in range(len(tokens))]
    labels = viterbi(model, feats)
    return decode_bio(text, tokens, labels)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def save_model(model: CrfModel, path) -> None:
    """Write the versioned text model format (round-trips bit-exactly)."""
    lines = [MODEL_MAGIC + "\n"]
    lines.append("labels\t" + ",".join(model.labels) + "\n")
    lines.append("l2\t" + _fmt(model.l2) + "\n")
    feats = sorted(model.feature_index, key=model.feature_index.get)
    for f in feats:
        row = model.emissions[model.feature_index[f]]
        lines.append("F\t" + f + "\t" + ",".join(_fmt(v) for v in row) + "\n")
    for a, la in enumerate(model.labels):
        for b, lb in enumerate(model.labels):
            lines.append(f"T\t{la},{lb}\t" + _fmt(model.transitions[a, b]) + "\n")
    Path(path).write_text("".join(lines), encoding="utf-8")


def load_model(path) -> CrfModel:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0] != MODEL_MAGIC:
        raise ValueError(f"{path}: not a {MODEL_MAGIC!r} model file")
    if not lines[1].startswith("labels\t") or not lines[2].startswith("l2\t"):
        raise ValueError(f"{path}: malformed model header")
    labels = lines[1].split("\t", 1)[1].split(",")
    l2 = float(lines[2].split("\t", 1)[1])
    nl = len(labels)
    lpos = {lab: k for k, lab in enumerate(labels)}
    feature_index: dict[str, int] = {}
    rows = []
    trans = np.zeros((nl, nl))
    for line in lines[3:]:
        kind, rest = line.split("\t", 1)
        if kind == "F":
            feat, vals = rest.split("\t")
            feature_index[feat] = len(feature_index)
            rows.append([float(v) for v in vals.split(",")])
        elif kind == "T":
            pair, val = rest.split("\t")
            a, b = pair.rsplit(",", 1)
            trans[lpos[a], lpos[b]] = float(val)
        else:
            raise ValueError(f"{path}: unknown record type {kind!r}")
    emissions = np.array(rows).reshape(len(rows), nl) if rows else np.zeros((0, nl))
    return CrfModel(labels, feature_index, emissions, trans, l2)
