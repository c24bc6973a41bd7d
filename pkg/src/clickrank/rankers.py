"""Scoring heads and re-ranking.

Three scoring families over ingested embeddings:

* dense: one vector per query/passage, scored by raw dot product;
* late interaction: per-token matrices, scored by summing each query
  token's maximum dot product against the passage tokens;
* kernel pooling: a cosine match matrix soft-binned by Gaussian kernels,
  reduced to per-kernel features and combined by a trained linear layer.

Scores from an opaque external model can be routed through the same
re-ranking path via a score file (``query_id<TAB>passage_id<TAB>score``).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .embeddings import TokenMatrixStore, VectorStore
from .runs import RankedRun, canonical_order

logger = logging.getLogger(__name__)

KERNEL_EPSILON = 1e-10


class MissingEmbeddingError(LookupError):
    """A scorer had no representation for a query or passage id."""


@dataclass(frozen=True)
class KernelBank:
    """Gaussian kernel centers and widths for match-matrix pooling."""

    mus: tuple[float, ...]
    sigmas: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.mus) != len(self.sigmas):
            raise ValueError("mus and sigmas must have the same length")
        if not self.mus:
            raise ValueError("kernel bank must contain at least one kernel")
        if any(not -1.0 <= m <= 1.0 for m in self.mus):
            raise ValueError(f"kernel centers must lie in [-1, 1], got {self.mus}")
        if any(a <= b for a, b in zip(self.mus, self.mus[1:])):
            raise ValueError(f"kernel centers must be strictly descending, got {self.mus}")
        if any(s <= 0 for s in self.sigmas):
            raise ValueError(f"kernel widths must be positive, got {self.sigmas}")

    def __len__(self) -> int:
        return len(self.mus)

    @classmethod
    def default(cls) -> "KernelBank":
        """11 kernels: an exact-match kernel at 1.0 plus ten centers evenly
        spaced from 0.9 down to -0.9; tight width on the exact-match kernel,
        0.1 elsewhere."""
        mus = (1.0,) + tuple(round(0.9 - 0.2 * i, 1) for i in range(10))
        sigmas = tuple(0.001 if mu == 1.0 else 0.1 for mu in mus)
        return cls(mus, sigmas)


@dataclass
class KernelWeights:
    w: np.ndarray
    bias: float

    def __post_init__(self) -> None:
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.w.ndim != 1:
            raise ValueError("kernel weights must be a 1-d vector")
        if not (np.all(np.isfinite(self.w)) and np.isfinite(self.bias)):
            raise ValueError("kernel weights must be finite")


def write_weights(bank: KernelBank, weights: KernelWeights, path: str | Path) -> None:
    """Text format: one ``mu sigma w`` row per kernel, then ``bias <value>``."""
    if len(weights.w) != len(bank):
        raise ValueError("weight vector size does not match kernel bank")
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for mu, sigma, w in zip(bank.mus, bank.sigmas, weights.w):
            f.write(f"{float(mu)!r} {float(sigma)!r} {float(w)!r}\n")
        f.write(f"bias {float(weights.bias)!r}\n")


def load_weights(path: str | Path) -> tuple[KernelBank, KernelWeights]:
    mus: list[float] = []
    sigmas: list[float] = []
    ws: list[float] = []
    bias: float | None = None
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "bias":
                if len(parts) != 2:
                    raise ValueError(f"{path}: line {lineno}: malformed bias line")
                bias = float(parts[1])
                continue
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 'mu sigma w'")
            mus.append(float(parts[0]))
            sigmas.append(float(parts[1]))
            ws.append(float(parts[2]))
    if bias is None:
        raise ValueError(f"{path}: missing bias line")
    bank = KernelBank(tuple(mus), tuple(sigmas))
    return bank, KernelWeights(np.array(ws), bias)


def _check_similarity(similarity: str) -> None:
    if similarity not in ("dot", "cosine"):
        raise ValueError(f"similarity must be 'dot' or 'cosine', got {similarity!r}")


def dense_score(q_vec: np.ndarray, d_vec: np.ndarray, similarity: str = "dot") -> float:
    """Dot product of a query and a passage vector (cosine selectable)."""
    _check_similarity(similarity)
    q = np.asarray(q_vec, dtype=np.float64)
    d = np.asarray(d_vec, dtype=np.float64)
    if q.shape != d.shape or q.ndim != 1:
        raise ValueError(f"dimension mismatch: {q.shape} vs {d.shape}")
    if similarity == "cosine":
        qn, dn = np.linalg.norm(q), np.linalg.norm(d)
        if qn == 0.0 or dn == 0.0:
            raise ValueError("cosine similarity undefined for a zero-norm vector")
        return float(np.dot(q, d) / (qn * dn))
    return float(np.dot(q, d))


def dense_retrieve(
    store: VectorStore, q_vec: np.ndarray, k: int, similarity: str = "dot"
) -> list[tuple[str, float]]:
    """Exact top-k over the whole store (no approximation)."""
    _check_similarity(similarity)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(store) == 0:
        raise ValueError("cannot retrieve from an empty vector store")
    q = np.asarray(q_vec, dtype=np.float64)
    if q.shape != (store.dim,):
        raise ValueError(f"query dim {q.shape} does not match store dim {store.dim}")
    ids, matrix = store.as_matrix()
    matrix = matrix.astype(np.float64)
    scores = matrix @ q
    if similarity == "cosine":
        norms = np.linalg.norm(matrix, axis=1)
        qn = np.linalg.norm(q)
        if qn == 0.0:
            raise ValueError("cosine similarity undefined for a zero-norm query")
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ValueError(f"zero-norm passage vector {ids[zero[0]]!r}")
        scores = scores / (norms * qn)
    ranked = sorted(zip(ids, scores.tolist()), key=lambda e: (-e[1], e[0]))
    return ranked[:k]


def late_interaction_score(Q: np.ndarray, D: np.ndarray, similarity: str = "dot") -> float:
    """Sum over query tokens of the max dot product against passage tokens.

    Every dot product and the final sum use exactly rounded summation
    (``math.fsum``), so the score is bit-identical under any permutation of
    the rows of Q or D. BLAS reductions do not give that guarantee: their
    summation grouping can change with memory alignment.
    """
    _check_similarity(similarity)
    Q = np.asarray(Q, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if Q.ndim != 2 or D.ndim != 2:
        raise ValueError("expected 2-d token matrices")
    if Q.shape[0] == 0 or D.shape[0] == 0:
        raise ValueError("token matrices must have at least one row")
    if Q.shape[1] != D.shape[1]:
        raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {D.shape[1]}")
    if similarity == "cosine":
        Q, D = _normalized_rows(Q, "query"), _normalized_rows(D, "passage")
    products = Q[:, None, :] * D[None, :, :]
    per_token_best = [
        max(math.fsum(lane) for lane in row) for row in products.tolist()
    ]
    return math.fsum(per_token_best)


def _normalized_rows(M: np.ndarray, name: str) -> np.ndarray:
    norms = np.linalg.norm(M, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"zero-norm {name} token row at index {zero[0]}")
    return M / norms[:, None]


def kernel_features(
    Q: np.ndarray,
    D: np.ndarray,
    bank: KernelBank,
    eps: float = KERNEL_EPSILON,
    similarity: str = "cosine",
) -> np.ndarray:
    """Soft match counts: feature_k = sum_i log(eps + sum_j exp(-(M_ij - mu_k)^2 / (2 sigma_k^2))).

    The match matrix uses cosine similarity clamped to [-1, 1] (the kernel
    centers live there); raw dot products are selectable for experiments.
    """
    _check_similarity(similarity)
    Q = np.asarray(Q, dtype=np.float64)
    D = np.asarray(D, dtype=np.float64)
    if Q.ndim != 2 or D.ndim != 2 or Q.shape[0] == 0 or D.shape[0] == 0:
        raise ValueError("expected non-empty 2-d token matrices")
    if Q.shape[1] != D.shape[1]:
        raise ValueError(f"dimension mismatch: {Q.shape[1]} vs {D.shape[1]}")
    if similarity == "cosine":
        M = _normalized_rows(Q, "query") @ _normalized_rows(D, "passage").T
        # rounding can push |cos| marginally past 1; the kernels assume [-1, 1]
        M = np.clip(M, -1.0, 1.0)
    else:
        M = Q @ D.T
    features = np.empty(len(bank), dtype=np.float64)
    for k, (mu, sigma) in enumerate(zip(bank.mus, bank.sigmas)):
        kernel = np.exp(-((M - mu) ** 2) / (2.0 * sigma * sigma))
        features[k] = np.log(eps + kernel.sum(axis=1)).sum()
    return features


def kernel_score(features: np.ndarray, weights: KernelWeights) -> float:
    features = np.asarray(features, dtype=np.float64)
    if features.shape != weights.w.shape:
        raise ValueError(
            f"feature size {features.shape} does not match weights {weights.w.shape}"
        )
    return float(np.dot(weights.w, features) + weights.bias)


@dataclass
class TrainTelemetry:
    """Diagnostics from triple training.

    pairwise_accuracy is the fraction of training triples whose positive
    outscores its negative under the final weights; a low value flags a
    poisoned training set before any evaluation run does.
    """

    pairwise_accuracy: float
    mean_margin: float
    loss_curve: list[float] = field(default_factory=list)
    resolved_triples: int = 0
    skipped_triples: int = 0


def hinge_loss_and_grad(
    w: np.ndarray,
    bias: float,
    pos_features: np.ndarray,
    neg_features: np.ndarray,
    margin: float = 1.0,
) -> tuple[float, np.ndarray, float]:
    """Mean hinge loss max(0, margin - (s_pos - s_neg)) and its gradient.

    The bias cancels in the score difference, so its gradient is exactly 0;
    it is reported anyway so gradient checks can cover the full parameter
    vector.
    """
    w = np.asarray(w, dtype=np.float64)
    diffs = pos_features - neg_features          # (n, k)
    margins = diffs @ w                          # s_pos - s_neg
    slack = margin - margins
    active = slack > 0.0
    loss = float(np.where(active, slack, 0.0).mean())
    if active.any():
        grad_w = -diffs[active].sum(axis=0) / len(diffs)
    else:
        grad_w = np.zeros_like(w)
    return loss, grad_w, 0.0


def fit_hinge(
    pos_features: np.ndarray,
    neg_features: np.ndarray,
    lr: float = 0.01,
    epochs: int = 100,
    margin: float = 1.0,
    seed: int = 0,
    init_scale: float = 0.01,
    init_w: np.ndarray | None = None,
) -> tuple[np.ndarray, float, TrainTelemetry]:
    """Full-batch gradient descent on the pairwise hinge objective.

    Deterministic given the seed; feature rows are paired (pos_features[i],
    neg_features[i]) per training triple. ``init_w`` overrides the seeded
    random initialization.
    """
    pos = np.asarray(pos_features, dtype=np.float64)
    neg = np.asarray(neg_features, dtype=np.float64)
    if pos.shape != neg.shape or pos.ndim != 2 or pos.shape[0] == 0:
        raise ValueError("need matching non-empty (n, k) feature matrices")
    if init_w is not None:
        w = np.asarray(init_w, dtype=np.float64).copy()
        if w.shape != (pos.shape[1],):
            raise ValueError(f"init_w shape {w.shape} does not match features")
    else:
        rng = np.random.default_rng(seed)
        w = rng.normal(0.0, init_scale, size=pos.shape[1])
    bias = 0.0
    curve: list[float] = []
    for _ in range(epochs):
        loss, grad_w, grad_b = hinge_loss_and_grad(w, bias, pos, neg, margin)
        curve.append(loss)
        w = w - lr * grad_w
        bias = bias - lr * grad_b
    margins = (pos - neg) @ w
    telemetry = TrainTelemetry(
        pairwise_accuracy=float(np.mean(margins > 0.0)),
        mean_margin=float(margins.mean()),
        loss_curve=curve,
        resolved_triples=pos.shape[0],
    )
    return w, bias, telemetry


def train_kernel_weights(
    triples,
    query_matrices: TokenMatrixStore,
    passage_matrices: TokenMatrixStore,
    bank: KernelBank,
    lr: float = 0.01,
    epochs: int = 100,
    margin: float = 1.0,
    seed: int = 0,
) -> tuple[KernelWeights, TrainTelemetry]:
    """Train the kernel-feature linear layer on (query, positive, negative) triples.

    Triples whose query or passages have no stored token matrix are skipped
    and counted; it is an error if none remain.
    """
    pos_rows = []
    neg_rows = []
    skipped = 0
    feature_cache: dict[tuple[str, str], np.ndarray] = {}

    def features(qid: str, pid: str) -> np.ndarray:
        key = (qid, pid)
        if key not in feature_cache:
            feature_cache[key] = kernel_features(
                query_matrices.matrix(qid), passage_matrices.matrix(pid), bank
            )
        return feature_cache[key]

    for triple in triples:
        if (
            triple.query_id not in query_matrices
            or triple.positive_id not in passage_matrices
            or triple.negative_id not in passage_matrices
        ):
            skipped += 1
            continue
        pos_rows.append(features(triple.query_id, triple.positive_id))
        neg_rows.append(features(triple.query_id, triple.negative_id))
    if not pos_rows:
        raise ValueError("no training triples with resolvable token matrices")
    if skipped:
        logger.warning("skipped %d triples with missing token matrices", skipped)

    w, bias, telemetry = fit_hinge(
        np.stack(pos_rows), np.stack(neg_rows), lr=lr, epochs=epochs, margin=margin, seed=seed
    )
    telemetry.skipped_triples = skipped
    return KernelWeights(w, bias), telemetry


# ---------------------------------------------------------------------------
# Scorers: a uniform (query_id, passage_id) -> score interface for re-ranking.
# ---------------------------------------------------------------------------


class DenseScorer:
    name = "dense"

    def __init__(
        self,
        query_vectors: VectorStore,
        passage_vectors: VectorStore,
        similarity: str = "dot",
    ):
        _check_similarity(similarity)
        self.query_vectors = query_vectors
        self.passage_vectors = passage_vectors
        self.similarity = similarity

    def score(self, query_id: str, passage_id: str) -> float:
        if query_id not in self.query_vectors:
            raise MissingEmbeddingError(f"no query vector for {query_id!r}")
        if passage_id not in self.passage_vectors:
            raise MissingEmbeddingError(f"no passage vector for {passage_id!r}")
        return dense_score(
            self.query_vectors.vector(query_id),
            self.passage_vectors.vector(passage_id),
            similarity=self.similarity,
        )


class LateInteractionScorer:
    name = "late_interaction"

    def __init__(
        self,
        query_matrices: TokenMatrixStore,
        passage_matrices: TokenMatrixStore,
        similarity: str = "dot",
    ):
        _check_similarity(similarity)
        self.query_matrices = query_matrices
        self.passage_matrices = passage_matrices
        self.similarity = similarity

    def score(self, query_id: str, passage_id: str) -> float:
        if query_id not in self.query_matrices:
            raise MissingEmbeddingError(f"no query token matrix for {query_id!r}")
        if passage_id not in self.passage_matrices:
            raise MissingEmbeddingError(f"no passage token matrix for {passage_id!r}")
        return late_interaction_score(
            self.query_matrices.matrix(query_id),
            self.passage_matrices.matrix(passage_id),
            similarity=self.similarity,
        )


class KernelScorer:
    name = "kernel"

    def __init__(
        self,
        query_matrices: TokenMatrixStore,
        passage_matrices: TokenMatrixStore,
        bank: KernelBank,
        weights: KernelWeights,
        similarity: str = "cosine",
    ):
        _check_similarity(similarity)
        if len(weights.w) != len(bank):
            raise ValueError("weight vector size does not match kernel bank")
        self.query_matrices = query_matrices
        self.passage_matrices = passage_matrices
        self.bank = bank
        self.weights = weights
        self.similarity = similarity

    def score(self, query_id: str, passage_id: str) -> float:
        if query_id not in self.query_matrices:
            raise MissingEmbeddingError(f"no query token matrix for {query_id!r}")
        if passage_id not in self.passage_matrices:
            raise MissingEmbeddingError(f"no passage token matrix for {passage_id!r}")
        feats = kernel_features(
            self.query_matrices.matrix(query_id),
            self.passage_matrices.matrix(passage_id),
            self.bank,
            similarity=self.similarity,
        )
        return kernel_score(feats, self.weights)


class ExternalScoreScorer:
    """Scores produced by an opaque outside model, loaded from a TSV file."""

    name = "scores"

    def __init__(self, scores: Mapping[tuple[str, str], float]):
        self.scores = dict(scores)

    @classmethod
    def from_file(cls, path: str | Path) -> "ExternalScoreScorer":
        scores: dict[tuple[str, str], float] = {}
        with open(path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ValueError(
                        f"{path}: line {lineno}: expected query_id<TAB>passage_id<TAB>score"
                    )
                qid, pid, score_s = parts
                try:
                    scores[(qid, pid)] = float(score_s)
                except ValueError:
                    raise ValueError(f"{path}: line {lineno}: bad score {score_s!r}") from None
        return cls(scores)

    @classmethod
    def from_run(cls, run: RankedRun) -> "ExternalScoreScorer":
        scores = {
            (qid, pid): score
            for qid, entries in run.results.items()
            for pid, score in entries
        }
        return cls(scores)

    def score(self, query_id: str, passage_id: str) -> float:
        try:
            return self.scores[(query_id, passage_id)]
        except KeyError:
            raise MissingEmbeddingError(
                f"no external score for ({query_id!r}, {passage_id!r})"
            ) from None


class GradeOracleScorer:
    """Scores each passage by its relevance grade (unjudged scores 0).

    Diagnostic scorer: a healthy re-ranker should approach its behavior,
    and under it deeper re-ranking can never hurt rank metrics.
    """

    name = "oracle"

    def __init__(self, qrels):
        self.qrels = qrels

    def score(self, query_id: str, passage_id: str) -> float:
        grade = self.qrels.grade(query_id, passage_id)
        return float(grade) if grade is not None else 0.0


def rerank(
    first_stage: RankedRun,
    depth: int,
    scorer,
    on_missing: str = "error",
    run_name: str | None = None,
) -> RankedRun:
    """Rescore the top ``depth`` candidates of every query and resort.

    Candidates beyond ``depth`` are dropped. The output never contains a
    passage absent from the first stage. ``on_missing`` controls what happens
    when the scorer has no representation for an item: "error" raises,
    "skip" drops the item and counts it.
    """
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if on_missing not in ("error", "skip"):
        raise ValueError(f"on_missing must be 'error' or 'skip', got {on_missing!r}")
    name = run_name or f"{first_stage.name}+{scorer.name}"
    out = RankedRun(name=name, stage="rerank")
    skipped = 0
    for qid, entries in first_stage.results.items():
        rescored: list[tuple[str, float]] = []
        for pid, _ in entries[:depth]:
            try:
                rescored.append((pid, scorer.score(qid, pid)))
            except MissingEmbeddingError:
                if on_missing == "error":
                    raise
                skipped += 1
        out.results[qid] = canonical_order(rescored)
    if skipped:
        logger.warning("rerank dropped %d candidates without embeddings", skipped)
    return out
