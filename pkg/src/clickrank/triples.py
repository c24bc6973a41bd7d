"""Training-triple generation with relevant-pool-safe negative sampling.

For every training query the first stage retrieves a deep candidate pool;
for every (query, clicked-positive) pair up to ``max_negatives_per_positive``
negatives are drawn uniformly without replacement from that pool after
removing every passage with any positive grade for the query. Candidate
rank positions are discarded. The pooled triples are shuffled under the
configured seed and truncated to ``triple_cap``.

A legacy mode reproduces the known-bad alternative for A/B diagnosis:
negatives drawn only from candidates ranked above the positive, without the
relevant-pool guarantee that the corrected policy provides.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .bm25 import InvertedIndex
from .corpus import PassageStore, Qrels, QuerySet

logger = logging.getLogger(__name__)

SKIP_WARN_FRACTION = 0.10


@dataclass(frozen=True, order=True)
class TrainingTriple:
    query_id: str
    positive_id: str
    negative_id: str

    def __post_init__(self) -> None:
        if self.positive_id == self.negative_id:
            raise ValueError(
                f"triple for query {self.query_id!r}: positive and negative are both "
                f"{self.positive_id!r}"
            )


@dataclass(frozen=True)
class SamplingConfig:
    candidate_depth: int = 500
    max_negatives_per_positive: int = 20
    triple_cap: int = 10_000_000
    seed: int = 0
    legacy_mode: bool = False

    def __post_init__(self) -> None:
        if self.max_negatives_per_positive < 1:
            raise ValueError("max_negatives_per_positive must be >= 1")
        if self.candidate_depth < self.max_negatives_per_positive:
            raise ValueError(
                "candidate_depth must be >= max_negatives_per_positive "
                f"({self.candidate_depth} < {self.max_negatives_per_positive})"
            )
        if self.triple_cap < 1:
            raise ValueError("triple_cap must be >= 1")


@dataclass
class GenerationReport:
    triples: list[TrainingTriple]
    queries_processed: int = 0
    skipped_missing_qrels: int = 0
    skipped_no_eligible: int = 0
    truncated: bool = False


def stable_query_seed(seed: int, query_id: str) -> int:
    """Per-query RNG seed: the global seed XOR a stable 64-bit id digest.

    Python's built-in hash is salted per process, so a cryptographic digest
    keeps the stream identical across runs and worker layouts.
    """
    digest = hashlib.sha256(query_id.encode("utf-8")).digest()
    h = int.from_bytes(digest[:8], "little")
    return (seed ^ h) & 0xFFFFFFFFFFFFFFFF


def candidate_pool(index: InvertedIndex, query_text: str, depth: int) -> list[str]:
    """First-stage candidate ids in rank order."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    return [pid for pid, _ in index.search(query_text, depth)]


def sample_negatives(
    candidates: Sequence[str],
    relevant_pool: set[str],
    max_n: int,
    rng: np.random.Generator,
) -> list[str]:
    """Uniform without-replacement draw from candidates outside the relevant pool.

    Returns min(max_n, #eligible) ids in draw order; rank positions of the
    candidates are not carried along.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    eligible = [c for c in candidates if c not in relevant_pool]
    if not eligible:
        return []
    n = min(max_n, len(eligible))
    picks = rng.choice(len(eligible), size=n, replace=False)
    return [eligible[i] for i in picks]


def generate_triples(
    queries: QuerySet,
    qrels: Qrels,
    index: InvertedIndex,
    config: SamplingConfig = SamplingConfig(),
) -> GenerationReport:
    """Generate training triples for every query with at least one positive.

    Queries are processed in sorted id order with a per-query RNG stream, so
    the output is a pure function of (inputs, seed) regardless of execution
    order. Queries absent from the qrels, or with positives but no eligible
    negatives, are skipped and counted.
    """
    triples: list[TrainingTriple] = []
    report = GenerationReport(triples)
    for qid in sorted(q.id for q in queries):
        positives = sorted(qrels.relevant_pool(qid))
        if not positives:
            report.skipped_missing_qrels += 1
            continue
        pool = candidate_pool(index, queries.text(qid), config.candidate_depth)
        rng = np.random.default_rng(stable_query_seed(config.seed, qid))
        produced = 0
        for positive in positives:
            if config.legacy_mode:
                negatives = _legacy_sample(
                    pool, positive, set(positives), config.max_negatives_per_positive, rng
                )
            else:
                negatives = sample_negatives(
                    pool, set(positives), config.max_negatives_per_positive, rng
                )
            for negative in negatives:
                triples.append(TrainingTriple(qid, positive, negative))
                produced += 1
        if produced == 0:
            report.skipped_no_eligible += 1
        else:
            report.queries_processed += 1

    skipped = report.skipped_missing_qrels + report.skipped_no_eligible
    total = len(queries)
    if total and skipped / total > SKIP_WARN_FRACTION:
        logger.warning(
            "skipped %d of %d queries (%.0f%%); the corpus may be degenerate",
            skipped,
            total,
            100.0 * skipped / total,
        )
    if not triples:
        raise ValueError("no training triples produced")

    shuffle_rng = np.random.default_rng(config.seed)
    order = shuffle_rng.permutation(len(triples))
    shuffled = [triples[i] for i in order]
    if len(shuffled) > config.triple_cap:
        shuffled = shuffled[: config.triple_cap]
        report.truncated = True
    report.triples = shuffled
    return report


def _legacy_sample(
    candidates: Sequence[str],
    positive: str,
    clicked: set[str],
    max_n: int,
    rng: np.random.Generator,
) -> list[str]:
    # known-bad policy: non-clicked candidates ranked above the positive;
    # nothing protects against unclicked-but-relevant passages up there
    try:
        cut = candidates.index(positive)
    except ValueError:
        return []
    eligible = [c for c in candidates[:cut] if c not in clicked]
    if not eligible:
        return []
    n = min(max_n, len(eligible))
    picks = rng.choice(len(eligible), size=n, replace=False)
    return [eligible[i] for i in picks]


def write_triples(triples: Iterable[TrainingTriple], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for t in triples:
            f.write(f"{t.query_id}\t{t.positive_id}\t{t.negative_id}\n")


def read_triples(path: str | Path) -> list[TrainingTriple]:
    triples = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}: line {lineno}: expected 3 tab-separated ids")
            triples.append(TrainingTriple(*parts))
    return triples


def write_text_triples(
    triples: Iterable[TrainingTriple],
    store: PassageStore,
    queries: QuerySet,
    path: str | Path,
) -> None:
    """Materialize id triples as text triples for trainer consumption.

    Id triples are the canonical artifact (two orders of magnitude smaller
    and lossless given the collection); this expands them on demand.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for t in triples:
            f.write(
                f"{queries.text(t.query_id)}\t{store.text(t.positive_id)}\t"
                f"{store.text(t.negative_id)}\n"
            )
