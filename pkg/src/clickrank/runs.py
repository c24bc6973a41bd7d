"""Ranked runs: the exchange type between retrieval, re-ranking, and eval.

A run holds, per query, a list of (passage_id, score) ordered by descending
score with ties broken by ascending passage id. Run files use the TREC
format ``qid Q0 pid rank score run_name``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


def canonical_order(entries: Iterable[tuple[str, float]]) -> list[tuple[str, float]]:
    """Sort entries by descending score, ties by ascending passage id.

    Raises on duplicate passage ids: a query may rank a passage only once.
    """
    items = list(entries)
    seen: set[str] = set()
    for pid, _ in items:
        if pid in seen:
            raise ValueError(f"duplicate passage {pid!r} in ranked list")
        seen.add(pid)
    items.sort(key=lambda e: (-e[1], e[0]))
    return items


@dataclass
class RankedRun:
    """Per-query ordered result lists plus run metadata."""

    name: str
    stage: str = ""
    results: dict[str, list[tuple[str, float]]] = field(default_factory=dict)

    def add(self, query_id: str, entries: Iterable[tuple[str, float]]) -> None:
        if query_id in self.results:
            raise ValueError(f"query {query_id!r} already present in run {self.name!r}")
        self.results[query_id] = canonical_order(entries)

    @property
    def query_ids(self) -> list[str]:
        return list(self.results)

    def __contains__(self, query_id: str) -> bool:
        return query_id in self.results

    def __getitem__(self, query_id: str) -> list[tuple[str, float]]:
        return self.results[query_id]

    def __len__(self) -> int:
        return len(self.results)

    def truncated(self, depth: int) -> "RankedRun":
        """Copy of this run keeping only the top ``depth`` entries per query."""
        if depth < 1:
            raise ValueError(f"depth must be >= 1, got {depth}")
        out = RankedRun(name=self.name, stage=self.stage)
        for qid, entries in self.results.items():
            out.results[qid] = list(entries[:depth])
        return out


def write_run(run: RankedRun, path: str | Path) -> None:
    """Write a run in TREC format; queries sorted by id for stable bytes.

    Scores are written with ``repr`` so reading the file back reproduces the
    exact float values.
    """
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for qid in sorted(run.results):
            for rank, (pid, score) in enumerate(run.results[qid], start=1):
                f.write(f"{qid} Q0 {pid} {rank} {float(score)!r} {run.name}\n")


def read_run(path: str | Path, name: str | None = None) -> RankedRun:
    """Read a TREC run file.

    Entries are re-canonicalized (score desc, passage id asc), so the result
    is independent of the file's line order.
    """
    per_query: dict[str, list[tuple[str, float]]] = {}
    run_name = name
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 6:
                raise ValueError(
                    f"{path}: line {lineno}: expected 'qid Q0 pid rank score run'"
                )
            qid, _, pid, _, score_s, file_run_name = parts
            try:
                score = float(score_s)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: bad score {score_s!r}") from None
            if run_name is None:
                run_name = file_run_name
            per_query.setdefault(qid, []).append((pid, score))
    run = RankedRun(name=run_name or "run", stage="loaded")
    for qid in sorted(per_query):
        run.add(qid, per_query[qid])
    return run


def runs_cover_same_queries(runs: Sequence[RankedRun]) -> None:
    """Raise unless all runs share one query set; names the missing ids."""
    if len(runs) < 2:
        raise ValueError("need at least two runs")
    reference = set(runs[0].query_ids)
    for other in runs[1:]:
        qids = set(other.query_ids)
        if qids != reference:
            missing = sorted(reference ^ qids)
            raise ValueError(
                f"runs {runs[0].name!r} and {other.name!r} rank different query "
                f"sets; mismatched ids: {missing[:20]}"
            )
