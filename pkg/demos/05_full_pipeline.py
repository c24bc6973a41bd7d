"""End to end on a synthetic fixture: retrieve, re-rank, evaluate, fuse,
and run the re-ranking-depth diagnostic.

Everything here also exists as CLI subcommands (see the README); this demo
uses the library API so each hand-off is visible.

Run with: python3 demos/05_full_pipeline.py
"""

from clickrank.bm25 import batch_search, build_index
from clickrank.corpus import build_qrels_from_clicks
from clickrank.evaluation import depth_sweep, evaluate_run, fuse_runs
from clickrank.rankers import (
    DenseScorer,
    GradeOracleScorer,
    KernelBank,
    KernelScorer,
    dense_retrieve,
    rerank,
    train_kernel_weights,
)
from clickrank.runs import RankedRun
from clickrank.synth import FixtureSpec, generate_fixture
from clickrank.triples import SamplingConfig, generate_triples

# 1. A corpus with planted relevance: clicks, vectors, and token matrices
#    all agree on which passages are relevant to which queries.
fixture = generate_fixture(FixtureSpec(n_passages=800, n_queries=60, seed=17))
qrels = build_qrels_from_clicks(fixture.clicks, "dctr", (0.1, 0.3))

# 2. First stage: BM25 over the inverted index.
index = build_index(fixture.store)
bm25_run = batch_search(index, fixture.queries, k=500)

# 3. Dense retrieval over the full collection (exact scan, no index).
dense_run = RankedRun(name="dense", stage="dense-retrieval")
for qid in sorted(fixture.query_vectors.ids):
    dense_run.results[qid] = dense_retrieve(
        fixture.passage_vectors, fixture.query_vectors.vector(qid), 500
    )

# 4. Train the kernel head on sampled triples and re-rank BM25's top 200.
triples = generate_triples(
    fixture.queries, qrels, index,
    SamplingConfig(candidate_depth=500, max_negatives_per_positive=20, seed=4),
).triples
bank = KernelBank.default()
weights, telemetry = train_kernel_weights(
    triples, fixture.query_matrices, fixture.passage_matrices, bank,
    lr=0.01, epochs=300, seed=2,
)
print(f"trained on {telemetry.resolved_triples} triples, "
      f"pairwise accuracy {telemetry.pairwise_accuracy:.2f}")
kernel_run = rerank(
    bm25_run, 200,
    KernelScorer(fixture.query_matrices, fixture.passage_matrices, bank, weights),
)
dense_rerank = rerank(
    bm25_run, 200, DenseScorer(fixture.query_vectors, fixture.passage_vectors)
)

# 5. Evaluate everything per frequency split.
print(f"\n{'run':<14} {'nDCG@10':>8} {'MRR@10':>8} {'R@100':>8} {'J@10':>8}")
for run in (bm25_run, dense_run, kernel_run, dense_rerank):
    metrics = evaluate_run(run, qrels).splits["all"].metrics
    print(f"{run.name:<14} {metrics['nDCG@10']:>8.4f} {metrics['MRR@10']:>8.4f} "
          f"{metrics['R@100']:>8.4f} {metrics['J@10']:>8.4f}")

report = evaluate_run(dense_run, qrels, fixture.split_of)
print("\ndense nDCG@10 by split:",
      {s: round(r.metrics["nDCG@10"], 4) for s, r in report.splits.items()})

# 6. Ensemble: min-max normalize scores per query and average across runs.
fused = fuse_runs([kernel_run, dense_rerank], run_name="ensemble")
fused_metrics = evaluate_run(fused, qrels).splits["all"].metrics
print("\nensemble nDCG@10:", round(fused_metrics["nDCG@10"], 4))

# 7. The depth diagnostic. A healthy scorer holds or improves as more
#    candidates are exposed; a scorer trained on poisoned negatives decays.
table = depth_sweep(bm25_run, GradeOracleScorer(qrels), [50, 100, 200], qrels)
print("\noracle-scorer depth sweep (should be non-decreasing):",
      [round(table[d]["nDCG@10"], 4) for d in (50, 100, 200)])
