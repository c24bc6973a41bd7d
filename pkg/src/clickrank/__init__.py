"""Retrieval experimentation toolkit.

Pipeline pieces: passage/query/click-log ingestion, BM25 inverted-index
retrieval, click-derived graded qrels, training-triple generation with
relevant-pool-safe negative sampling, dense / late-interaction / kernel
scoring heads over externally produced embeddings, run fusion, and a
frequency-split evaluation harness.
"""

__version__ = "0.1.0"
