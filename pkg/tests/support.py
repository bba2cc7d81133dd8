"""Shared experiment setups for the test suite (imported by several test files)."""

from dataclasses import replace
from functools import lru_cache

import numpy as np

from mixnmt.align import align_document_pair, calibrate_params, filter_pairs, train_model1
from mixnmt.corpus import generate_synthetic_corpus, generate_synthetic_documents, make_cipher_spec
from mixnmt.evalcli import BENCHMARK_CONFIG, cipher_benchmark, run_pipeline
from mixnmt.mixture import TrainConfig, dynamic_pretrain

# --- alignment -------------------------------------------------------------------

NOISE = dict(misalignment_rate=0.1, identical_rate=0.05, wrong_language_rate=0.05)


@lru_cache(maxsize=None)
def alignment_setup(spec_seed: int = 3, num_documents: int = 100):
    """Single-domain cipher documents, a t-table from a seed corpus, params calibrated on held-out pairs."""
    spec = make_cipher_spec(1, 60, zipf=1.0, seed=spec_seed, num_pairs=3000, num_documents=num_documents,
                            length_range=(5, 12))
    ttable = train_model1(generate_synthetic_corpus(spec, 1), 10)
    held = generate_synthetic_corpus(replace(spec, num_pairs=1000), 2)
    return spec, ttable, calibrate_params(held, ttable)


def alignment_scores(spec, ttable, params, seed: int = 7, use_filter: bool = False):
    """(precision, recall) of recovered pairs against the generator's gold list."""
    docs, gold = generate_synthetic_documents(spec, seed)
    found = []
    for doc in docs:
        pairs = align_document_pair(doc, ttable, params)
        if use_filter:
            pairs = filter_pairs(pairs, params)
        found += [p.origin for p in pairs]
    hits = len(set(gold) & set(found))
    return hits / max(1, len(found)), hits / max(1, len(gold))


# --- dynamic split on the 3-cipher corpus ------------------------------------------

CIPHER_SEEDS = (0, 1, 2)


def cipher_corpus(seed: int, num_pairs: int = 3000):
    spec = make_cipher_spec(3, 40, zipf=1.0, seed=seed, num_pairs=num_pairs, reorder=True)
    return generate_synthetic_corpus(spec, seed)


@lru_cache(maxsize=None)
def dynamic_run(seed: int, balanced: bool = True, epochs: float = 5.0):
    corpus = cipher_corpus(seed)
    model = dynamic_pretrain(corpus, 3, TrainConfig(B=32, epochs=epochs, seed=seed), balanced=balanced)
    return corpus, model


def max_epoch_share(history) -> float:
    return max(float(c.max() / c.sum()) for c in history.epoch_counts.values())


# --- full strategy benchmark ----------------------------------------------------------

BENCH_STRATEGIES = ("uniform", "topic", "dynamic")


@lru_cache(maxsize=None)
def benchmark_run(seed: int):
    """Metrics of every strategy, pretrain-only and fine-tuned, on one benchmark seed."""
    bench = cipher_benchmark(seed)
    config = replace(BENCHMARK_CONFIG, seed=seed)
    rows, _, reports = run_pipeline(bench.pretrain, bench.finetune, bench.eval, BENCH_STRATEGIES, 3, config,
                                    experiment="benchmark")
    metrics = {(r.strategy, r.metric): r.value for r in rows}
    return metrics, reports


def benchmark_average(metric: str, strategy: str) -> float:
    return float(np.mean([benchmark_run(s)[0][strategy, metric] for s in CIPHER_SEEDS]))
