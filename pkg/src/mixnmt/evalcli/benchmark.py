"""The multi-domain cipher benchmark used for strategy comparisons."""

from __future__ import annotations

from dataclasses import dataclass, replace

from ..corpus.data import Corpus
from ..corpus.synthetic import SyntheticSpec, drift_domain, generate_synthetic_corpus, make_cipher_spec
from ..mixture.model import TrainConfig

# Two passes are enough for the count components to settle on 30K pairs.
BENCHMARK_CONFIG = TrainConfig(epochs=2.0)


@dataclass(frozen=True)
class Benchmark:
    spec: SyntheticSpec
    pretrain: Corpus
    finetune: Corpus
    eval: Corpus


def cipher_benchmark(seed: int = 0, num_pairs: int = 30_000, num_finetune: int = 3_000, num_eval: int = 1_000,
                     num_domains: int = 3, vocab_size: int = 40, shared_fraction: float = 0.3,
                     shared_targets: bool = False, reorder: bool = True, zipf: float = 1.0,
                     drift: float = 0.2, shared_mapping: bool = False) -> Benchmark:
    """Pretraining data from ``num_domains`` ciphers; fine-tune and eval data from a drifted domain 0.

    The in-domain sets use the mapping of domain 0 with a ``drift`` fraction
    of its entries permuted, so pretraining alone cannot get them right.
    """
    spec = make_cipher_spec(num_domains, vocab_size, shared_fraction, shared_targets, reorder, zipf, seed,
                            shared_mapping=shared_mapping, num_pairs=num_pairs)
    target = drift_domain(spec, 0, drift, seed)
    return Benchmark(
        spec,
        generate_synthetic_corpus(spec, seed),
        generate_synthetic_corpus(replace(target, num_pairs=num_finetune), seed + 10_000),
        generate_synthetic_corpus(replace(target, num_pairs=num_eval), seed + 20_000),
    )
