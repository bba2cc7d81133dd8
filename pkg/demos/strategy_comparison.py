# %% [markdown]
# Uniform vs topic vs dynamic data split, with and without fine-tuning.
#
# A reduced-size version of the 3-cipher benchmark (the full one uses
# 30K pretraining pairs; see tests/test_acceptance.py).  Fine-tuning and
# evaluation data come from a drifted copy of cipher 0.

# %%
from dataclasses import replace

from mixnmt.evalcli import BENCHMARK_CONFIG, cipher_benchmark, run_pipeline

bench = cipher_benchmark(seed=0, num_pairs=6000, num_finetune=1000, num_eval=300)
rows, models, reports = run_pipeline(bench.pretrain, bench.finetune, bench.eval,
                                     ["uniform", "topic", "dynamic"], 3, replace(BENCHMARK_CONFIG, seed=0))

# %%
for r in rows:
    if r.metric in ("accuracy", "bleu"):
        print(f"{r.strategy:12s} {r.metric:9s} {r.value:.4f}")

# %% [markdown]
# Per-component view: under a uniform split every component sees the same
# data, so they perform alike.  Under the dynamic split each component owns
# a cipher and the gate puts its weight on the one that owns cipher 0.

# %%
for strategy, comps in reports.items():
    print(strategy)
    for c in comps:
        print(f"  component {c.component}: accuracy {c.accuracy:.3f}  mean gate weight {c.weight:.3f}")
