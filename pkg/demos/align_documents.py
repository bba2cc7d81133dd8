# %% [markdown]
# Mining sentence pairs from noisy comparable documents.
#
# Synthetic documents pair a CJK-script source with a latin target; some
# target sentences are dropped, some copied verbatim, some replaced with
# the wrong script.  We train a lexicon, calibrate the length model and
# threshold on held-out pairs, align, filter, and score against gold.

# %%
from dataclasses import replace

from mixnmt.align import align_document_pair, calibrate_params, filter_pairs, train_model1
from mixnmt.corpus import generate_synthetic_corpus, generate_synthetic_documents, make_cipher_spec

spec = make_cipher_spec(1, 60, zipf=1.0, seed=3, num_pairs=3000, num_documents=40, length_range=(5, 12))
ttable = train_model1(generate_synthetic_corpus(spec, 1), 10)
held = generate_synthetic_corpus(replace(spec, num_pairs=1000), 2)
params = calibrate_params(held, ttable)
print(params)

# %%
noisy = replace(spec, misalignment_rate=0.1, identical_rate=0.05, wrong_language_rate=0.05)
docs, gold = generate_synthetic_documents(noisy, 7)
found = []
for doc in docs:
    found += [p.origin for p in filter_pairs(align_document_pair(doc, ttable, params), params)]
hits = len(set(found) & set(gold))
print(f"precision {hits / len(found):.3f}  recall {hits / len(gold):.3f}  ({len(found)} pairs)")

# %%
doc = docs[0]
for p in list(align_document_pair(doc, ttable, params))[:5]:
    print(f"{p.score:8.2f}  {' '.join(p.source)}  |||  {' '.join(p.target)}")
