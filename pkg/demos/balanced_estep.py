# %% [markdown]
# Why the E-step needs a balance constraint.
#
# Train the same 3-component mixture twice on a corpus drawn from three
# substitution ciphers: once with the balanced hill-climbing E-step, once
# with a plain per-instance argmax.  Then look at how many instances each
# component received per epoch.

# %%
import numpy as np

from mixnmt.corpus import generate_synthetic_corpus, make_cipher_spec
from mixnmt.mixture import TrainConfig, dynamic_pretrain

spec = make_cipher_spec(3, 40, zipf=1.0, seed=0, num_pairs=3000, reorder=True)
corpus = generate_synthetic_corpus(spec, 0)
config = TrainConfig(B=32, epochs=3.0, seed=0)

# %%
for balanced in (True, False):
    model = dynamic_pretrain(corpus, 3, config, balanced=balanced)
    h = model.history
    print("balanced" if balanced else "argmax  ", "violations:", h.violations)
    for epoch, counts in sorted(h.epoch_counts.items()):
        share = np.asarray(counts) / np.sum(counts)
        print(f"  epoch {epoch}: shares {np.round(share, 3)}")

# %% [markdown]
# With argmax the component that happens to be slightly better early on
# keeps winning and grows; the balanced E-step keeps every component at
# exactly B instances per batch, so each one specializes on a cipher.

# %%
from mixnmt.evalcli import purity

model = dynamic_pretrain(corpus, 3, config)
final = model.history.final_assignment
seen = final >= 0
print("purity of final assignment vs cipher id:",
      purity(final[seen], np.asarray(corpus.domains)[seen]))
