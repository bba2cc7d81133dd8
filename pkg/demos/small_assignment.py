# %% [markdown]
# The balanced assignment problem on its own.
#
# N = K*B instances, each with a log-likelihood under each component; pick an
# assignment with exactly B per component maximizing the total.

# %%
import numpy as np

from mixnmt.assign import (greedy_init, objective, solve_balanced_exact,
                           solve_balanced_hillclimb, solve_unconstrained)

scores = np.array([[-1, -5], [-1.2, -4], [-6, -0.5], [-3, -0.7]])
print(solve_balanced_exact(scores, 2), objective(scores, solve_balanced_exact(scores, 2)))

# %%
rng = np.random.default_rng(1)
scores = np.log(rng.uniform(size=(30, 3)))
exact = solve_balanced_exact(scores, 10)          # min-cost flow
print("greedy     ", objective(scores, greedy_init(scores, 10)))
for r in (1, 4, 16):
    a = solve_balanced_hillclimb(scores, 10, seed=0, restarts=r)
    print(f"hill x{r:<3}  ", objective(scores, a))
print("exact      ", objective(scores, exact))
free = solve_unconstrained(scores)
print("argmax (unbalanced)", scores[np.arange(30), free].sum(), np.bincount(free, minlength=3))
