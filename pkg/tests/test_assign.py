import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixnmt.assign import (
    InfeasibleAssignment,
    greedy_init,
    hill_climb,
    is_balanced,
    objective,
    solve_balanced_exact,
    solve_balanced_hillclimb,
    solve_unconstrained,
)

EXAMPLE = [[-1, -5], [-1.2, -4], [-6, -0.5], [-3, -0.7]]


def all_balanced(N, K):
    """Every assignment vector with N/K instances per component, in lexicographic order."""
    B = N // K
    for a in itertools.product(range(K), repeat=N):
        if all(a.count(z) == B for z in range(K)):
            yield a


def brute_force(scores):
    scores = np.asarray(scores, float)
    N, K = scores.shape
    best, best_val = None, -np.inf
    for a in all_balanced(N, K):
        v = float(sum(scores[i][z] for i, z in enumerate(a)))
        if v > best_val + 1e-12:
            best, best_val = a, v
    return list(best), best_val


def test_objective_examples():
    assert objective(np.zeros((0, 2)), []) == 0.0
    assert objective([[-2.0]], [0]) == -2.0
    assert objective(EXAMPLE, [0, 0, 1, 1]) == pytest.approx(-3.4)
    with pytest.raises(InfeasibleAssignment):
        objective(EXAMPLE, [0, 0, 0, 1])


def test_example_matrix():
    assert brute_force(EXAMPLE)[0] == [0, 0, 1, 1]
    assert len(list(all_balanced(4, 2))) == 6
    for method in ("enumerate", "flow"):
        assert solve_balanced_exact(EXAMPLE, 2, method=method).tolist() == [0, 0, 1, 1]
    a = solve_balanced_hillclimb(EXAMPLE, 2)
    assert objective(EXAMPLE, a) == pytest.approx(-3.4)


def test_degenerate_cases():
    s = np.random.default_rng(0).normal(size=(5, 1))
    assert solve_balanced_exact(s, 5).tolist() == [0] * 5
    assert solve_balanced_hillclimb(s, 5).tolist() == [0] * 5
    flat = np.full((6, 3), -1.5)
    for method in ("enumerate", "flow"):
        a = solve_balanced_exact(flat, 2, method=method)
        assert a.tolist() == [0, 0, 1, 1, 2, 2]
    h = solve_balanced_hillclimb(flat, 2, restarts=3)
    assert is_balanced(h, 3, 2) and objective(flat, h) == pytest.approx(-9.0)


def test_bad_inputs():
    with pytest.raises(ValueError):
        solve_balanced_exact(np.zeros((5, 2)), 2)
    with pytest.raises(ValueError):
        solve_balanced_hillclimb([[0.0, np.nan], [0.0, 0.0]], 1)
    with pytest.raises(ValueError):
        solve_balanced_hillclimb(EXAMPLE, 2, restarts=0)


matrices = st.integers(1, 3).flatmap(
    lambda K: st.integers(1, max(1, 9 // K)).flatmap(
        lambda B: st.lists(st.lists(st.floats(-8, 0, allow_nan=False), min_size=K, max_size=K),
                           min_size=K * B, max_size=K * B).map(lambda rows: (np.array(rows), B))))


@settings(max_examples=120, deadline=None)
@given(matrices)
def test_exact_solvers_agree_with_brute_force(case):
    scores, B = case
    ref, val = brute_force(scores)
    for method in ("enumerate", "flow"):
        a = solve_balanced_exact(scores, B, method=method)
        assert objective(scores, a) == pytest.approx(val, abs=1e-9)
    # ties resolve to the lexicographically smallest optimum
    assert solve_balanced_exact(scores, B, method="enumerate").tolist() == ref


@settings(max_examples=120, deadline=None)
@given(matrices, st.integers(0, 1000), st.integers(1, 4))
def test_hillclimb_bounds(case, seed, restarts):
    scores, B = case
    K = scores.shape[1]
    a = solve_balanced_hillclimb(scores, B, seed=seed, restarts=restarts, debug=True)
    assert is_balanced(a, K, B)
    v = objective(scores, a)
    assert v <= float(scores[np.arange(len(a)), solve_unconstrained(scores)].sum()) + 1e-9
    assert v >= objective(scores, greedy_init(scores, B)) - 1e-9
    assert v <= objective(scores, solve_balanced_exact(scores, B)) + 1e-9
    assert np.array_equal(a, solve_balanced_hillclimb(scores, B, seed=seed, restarts=restarts))


@settings(max_examples=60, deadline=None)
@given(matrices, st.integers(0, 100))
def test_accepted_moves_strictly_improve(case, seed):
    scores, B = case
    start = np.random.default_rng(seed).permutation(np.repeat(np.arange(scores.shape[1]), B))
    a, trace = hill_climb(scores, start, debug=True)
    assert all(b > a_ for a_, b in zip(trace, trace[1:]))
    assert trace[-1] == pytest.approx(objective(scores, a))


def test_unconstrained_argmax_is_rowwise():
    s = np.array([[0.0, 1.0], [2.0, 1.0], [0.5, 3.0]])
    assert solve_unconstrained(s).tolist() == [1, 0, 1]


def test_flow_matches_enumeration_on_larger_instances():
    rng = np.random.default_rng(3)
    for _ in range(20):
        s = np.log(rng.uniform(size=(12, 3)))
        e = solve_balanced_exact(s, 4, method="enumerate")
        f = solve_balanced_exact(s, 4, method="flow")
        assert objective(s, e) == pytest.approx(objective(s, f), abs=1e-9)
    big = np.log(rng.uniform(size=(96, 3)))
    f = solve_balanced_exact(big, 32)
    h = solve_balanced_hillclimb(big, 32, restarts=4)
    assert objective(big, h) <= objective(big, f) + 1e-9
