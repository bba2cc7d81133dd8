"""Balanced assignment of K*B instances to K components, exactly B each.

Maximizes the total log-likelihood ``sum_i scores[i, z_i]`` subject to every
component receiving exactly ``B`` instances.  The production solver is a
swap-based hill climber; the exact solvers exist to check it.
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

ENUMERATION_CAP = 12
FLOW_CAP = 200
_TOL = 1e-12


class InfeasibleAssignment(ValueError):
    pass


def _check_scores(scores, B=None) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2:
        raise ValueError("scores must be an N x K matrix")
    N, K = scores.shape
    if K < 1:
        raise ValueError("need at least one component")
    if not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite")
    if N % K:
        raise ValueError(f"N={N} is not divisible by K={K}")
    if B is not None and N != K * B:
        raise ValueError(f"N={N} != K*B={K * B}")
    return scores


def is_balanced(assignment, K: int, B: int) -> bool:
    a = np.asarray(assignment)
    return len(a) == K * B and np.array_equal(np.bincount(a, minlength=K), np.full(K, B)) and (
        len(a) == 0 or a.max() < K
    )


def objective(scores, assignment) -> float:
    scores = _check_scores(scores)
    N, K = scores.shape
    a = np.asarray(assignment, dtype=np.int64)
    if len(a) != N:
        raise InfeasibleAssignment("assignment length differs from the number of instances")
    if N == 0:
        return 0.0
    if not is_balanced(a, K, N // K):
        raise InfeasibleAssignment("assignment does not give every component exactly B instances")
    return float(scores[np.arange(N), a].sum())


# --- exact solvers -----------------------------------------------------------


def _enumerate(scores, B):
    N, K = scores.shape
    best_val, best = -np.inf, None
    cur = np.zeros(N, dtype=np.int64)
    left = [B] * K

    def rec(i, acc):
        nonlocal best_val, best
        if i == N:
            if best is None or acc > best_val + _TOL * max(1.0, abs(best_val)):
                best_val, best = acc, cur.copy()
            return
        for z in range(K):
            if left[z]:
                left[z] -= 1
                cur[i] = z
                rec(i + 1, acc + scores[i, z])
                left[z] += 1

    rec(0, 0.0)
    return best


def _flow_value(scores, caps) -> float:
    """Optimal value of assigning every row to a column slot (caps[z] slots of z)."""
    if scores.shape[0] == 0:
        return 0.0
    cols = np.repeat(np.arange(scores.shape[1]), caps)
    cost = -scores[:, cols]
    r, c = linear_sum_assignment(cost)
    return float(-cost[r, c].sum())


def _flow(scores, B):
    """Min-cost-flow optimum, then lexicographic tie-breaking by row-wise fixing."""
    N, K = scores.shape
    caps = np.full(K, B)
    target = _flow_value(scores, caps)
    out = np.empty(N, dtype=np.int64)
    fixed = 0.0
    for i in range(N):
        for z in range(K):
            if caps[z] == 0:
                continue
            caps[z] -= 1
            val = fixed + scores[i, z] + _flow_value(scores[i + 1 :], caps)
            if val >= target - 1e-9 * max(1.0, abs(target)):
                out[i] = z
                fixed += scores[i, z]
                break
            caps[z] += 1
    return out


def solve_balanced_exact(scores, B: int, cap: int = FLOW_CAP, method: str = "auto") -> np.ndarray:
    """Optimal balanced assignment; the lexicographically smallest among ties.

    ``method`` is ``enumerate`` (N <= 12), ``flow`` (min-cost flow with B unit
    slots per component) or ``auto``.
    """
    scores = _check_scores(scores, B)
    N, K = scores.shape
    if N > cap:
        raise ValueError(f"N={N} exceeds the exact-solver cap {cap}")
    if N == 0:
        return np.zeros(0, dtype=np.int64)
    if method == "auto":
        method = "enumerate" if N <= ENUMERATION_CAP else "flow"
    if method == "enumerate":
        if N > ENUMERATION_CAP:
            raise ValueError(f"enumeration is limited to N <= {ENUMERATION_CAP}")
        return _enumerate(scores, B)
    if method == "flow":
        return _flow(scores, B)
    raise ValueError(f"unknown method {method!r}")


# --- hill climbing -----------------------------------------------------------


def greedy_init(scores, B: int) -> np.ndarray:
    """Most confident instances first, each to its best component with room left."""
    N, K = scores.shape
    if K > 1:
        top2 = np.sort(scores, axis=1)[:, -2:]
        margin = top2[:, 1] - top2[:, 0]
    else:
        margin = np.zeros(N)
    order = np.argsort(-margin, kind="stable")
    left = np.full(K, B)
    out = np.empty(N, dtype=np.int64)
    for i in order:
        prefs = np.argsort(-scores[i], kind="stable")
        z = next(z for z in prefs if left[z])
        out[i] = z
        left[z] -= 1
    return out


def hill_climb(scores, assignment, max_moves: int = 10_000, debug: bool = False):
    """Steepest-ascent pairwise swaps until no swap improves the objective.

    Returns the local optimum and the objective after every accepted move
    (starting with the initial value).
    """
    a = np.array(assignment, dtype=np.int64)
    N, K = scores.shape
    B = N // K
    rows = np.arange(N)
    trace = [float(scores[rows, a].sum())]
    for _ in range(max_moves):
        own = scores[rows, a]
        cross = scores[:, a]  # cross[i, j] = scores[i, a[j]]
        gain = cross + cross.T - own[:, None] - own[None, :]
        gain[a[:, None] == a[None, :]] = -np.inf
        k = int(np.argmax(gain))
        if not gain.flat[k] > _TOL:
            break
        i, j = divmod(k, N)
        a[i], a[j] = a[j], a[i]
        trace.append(float(scores[rows, a].sum()))
        if debug and not is_balanced(a, K, B):
            raise InfeasibleAssignment("swap broke the balance constraint")
    return a, trace


def solve_balanced_hillclimb(scores, B: int, seed: int = 0, restarts: int = 1, max_moves: int = 10_000,
                             debug: bool = False) -> np.ndarray:
    """Hill-climbing solution of the balanced assignment problem.

    The first restart starts from :func:`greedy_init`; later restarts start
    from seeded random balanced assignments.  The best local optimum is
    returned (earliest restart on ties).
    """
    scores = _check_scores(scores, B)
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    N, K = scores.shape
    if N == 0:
        return np.zeros(0, dtype=np.int64)
    rng = np.random.default_rng(seed)
    best, best_val = None, -np.inf
    base = np.repeat(np.arange(K), B)
    for r in range(restarts):
        init = greedy_init(scores, B) if r == 0 else rng.permutation(base)
        a, trace = hill_climb(scores, init, max_moves, debug)
        if trace[-1] > best_val:
            best, best_val = a, trace[-1]
    return best


def solve_unconstrained(scores) -> np.ndarray:
    """Row-wise argmax, ignoring the balance constraint."""
    return np.argmax(np.asarray(scores, dtype=float), axis=1)


def load_scores(path) -> np.ndarray:
    return np.atleast_2d(np.loadtxt(path, delimiter=",", dtype=float))
