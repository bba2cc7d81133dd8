"""Ensemble beam search over mixture components.

At every step the next-token distribution is the gate-weighted average of
the component distributions.  Children of the same parent are ranked and
their pruning score is lowered by ``diversity * rank`` (rank 0 is the best
child), which spreads the beam over different parents.  Every prefix that
survives pruning is a finished candidate scored by
``(log p(prefix) + log p_len(n)) / n``; ties go to the smaller token ids.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ..corpus.vocab import BOS_ID


def _check_weights(components, weights) -> np.ndarray:
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(components),):
        raise ValueError("one weight per component required")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
        raise ValueError("weights must form a simplex")
    return w


def ensemble_step(components, weights, src_ids, prev_ids, j: int) -> np.ndarray:
    """Mixed next-token distributions, shape (len(prev_ids), E)."""
    out = None
    for c, w in zip(components, weights):
        if w == 0.0:
            continue
        p = w * c.step_distribution(src_ids, prev_ids, j)
        out = p if out is None else out + p
    return out


def _log_len(components, weights, n: int) -> float:
    lp = np.array([c.log_p_len(n) for c in components], dtype=float)
    with np.errstate(divide="ignore"):
        return float(logsumexp(lp + np.log(weights)))


def decode_ids(components, weights, src_ids, beam: int = 4, diversity: float = 0.0, max_len: int = 50):
    if beam < 1:
        raise ValueError("beam must be >= 1")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    w = _check_weights(components, weights)
    hyps: list[tuple[tuple[int, ...], float]] = [((), 0.0)]
    best_key, best = None, ()
    for j in range(max_len):
        prev = [h[-1] if h else BOS_ID for h, _ in hyps]
        logp = np.log(ensemble_step(components, w, src_ids, prev, j))
        cands = []
        for k, (h, base) in enumerate(hyps):
            row = base + logp[k]
            # stable sort by score then token id, keep the top `beam` siblings
            order = np.lexsort((np.arange(len(row)), -row))[:beam]
            for rank, tok in enumerate(order):
                cands.append((row[tok] - diversity * rank, h + (int(tok),), float(row[tok])))
        cands.sort(key=lambda c: (-c[0], c[1]))
        hyps = [(h, lp) for _, h, lp in cands[:beam]]
        n = j + 1
        log_len = _log_len(components, w, n)
        for h, lp in hyps:
            key = (-(lp + log_len) / n, h)
            if best_key is None or key < best_key:
                best_key, best = key, h
    return best


def decode(components, weights, source, beam: int = 4, diversity: float = 0.0, max_len: int = 50):
    """Translate a token sequence; all components must share vocabularies."""
    c0 = components[0]
    ids = c0.src_vocab.encode(source)
    return c0.tgt_vocab.decode(decode_ids(components, weights, ids, beam, diversity, max_len))
