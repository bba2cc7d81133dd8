"""Translation and clustering metrics."""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

ZERO_PRECISION_FLOOR = 1e-9


def _check_lengths(hypotheses, references):
    if len(hypotheses) != len(references):
        raise ValueError(f"{len(hypotheses)} hypotheses but {len(references)} references")


def _ngrams(tokens, n):
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def ngram_stats(hypotheses, references, max_n: int = 4):
    """Clipped match counts and hypothesis n-gram totals, plus both corpus lengths."""
    _check_lengths(hypotheses, references)
    matches = [0] * max_n
    totals = [0] * max_n
    hyp_len = ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp, ref = list(hyp), list(ref)
        hyp_len += len(hyp)
        ref_len += len(ref)
        for n in range(1, max_n + 1):
            h, r = _ngrams(hyp, n), _ngrams(ref, n)
            matches[n - 1] += sum(min(c, r[g]) for g, c in h.items())
            totals[n - 1] += max(len(hyp) - n + 1, 0)
    return matches, totals, hyp_len, ref_len


def corpus_bleu(hypotheses, references, max_n: int = 4) -> float:
    """Corpus BLEU in [0, 100] with uniform weights and a floor on zero precisions."""
    matches, totals, hyp_len, ref_len = ngram_stats(hypotheses, references, max_n)
    if hyp_len == 0:
        return 0.0
    log_p = 0.0
    for m, t in zip(matches, totals):
        p = m / t if t else 0.0
        log_p += math.log(max(p, ZERO_PRECISION_FLOOR)) / max_n
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    return 100.0 * bp * math.exp(log_p)


def token_accuracy(hypotheses, references) -> float:
    """Position-wise matches over reference tokens (hypotheses truncated/padded)."""
    _check_lengths(hypotheses, references)
    hits = total = 0
    for hyp, ref in zip(hypotheses, references):
        hyp, ref = list(hyp), list(ref)
        hits += sum(1 for h, r in zip(hyp, ref) if h == r)
        total += len(ref)
    if total == 0:
        raise ValueError("references contain no tokens")
    return hits / total


def purity(assignments, gold) -> float:
    assignments, gold = list(assignments), list(gold)
    if len(assignments) != len(gold):
        raise ValueError("assignments and gold labels differ in length")
    if not assignments:
        raise ValueError("purity of an empty clustering is undefined")
    clusters: dict = {}
    for a, g in zip(assignments, gold):
        clusters.setdefault(a, Counter())[g] += 1
    return sum(max(c.values()) for c in clusters.values()) / len(assignments)


def pearson(x, y) -> float:
    """Pearson correlation; 0.0 when either side is constant."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    dx, dy = x - x.mean(), y - y.mean()
    denom = math.sqrt(float((dx * dx).sum() * (dy * dy).sum()))
    return float((dx * dy).sum() / denom) if denom > 0 else 0.0
