"""Gating classifier p(z | x) over hashed character n-grams of the source.

A linear softmax model: features are the counts of character 1-, 2- and
3-grams hashed into ``2**16`` buckets, scaled to sum to one per sentence.
"""

from __future__ import annotations

import zlib

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp, softmax

HASH_DIM = 2**16
NGRAM_ORDERS = (1, 2, 3)


def source_text(tokens) -> str:
    tokens = list(tokens)
    if all(len(t) == 1 for t in tokens):
        return "".join(tokens)
    return " ".join(tokens)


def _hash(s: str, dim: int) -> int:
    return zlib.crc32(s.encode("utf-8")) % dim


def featurize(sources, dim: int = HASH_DIM) -> sp.csr_matrix:
    """Sparse (N, dim) matrix of normalized hashed n-gram counts."""
    indptr, indices, data = [0], [], []
    for tokens in sources:
        text = source_text(tokens)
        counts: dict[int, float] = {}
        for n in NGRAM_ORDERS:
            for k in range(len(text) - n + 1):
                h = _hash(text[k : k + n], dim)
                counts[h] = counts.get(h, 0.0) + 1.0
        total = sum(counts.values()) or 1.0
        for h in sorted(counts):
            indices.append(h)
            data.append(counts[h] / total)
        indptr.append(len(indices))
    return sp.csr_matrix((np.array(data, float), np.array(indices, np.int64), np.array(indptr)),
                         shape=(len(indptr) - 1, dim))


class GateModel:
    def __init__(self, K: int, dim: int = HASH_DIM, W=None, b=None, trainable: bool = True):
        if K < 1:
            raise ValueError("K must be >= 1")
        self.K, self.dim = int(K), int(dim)
        self.W = np.zeros((self.dim, self.K)) if W is None else np.asarray(W, float)
        self.b = np.zeros(self.K) if b is None else np.asarray(b, float)
        if self.W.shape != (self.dim, self.K) or self.b.shape != (self.K,):
            raise ValueError("gate weight shapes do not match K and dim")
        # A frozen gate (uniform strategy) ignores training requests.
        self.trainable = trainable

    def copy(self) -> "GateModel":
        return GateModel(self.K, self.dim, self.W.copy(), self.b.copy(), self.trainable)

    def logits(self, X) -> np.ndarray:
        return np.asarray(X @ self.W) + self.b

    def predict_features(self, X) -> np.ndarray:
        p = softmax(self.logits(X), axis=1)
        return p / p.sum(axis=1, keepdims=True)

    def predict_many(self, sources) -> np.ndarray:
        sources = list(sources)
        if not sources:
            return np.zeros((0, self.K))
        return self.predict_features(featurize(sources, self.dim))


def gate_predict(g: GateModel, source) -> np.ndarray:
    return g.predict_many([source])[0]


def gate_loss(g: GateModel, X, T) -> float:
    """Mean cross-entropy between soft targets ``T`` and the gate's predictions."""
    z = g.logits(X)
    return float(-(T * (z - logsumexp(z, axis=1, keepdims=True))).sum() / X.shape[0])


def gate_gradient(g: GateModel, X, T):
    """Gradient of :func:`gate_loss` with respect to (W, b)."""
    n = X.shape[0]
    D = (g.predict_features(X) - T) / n
    return np.asarray(X.T @ D), D.sum(axis=0)


def _targets(examples, K):
    T = np.array([np.asarray(t, float) for _, t in examples])
    if T.shape != (len(examples), K):
        raise ValueError(f"targets must be simplices of length {K}")
    if np.any(T < 0) or np.any(np.abs(T.sum(axis=1) - 1.0) > 1e-6):
        raise ValueError("targets must be probability vectors")
    return T


def gate_train(examples, K: int | None = None, epochs: int = 5, lr: float = 1.0, seed: int = 0,
               batch_size: int = 16, gate: GateModel | None = None, dim: int = HASH_DIM) -> GateModel:
    """Minibatch SGD on the cross-entropy to (possibly soft) targets.

    ``examples`` are ``(source tokens, target simplex)`` pairs.  Passing
    ``gate`` continues training a copy of an existing model.
    """
    examples = list(examples)
    if not examples:
        raise ValueError("gate_train needs at least one example")
    K = K or len(examples[0][1])
    g = GateModel(K, dim) if gate is None else gate.copy()
    if not g.trainable or K == 1:
        return g
    T = _targets(examples, K)
    X = featurize([s for s, _ in examples], g.dim)
    rng = np.random.default_rng(seed)
    n = len(examples)
    for _ in range(epochs):
        order = rng.permutation(n)
        for s in range(0, n, batch_size):
            idx = order[s : s + batch_size]
            Xb = X[idx]
            D = (g.predict_features(Xb) - T[idx]) / len(idx)
            owner = np.repeat(np.arange(len(idx)), np.diff(Xb.indptr))
            np.add.at(g.W, Xb.indices, -lr * Xb.data[:, None] * D[owner])
            g.b -= lr * D.sum(axis=0)
    return g


def hard_targets(labels, K: int) -> np.ndarray:
    return np.eye(K)[np.asarray(labels, dtype=np.int64)]
