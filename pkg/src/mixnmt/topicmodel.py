"""Bilingual topic model used to split a parallel corpus by topic.

Each sentence pair has one latent topic ``z``.  Source tokens are drawn from
a topic unigram distribution and every target token is translated from a
uniformly chosen source position with a topic-specific lexicon::

    p(x, y, z) = theta[z] * prod_i phi[z, x_i] * prod_j mean_i t[z, x_i, y_j]

With a single discrete latent per pair the E-step is exact, so the fit is
plain EM on the MAP objective implied by the additive smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .corpus.data import Corpus
from .corpus.vocab import UNK

DEFAULT_DELTA = 0.01


@dataclass
class TopicModel:
    sources: list[str]  # index 0 is UNK
    targets: list[str]
    theta: np.ndarray  # (K,)
    phi: np.ndarray  # (K, F)
    lexicon: np.ndarray  # (K, F, E), rows t[z, f, :] sum to one
    alpha: float = 1.0
    delta: float = DEFAULT_DELTA
    objectives: list[float] = field(default_factory=list)
    log_likelihoods: list[float] = field(default_factory=list)

    def __post_init__(self):
        self.src_index = {s: i for i, s in enumerate(self.sources)}
        self.tgt_index = {t: j for j, t in enumerate(self.targets)}

    @property
    def num_topics(self) -> int:
        return len(self.theta)

    def encode(self, pairs):
        src = [[self.src_index.get(f, 0) for f in p.source] for p in pairs]
        tgt = [[self.tgt_index.get(e, 0) for e in p.target] for p in pairs]
        return _Batch(src, tgt)

    def joint_logprob(self, batch: "_Batch") -> np.ndarray:
        """``log p(x, y, z)`` for every pair and topic, shape (N, K)."""
        return _joint(self.theta, self.phi, self.lexicon, batch)[0]

    def save(self, path) -> None:
        K = self.num_topics
        lines = [f"BITOPIC v1 {K}", f"alpha {float(self.alpha)!r} delta {float(self.delta)!r}"]
        lines.append("SRC\t" + "\t".join(self.sources))
        lines.append("TGT\t" + "\t".join(self.targets))
        lines.append("THETA\t" + "\t".join(repr(float(v)) for v in self.theta))
        for z in range(K):
            lines.append(f"PHI {z}")
            lines += [f"{f}\t{float(self.phi[z, i])!r}" for i, f in enumerate(self.sources)]
        for z in range(K):
            lines.append(f"LEX {z}")
            for i, f in enumerate(self.sources):
                lines += [f"{f}\t{e}\t{float(self.lexicon[z, i, j])!r}" for j, e in enumerate(self.targets)]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "TopicModel":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        head = lines[0].split()
        if head[:2] != ["BITOPIC", "v1"]:
            raise ValueError(f"{path}: not a BITOPIC v1 file")
        K = int(head[2])
        hyper = lines[1].split()
        sources = lines[2].split("\t")[1:]
        targets = lines[3].split("\t")[1:]
        theta = np.array([float(v) for v in lines[4].split("\t")[1:]])
        F, E = len(sources), len(targets)
        phi = np.zeros((K, F))
        lex = np.zeros((K, F, E))
        pos = 5
        for z in range(K):
            pos += 1
            phi[z] = [float(lines[pos + i].split("\t")[1]) for i in range(F)]
            pos += F
        for z in range(K):
            pos += 1
            vals = [float(lines[pos + k].split("\t")[2]) for k in range(F * E)]
            lex[z] = np.array(vals).reshape(F, E)
            pos += F * E
        return cls(sources, targets, theta, phi, lex, alpha=float(hyper[1]), delta=float(hyper[3]))


class _Batch:
    def __init__(self, src, tgt):
        self.n = len(src)
        lx = max(map(len, src))
        ly = max(map(len, tgt))
        self.src = np.zeros((self.n, lx), np.int64)
        self.tgt = np.zeros((self.n, ly), np.int64)
        self.smask = np.zeros((self.n, lx), bool)
        self.tmask = np.zeros((self.n, ly), bool)
        for k, (s, t) in enumerate(zip(src, tgt)):
            self.src[k, : len(s)] = s
            self.tgt[k, : len(t)] = t
            self.smask[k, : len(s)] = True
            self.tmask[k, : len(t)] = True
        self.src_len = self.smask.sum(axis=1)


def _joint(theta, phi, lexicon, batch: _Batch):
    """Joint log-probabilities (N, K) and per-topic translation terms for the M-step."""
    K = len(theta)
    out = np.empty((batch.n, K))
    trans = []
    for z in range(K):
        src_lp = (np.log(phi[z])[batch.src] * batch.smask).sum(axis=1)
        T = lexicon[z][batch.src[:, :, None], batch.tgt[:, None, :]] * batch.smask[:, :, None]
        denom = T.sum(axis=1)  # (N, Ly)
        tgt_lp = np.where(batch.tmask, np.log(np.where(batch.tmask, denom, 1.0) / batch.src_len[:, None]), 0.0)
        out[:, z] = np.log(theta[z]) + src_lp + tgt_lp.sum(axis=1)
        trans.append((T, denom))
    return out, trans


def _perturbed_uniform(rng, shape, axis=-1):
    x = 1.0 + 0.1 * rng.uniform(-1.0, 1.0, size=shape)
    return x / x.sum(axis=axis, keepdims=True)


def fit_bilingual_topics(pairs, num_topics: int, alpha: float = 1.0, iterations: int = 20, seed: int = 0,
                         delta: float = DEFAULT_DELTA) -> TopicModel:
    """Fit the topic model by EM.

    ``model.objectives`` holds the smoothed (MAP) objective of every iterate,
    which EM never decreases; ``model.log_likelihoods`` the plain data
    log-likelihood of the same iterates.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cannot fit a topic model on an empty corpus")
    if num_topics < 1 or iterations < 1:
        raise ValueError("num_topics and iterations must be >= 1")
    sources = [UNK] + sorted({f for p in pairs for f in p.source} - {UNK})
    targets = [UNK] + sorted({e for p in pairs for e in p.target} - {UNK})
    K, F, E = num_topics, len(sources), len(targets)
    model = TopicModel(sources, targets, np.full(K, 1.0 / K), np.zeros((K, F)), np.zeros((K, F, E)), alpha, delta)
    batch = model.encode(pairs)

    rng = np.random.default_rng(seed)
    model.phi = _perturbed_uniform(rng, (K, F))
    model.lexicon = _perturbed_uniform(rng, (K, F, E))

    flat_src = np.broadcast_to(batch.src[:, :, None], (batch.n,) + batch.src.shape[1:] + batch.tgt.shape[1:])
    flat_idx = (flat_src * E + batch.tgt[:, None, :]).ravel()

    def evaluate():
        joint, trans = _joint(model.theta, model.phi, model.lexicon, batch)
        ll = float(logsumexp(joint, axis=1).sum())
        prior = alpha * np.log(model.theta).sum() + delta * (np.log(model.phi).sum() + np.log(model.lexicon).sum())
        return joint, trans, ll, ll + float(prior)

    for _ in range(iterations):
        joint, trans, ll, obj = evaluate()
        model.log_likelihoods.append(ll)
        model.objectives.append(obj)
        resp = np.exp(joint - logsumexp(joint, axis=1, keepdims=True))

        theta = resp.sum(axis=0) + alpha
        model.theta = theta / theta.sum()
        phi = np.empty((K, F))
        lex = np.empty((K, F, E))
        for z in range(K):
            w = resp[:, z]
            phi[z] = np.bincount(batch.src[batch.smask], weights=np.repeat(w, batch.src_len), minlength=F)
            T, denom = trans[z]
            post = T / np.where(batch.tmask, denom, 1.0)[:, None, :]
            post *= batch.tmask[:, None, :] * w[:, None, None]
            lex[z] = np.bincount(flat_idx, weights=post.ravel(), minlength=F * E).reshape(F, E)
        phi += delta
        lex += delta
        model.phi = phi / phi.sum(axis=1, keepdims=True)
        model.lexicon = lex / lex.sum(axis=2, keepdims=True)

    _, _, ll, obj = evaluate()
    model.log_likelihoods.append(ll)
    model.objectives.append(obj)
    return model


def infer_topic_posterior(model: TopicModel, pair) -> np.ndarray:
    joint = model.joint_logprob(model.encode([pair]))[0]
    post = np.exp(joint - logsumexp(joint))
    return post / post.sum()


def topic_posteriors(model: TopicModel, pairs) -> np.ndarray:
    joint = model.joint_logprob(model.encode(list(pairs)))
    post = np.exp(joint - logsumexp(joint, axis=1, keepdims=True))
    return post / post.sum(axis=1, keepdims=True)


def split_by_topic(model: TopicModel, corpus) -> list[Corpus]:
    """Partition ``corpus`` by argmax posterior topic (ties go to the lower index)."""
    pairs = list(corpus)
    if not pairs:
        return [Corpus() for _ in range(model.num_topics)]
    labels = np.argmax(topic_posteriors(model, pairs), axis=1)
    return [Corpus(tuple(p for p, z in zip(pairs, labels) if z == k)) for k in range(model.num_topics)]
