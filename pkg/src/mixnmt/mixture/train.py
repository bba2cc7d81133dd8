"""Pretraining strategies and fine-tuning for the mixture.

* ``split_pretrain``: components trained independently on fixed subsets
  (single / uniform / topic strategies).
* ``dynamic_pretrain``: hard EM where every E-step takes ``K*B`` instances
  and gives each component exactly ``B`` of them.
* ``soft_em_finetune``: every component sees every in-domain instance,
  weighted by its responsibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from ..assign import is_balanced, solve_balanced_hillclimb, solve_unconstrained
from ..corpus.vocab import Vocab, build_vocab
from .component import Encoded, encode_pairs
from .gate import GateModel, gate_train, hard_targets
from .model import MixtureModel, TrainConfig, new_components, save_model

SRC_VOCAB_CAP = 10_000
TGT_VOCAB_CAP = 40_000


@dataclass
class TrainHistory:
    checkpoints: list = field(default_factory=list)
    # dynamic strategy only
    steps: list = field(default_factory=list)  # (corpus indices, assignment, epoch) per E-step
    epoch_counts: dict = field(default_factory=dict)  # epoch -> instances per component
    violations: int = 0
    final_assignment: np.ndarray | None = None  # component per corpus index in the last epoch, -1 if unseen
    warm_start: np.ndarray | None = None


def make_vocabs(corpus, src_cap: int = SRC_VOCAB_CAP, tgt_cap: int = TGT_VOCAB_CAP):
    return build_vocab(corpus, "source", src_cap), build_vocab(corpus, "target", tgt_cap)


def num_intervals(config: TrainConfig) -> int:
    return max(1, math.ceil(config.epochs / config.interval - 1e-9))


def _stream(n: int, epochs: float, rng: np.random.Generator):
    """Corpus indices and epoch numbers for ``epochs`` passes over shuffled data."""
    total = int(round(epochs * n))
    perms = [rng.permutation(n) for _ in range(math.ceil(total / n))]
    idx = np.concatenate(perms)[:total] if perms else np.zeros(0, np.int64)
    return idx, np.arange(total) // n


def _checkpoint(model, out_dir, k, history, extra=None):
    if out_dir is None:
        return
    path = save_model(model, Path(out_dir) / f"ckpt-{k:04d}", extra)
    history.checkpoints.append(path)


def _update_in_batches(component, enc: Encoded, positions, B, weights=None, decay: float = 1.0):
    for s in range(0, len(positions), B):
        sel = positions[s : s + B]
        component.decay(decay)
        w = np.ones(len(sel)) if weights is None else weights[s : s + B]
        component.update_encoded(enc.take(sel), w)


# --- fixed splits ----------------------------------------------------------------


def split_pretrain(subsets, config: TrainConfig, strategy: str | None = None, out_dir=None,
                   vocabs: tuple[Vocab, Vocab] | None = None) -> MixtureModel:
    """Train component ``z`` on ``subsets[z]`` only.

    Components advance in lockstep, one checkpoint interval at a time, so a
    checkpoint is written after every ``config.interval`` epochs of each
    subset.  The uniform strategy keeps a frozen gate (``p(z|x) = 1/K``); the
    topic strategy fits the gate to predict the subset index.
    """
    subsets = [list(s) for s in subsets]
    K = len(subsets)
    if K < 1:
        raise ValueError("need at least one subset")
    if any(not s for s in subsets):
        raise ValueError("every subset must be non-empty")
    strategy = strategy or ("single" if K == 1 else "uniform")
    if strategy == "dynamic":
        raise ValueError("use dynamic_pretrain for the dynamic strategy")
    allpairs = [p for s in subsets for p in s]
    sv, tv = vocabs or make_vocabs(allpairs)
    model = MixtureModel(new_components(K, sv, tv, config), GateModel(K), strategy, config)
    model.history = history = TrainHistory()

    if strategy in ("uniform", "single"):
        model.gate.trainable = False
    elif strategy == "topic":
        labels = np.concatenate([np.full(len(s), z) for z, s in enumerate(subsets)])
        examples = list(zip((p.source for p in allpairs), hard_targets(labels, K)))
        model.gate = gate_train(examples, K, config.gate_epochs, config.gate_lr, config.seed)

    rng = np.random.default_rng(config.seed)
    encs = [encode_pairs(s, sv, tv) for s in subsets]
    streams = [_stream(len(s), config.epochs, rng)[0] for s in subsets]
    cursors = [0] * K
    n_int = num_intervals(config)
    for k in range(1, n_int + 1):
        for z in range(K):
            n = len(subsets[z])
            end = len(streams[z]) if k == n_int else min(len(streams[z]), int(round(k * config.interval * n)))
            _update_in_batches(model.components[z], encs[z], streams[z][cursors[z] : end], config.B,
                               decay=config.decay_factor(config.B, n))
            cursors[z] = max(cursors[z], end)
        _checkpoint(model, out_dir, k, history)
    return model


# --- dynamic split -----------------------------------------------------------------


def dynamic_pretrain(corpus, K: int, config: TrainConfig, out_dir=None, balanced: bool = True,
                     vocabs: tuple[Vocab, Vocab] | None = None) -> MixtureModel:
    """Hard-EM pretraining with the balanced batched E-step.

    After a warm start (each component trained on its own random shard of
    the first interval's data), every E-step scores ``K*B`` instances under
    all components, assigns exactly ``B`` to each by hill climbing, and
    updates every component on its share.  ``balanced=False`` replaces the
    assignment by an unconstrained argmax, for studying the degenerate case.
    Trailing instances that do not fill a whole E-step are skipped.  The
    gate is fit to the assignments of the final epoch.
    """
    pairs = list(corpus)
    N, B = len(pairs), config.B
    if K < 1:
        raise ValueError("K must be >= 1")
    if N < K * B:
        raise ValueError(f"corpus of {N} pairs is smaller than K*B = {K * B}")
    sv, tv = vocabs or make_vocabs(pairs)
    model = MixtureModel(new_components(K, sv, tv, config), GateModel(K), "dynamic", config)
    model.history = history = TrainHistory()
    enc = encode_pairs(pairs, sv, tv)
    rng = np.random.default_rng(config.seed)
    stream, epoch_of = _stream(N, config.epochs, rng)
    total = len(stream)

    n_int = num_intervals(config)
    bounds = [int(round(k * config.interval * N)) for k in range(1, n_int + 1)]
    warm = min(total, max(K, bounds[0]))
    shards = np.array_split(np.arange(warm), K)
    history.warm_start = np.zeros(warm, np.int64)
    for z, shard in enumerate(shards):
        history.warm_start[shard] = z
        _update_in_batches(model.components[z], enc, stream[shard], B, decay=config.decay_factor(K * B, N))

    next_k = 0
    cursor = warm
    step = 0
    while next_k < n_int - 1 and bounds[next_k] <= cursor:
        next_k += 1
        _checkpoint(model, out_dir, next_k, history)
    while cursor + K * B <= total:
        pos = np.arange(cursor, cursor + K * B)
        idx = stream[pos]
        sub = enc.take(idx)
        scores = np.stack([c.score_encoded(sub) for c in model.components], axis=1)
        if balanced:
            a = solve_balanced_hillclimb(scores, B, seed=config.seed * 1_000_003 + step, restarts=config.restarts)
        else:
            a = solve_unconstrained(scores)
        if not is_balanced(a, K, B):
            history.violations += 1
        decay = config.decay_factor(K * B, N)
        for z in range(K):
            model.components[z].decay(decay)
            sel = np.flatnonzero(a == z)
            if len(sel):
                model.components[z].update_encoded(sub.take(sel), np.ones(len(sel)))
        history.steps.append((idx, a, epoch_of[pos]))
        for e in np.unique(epoch_of[pos]):
            counts = history.epoch_counts.setdefault(int(e), np.zeros(K, np.int64))
            counts += np.bincount(a[epoch_of[pos] == e], minlength=K)
        cursor += K * B
        step += 1
        while next_k < n_int - 1 and bounds[next_k] <= cursor:
            next_k += 1
            _checkpoint(model, out_dir, next_k, history)

    last_epoch = int(epoch_of[-1]) if total else 0
    final = np.full(N, -1, np.int64)
    for idx, a, ep in history.steps:
        keep = ep == last_epoch
        final[idx[keep]] = a[keep]
    history.final_assignment = final
    seen = np.flatnonzero(final >= 0)
    if K > 1 and len(seen):
        examples = [(pairs[i].source, t) for i, t in zip(seen, hard_targets(final[seen], K))]
        model.gate = gate_train(examples, K, config.gate_epochs, config.gate_lr, config.seed)
    while next_k < n_int:
        next_k += 1
        _checkpoint(model, out_dir, next_k, history)
    return model


# --- fine-tuning -----------------------------------------------------------------


def responsibilities(model: MixtureModel, pairs) -> np.ndarray:
    """Posterior ``p(z | x, y)`` proportional to ``gate(x)[z] * p(y | z, x)``."""
    pairs = list(pairs)
    scores = model.score_matrix(pairs)
    with np.errstate(divide="ignore"):
        logits = np.log(model.weights([p.source for p in pairs])) + scores
    r = np.exp(logits - logsumexp(logits, axis=1, keepdims=True))
    return r / r.sum(axis=1, keepdims=True)


def soft_em_finetune(model: MixtureModel, in_domain, config: TrainConfig | None = None,
                     iters: int | None = None) -> MixtureModel:
    """Soft-EM fine-tuning of a copy of ``model``.

    In every pass, each batch of ``B`` instances is scored, responsibilities
    are computed and every component is updated with weight
    ``finetune_weight * r_z``.  At the end of a pass the gate is trained
    toward the pass's responsibilities.
    """
    config = config or model.config
    iters = config.finetune_iters if iters is None else iters
    pairs = list(in_domain)
    m = model.copy()
    m.history = TrainHistory()
    if not pairs:
        return m
    enc = encode_pairs(pairs, m.src_vocab, m.tgt_vocab)
    rng = np.random.default_rng(config.seed + 1)
    for it in range(iters):
        order = rng.permutation(len(pairs))
        targets = np.zeros((len(pairs), m.K))
        for s in range(0, len(order), config.B):
            sel = order[s : s + config.B]
            r = responsibilities(m, [pairs[i] for i in sel])
            targets[sel] = r
            sub = enc.take(sel)
            for z, c in enumerate(m.components):
                c.update_encoded(sub, config.finetune_weight * r[:, z])
        if m.K > 1 and m.gate.trainable:
            m.gate = gate_train(list(zip((p.source for p in pairs), targets)), m.K, config.gate_epochs,
                                config.gate_lr, config.seed + 1 + it, gate=m.gate)
    m.config = config
    return m


def component_finetune(model: MixtureModel, in_domain, config: TrainConfig | None = None,
                       iters: int | None = None) -> MixtureModel:
    """Fine-tune every component on the whole in-domain set; the gate is kept."""
    config = config or model.config
    iters = config.finetune_iters if iters is None else iters
    pairs = list(in_domain)
    m = model.copy()
    m.history = TrainHistory()
    if not pairs:
        return m
    enc = encode_pairs(pairs, m.src_vocab, m.tgt_vocab)
    rng = np.random.default_rng(config.seed + 1)
    for _ in range(iters):
        order = rng.permutation(len(pairs))
        for c in m.components:
            _update_in_batches(c, enc, order, config.B, np.full(len(order), config.finetune_weight))
    m.config = config
    return m


def finetune(model: MixtureModel, in_domain, config: TrainConfig | None = None, iters: int | None = None):
    """Strategy-appropriate fine-tuning: soft EM for dynamic, per-component otherwise."""
    if model.strategy == "dynamic":
        return soft_em_finetune(model, in_domain, config, iters)
    return component_finetune(model, in_domain, config, iters)
