"""Count-based translation component: lexicon + target bigram + length model.

For a source ``x`` (with a NULL word at position 0) and target ``y``::

    log p(y|x) = log p_len(|y|)
                 + sum_j log[ lam * p_bg(y_j | y_{j-1})
                              + (1 - lam) * sum_i a(i | j, |x|) * t(y_j | x_i) ]

With ``alignment="uniform"`` the position weights are ``1 / (|x| + 1)``,
which is plain Model 1.  The default ``"learned"`` keeps a relative position
table (Model 2 style) so that a component can also capture word order.

All statistics are real-valued counts, so an update with weight ``w`` is the
same as seeing the pair ``w`` times.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..corpus.vocab import BOS_ID, Vocab

ALIGNMENT_MODES = ("learned", "uniform")


@dataclass
class Encoded:
    """Padded id arrays for a batch of pairs."""

    src: np.ndarray  # (n, Lx)
    tgt: np.ndarray  # (n, Ly)
    smask: np.ndarray
    tmask: np.ndarray

    @property
    def n(self) -> int:
        return len(self.src)

    @property
    def src_len(self) -> np.ndarray:
        return self.smask.sum(axis=1)

    @property
    def tgt_len(self) -> np.ndarray:
        return self.tmask.sum(axis=1)

    def take(self, idx) -> "Encoded":
        idx = np.asarray(idx, dtype=np.int64)
        smask, tmask = self.smask[idx], self.tmask[idx]
        lx = max(int(smask.sum(axis=1).max(initial=0)), 1)
        ly = max(int(tmask.sum(axis=1).max(initial=0)), 1)
        return Encoded(self.src[idx, :lx], self.tgt[idx, :ly], smask[:, :lx], tmask[:, :ly])


def _pad(seqs, width=None):
    width = width or max(1, max((len(s) for s in seqs), default=1))
    out = np.zeros((len(seqs), width), dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=bool)
    for k, s in enumerate(seqs):
        out[k, : len(s)] = s
        mask[k, : len(s)] = True
    return out, mask


def encode_pairs(pairs, src_vocab: Vocab, tgt_vocab: Vocab) -> Encoded:
    src, smask = _pad([src_vocab.encode(p.source) for p in pairs])
    tgt, tmask = _pad([tgt_vocab.encode(p.target) for p in pairs])
    return Encoded(src, tgt, smask, tmask)


class Component:
    """One mixture member, ``p(y | z, x)``.

    ``lam`` weights the bigram model against the lexical model, ``delta`` is
    the additive smoothing of every table and ``rho0`` the prior geometric
    length parameter.  Position statistics are kept for source lengths up to
    ``max_positions``; longer inputs fall back to uniform position weights.
    """

    def __init__(self, src_vocab: Vocab, tgt_vocab: Vocab, lam: float = 0.1, delta: float = 0.01,
                 rho0: float = 0.2, max_positions: int = 32, alignment: str = "learned"):
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lam must be in (0, 1), got {lam}")
        if not 0.0 < rho0 < 1.0:
            raise ValueError(f"rho0 must be in (0, 1), got {rho0}")
        if delta <= 0:
            raise ValueError("delta must be positive")
        if alignment not in ALIGNMENT_MODES:
            raise ValueError(f"alignment must be one of {ALIGNMENT_MODES}")
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.lam = float(lam)
        self.delta = float(delta)
        self.rho0 = float(rho0)
        self.max_positions = int(max_positions)
        self.alignment = alignment
        F, E, P = len(src_vocab), len(tgt_vocab), self.max_positions
        self.null_id = F  # extra lexicon row
        self.lex = np.zeros((F + 1, E))
        self.bigram = np.zeros((E, E))
        self.align = np.zeros((P + 1, P, P + 1))  # [|x|, j, i], i = 0 is NULL
        self.length = np.zeros(2)  # total weight, total weighted target length
        self._cache = None

    # --- parameters ------------------------------------------------------------

    @property
    def vocab_size(self) -> int:
        return len(self.tgt_vocab)

    @property
    def rho(self) -> float:
        return float((self.length[0] + 1.0) / (self.length[1] + 1.0 / self.rho0))

    def log_p_len(self, n) -> np.ndarray:
        rho = self.rho
        return math.log(rho) + (np.asarray(n, dtype=float) - 1.0) * math.log1p(-rho)

    def tables(self):
        """Normalized (t, bigram, position) tables, cached until the next update."""
        if self._cache is None:
            d, E = self.delta, self.vocab_size
            t = (self.lex + d) / (self.lex.sum(axis=1, keepdims=True) + d * E)
            bg = (self.bigram + d) / (self.bigram.sum(axis=1, keepdims=True) + d * E)
            P = self.max_positions
            valid = np.arange(P + 1)[None, :] <= np.arange(P + 1)[:, None]  # i <= |x|
            a = (self.align + d) * valid[:, None, :]
            a /= a.sum(axis=2, keepdims=True)
            self._cache = (t, bg, a)
        return self._cache

    def copy(self) -> "Component":
        c = Component(self.src_vocab, self.tgt_vocab, self.lam, self.delta, self.rho0, self.max_positions,
                      self.alignment)
        c.lex, c.bigram, c.align, c.length = self.lex.copy(), self.bigram.copy(), self.align.copy(), self.length.copy()
        return c

    def state(self) -> dict:
        return {"lex": self.lex, "bigram": self.bigram, "align": self.align, "length": self.length}

    def hyper(self) -> dict:
        return {"lam": self.lam, "delta": self.delta, "rho0": self.rho0, "max_positions": self.max_positions,
                "alignment": self.alignment}

    # --- position weights ------------------------------------------------------

    def _position_weights(self, lx: np.ndarray, width: int, j: np.ndarray) -> np.ndarray:
        """a(i | j, |x|) for i = 0..width-1 (NULL first); shape (n, width, len(j))."""
        n = len(lx)
        i = np.arange(width)
        uniform = (i[None, :, None] <= lx[:, None, None]) / (lx[:, None, None] + 1.0)
        uniform = np.broadcast_to(uniform, (n, width, len(j)))
        if self.alignment == "uniform":
            return uniform
        P = self.max_positions
        a = self.tables()[2]
        li = np.minimum(lx, P)[:, None, None]
        ji = np.minimum(j, P - 1)[None, None, :]
        ii = np.minimum(i, P)[None, :, None]
        learned = a[li, ji, ii] * (i[None, :, None] <= lx[:, None, None])
        inside = (lx[:, None, None] <= P) & (j[None, None, :] < P)
        return np.where(inside, learned, uniform)

    def _lexical_terms(self, enc: Encoded):
        """Joint weights a(i|j)·t(y_j|x_i), shape (n, Lx+1, Ly), NULL at i = 0."""
        t = self.tables()[0]
        n = enc.n
        src = np.concatenate([np.full((n, 1), self.null_id), enc.src], axis=1)
        smask = np.concatenate([np.ones((n, 1), bool), enc.smask], axis=1)
        T = t[src[:, :, None], enc.tgt[:, None, :]] * smask[:, :, None]
        A = self._position_weights(enc.src_len, src.shape[1], np.arange(enc.tgt.shape[1]))
        return src, A * T

    # --- scoring ---------------------------------------------------------------

    def token_probs(self, enc: Encoded) -> np.ndarray:
        """p(y_j | y_{j-1}, x) for every target position, shape (n, Ly); 1 at padding."""
        bg = self.tables()[1]
        _, joint = self._lexical_terms(enc)
        prev = np.concatenate([np.full((enc.n, 1), BOS_ID), enc.tgt[:, :-1]], axis=1)
        p = self.lam * bg[prev, enc.tgt] + (1.0 - self.lam) * joint.sum(axis=1)
        return np.where(enc.tmask, p, 1.0)

    def score_encoded(self, enc: Encoded) -> np.ndarray:
        return np.log(self.token_probs(enc)).sum(axis=1) + self.log_p_len(enc.tgt_len)

    def step_distribution(self, src_ids, prev_ids, j: int) -> np.ndarray:
        """Next-token distributions for several prefixes of one source.

        ``prev_ids`` holds the last token of every prefix (BOS for the empty
        one) and ``j`` the position being generated.  Returns (len(prev), E).
        """
        t, bg, _ = self.tables()
        src = np.concatenate([[self.null_id], np.asarray(src_ids, dtype=np.int64)])
        lx = np.array([len(src) - 1])
        a = self._position_weights(lx, len(src), np.array([j]))[0, :, 0]  # (Lx+1,)
        lexical = a @ t[src]  # (E,)
        return self.lam * bg[np.asarray(prev_ids, dtype=np.int64)] + (1.0 - self.lam) * lexical[None, :]

    # --- updates ---------------------------------------------------------------

    def update_encoded(self, enc: Encoded, weights) -> None:
        """Add weighted counts for a batch; responsibilities use the pre-batch tables."""
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and >= 0")
        enc, w = _canonical(enc, w)
        if enc.n == 0:
            return
        F1, E = self.lex.shape
        P = self.max_positions
        src, joint = self._lexical_terms(enc)
        r = joint / np.where(enc.tmask, joint.sum(axis=1), 1.0)[:, None, :]
        r = r * (enc.tmask * w[:, None])[:, None, :]

        # bincount keeps a fixed summation order for a given (canonical) batch
        lex_idx = (src[:, :, None] * E + enc.tgt[:, None, :]).ravel()
        lex_add = np.bincount(lex_idx, weights=r.ravel(), minlength=F1 * E).reshape(F1, E)

        prev = np.concatenate([np.full((enc.n, 1), BOS_ID), enc.tgt[:, :-1]], axis=1)
        bg_idx = (prev * E + enc.tgt)[enc.tmask]
        bg_w = np.broadcast_to(w[:, None], enc.tgt.shape)[enc.tmask]
        bg_add = np.bincount(bg_idx, weights=bg_w, minlength=E * E).reshape(E, E)

        if self.alignment == "learned":
            lx = enc.src_len
            n, W, Ly = r.shape
            ii = np.broadcast_to(np.arange(W)[None, :, None], r.shape)
            jj = np.broadcast_to(np.arange(Ly)[None, None, :], r.shape)
            ll = np.broadcast_to(lx[:, None, None], r.shape)
            ok = (ll <= P) & (jj < P) & (ii <= ll)
            idx = ((ll * P + jj) * (P + 1) + ii)[ok]
            al_add = np.bincount(idx, weights=r[ok], minlength=self.align.size).reshape(self.align.shape)
            self.align += al_add

        self.lex += lex_add
        self.bigram += bg_add
        self.length += [math.fsum(w), math.fsum(w * enc.tgt_len)]
        self._cache = None


    def decay(self, factor: float) -> None:
        """Scale all counts by ``factor`` in (0, 1]; older evidence fades."""
        if not 0.0 < factor <= 1.0:
            raise ValueError("decay factor must be in (0, 1]")
        if factor == 1.0:
            return
        self.lex *= factor
        self.bigram *= factor
        self.align *= factor
        self.length *= factor
        self._cache = None


def _canonical(enc: Encoded, w: np.ndarray):
    """Merge duplicate pairs and sort, so updates do not depend on batch order."""
    groups: dict = {}
    for k in range(enc.n):
        key = (tuple(enc.src[k][enc.smask[k]]), tuple(enc.tgt[k][enc.tmask[k]]))
        groups.setdefault(key, []).append(float(w[k]))
    keys = sorted(groups)
    src, smask = _pad([k[0] for k in keys])
    tgt, tmask = _pad([k[1] for k in keys])
    merged = np.array([math.fsum(groups[k]) for k in keys])
    return Encoded(src, tgt, smask, tmask), merged


def component_score(c: Component, pair) -> float:
    """``log p(y | x)`` of one pair under ``c``."""
    return float(c.score_encoded(encode_pairs([pair], c.src_vocab, c.tgt_vocab))[0])


def component_update(c: Component, batch) -> Component:
    """Add the counts of ``batch``, a list of ``(pair, weight)``; updates ``c`` in place."""
    batch = list(batch)
    if not batch:
        return c
    pairs = [p for p, _ in batch]
    c.update_encoded(encode_pairs(pairs, c.src_vocab, c.tgt_vocab), [w for _, w in batch])
    return c
