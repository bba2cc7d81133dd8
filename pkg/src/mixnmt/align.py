"""Hierarchical bitext alignment.

Documents are aligned paragraph by paragraph and then sentence by sentence
with a monotone dynamic program over block patterns.  Each block is scored by
a convex mix of a Gale-Church style length term and a lexical term from a
Model-1 translation table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus.data import Corpus, SentencePair
from .corpus.text import TERMINATORS, script_fraction, tokenize

NULL = "<NULL>"

# Pattern priors from Gale & Church (1993), restricted to the allowed set.
PATTERN_PRIORS = {(1, 1): 0.89, (1, 0): 0.005, (0, 1): 0.005, (2, 1): 0.045, (1, 2): 0.045}
PATTERNS = tuple(PATTERN_PRIORS)

_STRIP = str.maketrans("", "", TERMINATORS)


def block_tokens(text: str, mode: str) -> tuple[str, ...]:
    """Tokens of a sentence or paragraph with sentence terminators removed."""
    return tokenize(text.translate(_STRIP), mode)


class TTable:
    """Lexical translation probabilities t(e|f), with a NULL source row."""

    def __init__(self, sources: Sequence[str], targets: Sequence[str], probs: np.ndarray):
        self.sources = list(sources)
        self.targets = list(targets)
        if self.sources[0] != NULL:
            raise ValueError("first source row must be NULL")
        self.src_index = {s: i for i, s in enumerate(self.sources)}
        self.tgt_index = {t: j for j, t in enumerate(self.targets)}
        self.probs = np.asarray(probs, dtype=float)
        if self.probs.shape != (len(self.sources), len(self.targets)):
            raise ValueError("probability matrix has the wrong shape")
        self.log_likelihoods: list[float] = []

    def __getitem__(self, key) -> float:
        f, e = key
        i, j = self.src_index.get(f), self.tgt_index.get(e)
        if i is None or j is None:
            return 0.0
        return float(self.probs[i, j])

    def row_sums(self) -> np.ndarray:
        return self.probs.sum(axis=1)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, f in enumerate(self.sources):
                for j in np.flatnonzero(self.probs[i]):
                    fh.write(f"{f}\t{self.targets[j]}\t{float(self.probs[i, j])!r}\n")

    @classmethod
    def load(cls, path) -> "TTable":
        entries = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line:
                f, e, p = line.split("\t")
                entries.append((f, e, float(p)))
        sources = [NULL] + sorted({f for f, _, _ in entries} - {NULL})
        targets = sorted({e for _, e, _ in entries})
        si = {s: i for i, s in enumerate(sources)}
        ti = {t: j for j, t in enumerate(targets)}
        probs = np.zeros((len(sources), len(targets)))
        for f, e, p in entries:
            probs[si[f], ti[e]] = p
        return cls(sources, targets, probs)


def _pad(seqs, fill=0):
    width = max(len(s) for s in seqs)
    out = np.full((len(seqs), width), fill, dtype=np.int64)
    mask = np.zeros((len(seqs), width), dtype=bool)
    for k, s in enumerate(seqs):
        out[k, : len(s)] = s
        mask[k, : len(s)] = True
    return out, mask


def train_model1(pairs, iterations: int = 5) -> TTable:
    """EM for a lexical translation table with a NULL source word.

    Starts from uniform t(e|f).  ``table.log_likelihoods`` records the corpus
    log-likelihood of each parameter iterate, including the initial one.
    """
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cannot train a translation table on an empty corpus")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    sources = [NULL] + sorted({f for p in pairs for f in p.source} - {NULL})
    targets = sorted({e for p in pairs for e in p.target})
    si = {s: i for i, s in enumerate(sources)}
    ti = {t: j for j, t in enumerate(targets)}
    src, smask = _pad([[0] + [si[f] for f in p.source] for p in pairs])
    tgt, tmask = _pad([[ti[e] for e in p.target] for p in pairs])
    src_len = smask.sum(axis=1)

    t = np.full((len(sources), len(targets)), 1.0 / len(targets))
    lls = []

    def expected_counts(t):
        probs = t[src[:, :, None], tgt[:, None, :]] * smask[:, :, None]
        denom = probs.sum(axis=1)  # (N, Lt)
        ll = np.log(denom / src_len[:, None])[tmask].sum()
        post = probs / denom[:, None, :]
        post *= tmask[:, None, :]
        counts = np.zeros_like(t)
        np.add.at(counts, (np.broadcast_to(src[:, :, None], post.shape), np.broadcast_to(tgt[:, None, :], post.shape)), post)
        return counts, float(ll)

    for _ in range(iterations):
        counts, ll = expected_counts(t)
        lls.append(ll)
        totals = counts.sum(axis=1, keepdims=True)
        t = np.divide(counts, totals, out=np.full_like(counts, 1.0 / len(targets)), where=totals > 0)
    lls.append(expected_counts(t)[1])

    table = TTable(sources, targets, t)
    table.log_likelihoods = lls
    return table


@dataclass(frozen=True)
class AlignParams:
    length_ratio: float = 1.0  # c: target characters per source character
    length_variance: float = 1.0  # s^2
    gamma: float = 0.5  # weight of the lexical term
    tau: float = -math.inf  # pairing-score threshold
    skip_score: float = -12.0  # log-score of the content of a 1-0 / 0-1 block
    lex_floor: float = 1e-6
    # Paragraph lengths absorb sentence drops, so their length term is widened.
    paragraph_variance_scale: float = 25.0
    patterns: tuple = PATTERNS
    source_mode: str = "char"
    target_mode: str = "word"

    def __post_init__(self):
        if not self.length_variance > 0:
            raise ValueError("length_variance must be positive")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if not set(self.patterns) <= set(PATTERNS):
            raise ValueError(f"unsupported patterns {self.patterns}")


@dataclass(frozen=True)
class AlignedBlock:
    source: tuple[int, ...]
    target: tuple[int, ...]
    score: float

    @property
    def pattern(self) -> tuple[int, int]:
        return len(self.source), len(self.target)


def token_length(tokens) -> int:
    return sum(len(t) for t in tokens)


def estimate_length_params(pairs) -> tuple[float, float]:
    """Length ratio c and variance s^2 from known-aligned pairs."""
    ls = np.array([token_length(p.source) for p in pairs], float)
    lt = np.array([token_length(p.target) for p in pairs], float)
    c = lt.sum() / ls.sum()
    s2 = float(np.mean((lt - c * ls) ** 2 / ls))
    return float(c), max(s2, 1e-6)


def document_length_ratio(docs, source_mode: str = "char", target_mode: str = "word") -> float:
    """Length ratio c from whole documents, for when no aligned pairs are available."""
    ls = lt = 0
    for doc in docs:
        ls += sum(token_length(block_tokens(s, source_mode)) for para in doc.source for s in para)
        lt += sum(token_length(block_tokens(s, target_mode)) for para in doc.target for s in para)
    if not ls or not lt:
        return 1.0
    return lt / ls


def length_logscore(ls: int, lt: int, pattern, params: AlignParams) -> float:
    prior = math.log(PATTERN_PRIORS[pattern])
    if ls == 0 or lt == 0:
        return prior + params.skip_score
    delta = (lt - params.length_ratio * ls) / math.sqrt(ls * params.length_variance)
    return prior - 0.5 * delta * delta - 0.5 * math.log(2 * math.pi)


def lexical_logscore(src_tokens, tgt_tokens, ttable: TTable, params: AlignParams) -> float:
    """Per-target-token Model-1 log-probability, NULL included in the average."""
    if not src_tokens or not tgt_tokens:
        return params.skip_score
    rows = [0] + [ttable.src_index[f] for f in src_tokens if f in ttable.src_index]
    n_src = len(src_tokens) + 1
    total = 0.0
    for e in tgt_tokens:
        j = ttable.tgt_index.get(e)
        p = 0.0 if j is None else float(ttable.probs[rows, j].sum()) / n_src
        total += math.log(max(p, params.lex_floor))
    return total / len(tgt_tokens)


class _BlockScorer:
    def __init__(self, src_blocks, tgt_blocks, ttable, params):
        self.src = [block_tokens(b, params.source_mode) for b in src_blocks]
        self.tgt = [block_tokens(b, params.target_mode) for b in tgt_blocks]
        self.ttable = ttable
        self.params = params
        self.cache = {}

    def __call__(self, i0, i1, j0, j1) -> float:
        key = (i0, i1, j0, j1)
        if key not in self.cache:
            s = [t for b in self.src[i0:i1] for t in b]
            e = [t for b in self.tgt[j0:j1] for t in b]
            pattern = (i1 - i0, j1 - j0)
            g = self.params.gamma
            self.cache[key] = (1 - g) * length_logscore(
                token_length(s), token_length(e), pattern, self.params
            ) + g * lexical_logscore(s, e, self.ttable, self.params)
        return self.cache[key]


def align_blocks(source_blocks, target_blocks, ttable: TTable, params: AlignParams) -> list[AlignedBlock]:
    """Maximum-score monotone cover of both block sequences."""
    n, m = len(source_blocks), len(target_blocks)
    if n == 0 and m == 0:
        return []
    score = _BlockScorer(source_blocks, target_blocks, ttable, params)
    best = np.full((n + 1, m + 1), -np.inf)
    back = {}
    best[0, 0] = 0.0
    for i in range(n + 1):
        for j in range(m + 1):
            if i == 0 and j == 0:
                continue
            for a, b in params.patterns:
                if a > i or b > j or best[i - a, j - b] == -np.inf:
                    continue
                cand = best[i - a, j - b] + score(i - a, i, j - b, j)
                if cand > best[i, j]:
                    best[i, j] = cand
                    back[i, j] = (a, b)
    if best[n, m] == -np.inf:
        raise ValueError("no monotone cover exists with the allowed patterns")
    blocks = []
    i, j = n, m
    while i or j:
        a, b = back[i, j]
        blocks.append(
            AlignedBlock(tuple(range(i - a, i)), tuple(range(j - b, j)), score(i - a, i, j - b, j))
        )
        i, j = i - a, j - b
    return blocks[::-1]


def calibrate_params(seed_pairs, ttable: TTable, gamma: float = 0.5, quantile: float = 0.05, **kwargs) -> AlignParams:
    """Length statistics and threshold from a seed corpus of true 1-1 pairs.

    tau is the ``quantile`` of the 1-1 block scores of the seed pairs.
    """
    seed_pairs = list(seed_pairs)
    c, s2 = estimate_length_params(seed_pairs)
    params = AlignParams(length_ratio=c, length_variance=s2, gamma=gamma, **kwargs)
    scores = [
        (1 - gamma) * length_logscore(token_length(p.source), token_length(p.target), (1, 1), params)
        + gamma * lexical_logscore(p.source, p.target, ttable, params)
        for p in seed_pairs
    ]
    return AlignParams(
        length_ratio=c, length_variance=s2, gamma=gamma, tau=float(np.quantile(scores, quantile)), **kwargs
    )


def _keep_sentences(doc, profile):
    """Per side, paragraphs of (original index, sentence) surviving the unit filters."""
    src_all = {s for para in doc.source for s in para}
    tgt_all = {s for para in doc.target for s in para}
    sides = []
    for paras, other, script in (
        (doc.source, tgt_all, profile.source_script),
        (doc.target, src_all, profile.target_script),
    ):
        k = 0
        kept = []
        for para in paras:
            out = []
            for sent in para:
                ok = sent not in other and (
                    script is None or script_fraction(sent, script) >= profile.min_fraction
                )
                if ok:
                    out.append((k, sent))
                k += 1
            if out:
                kept.append(out)
        sides.append(kept)
    return sides


def align_document_pair(doc, ttable: TTable, params: AlignParams, profile: "LanguageProfile | None" = None) -> Corpus:
    """Paragraph alignment, then sentence alignment inside each aligned paragraph block.

    Sentences that also occur verbatim on the other side, or are not in the
    expected script, are discarded before alignment.  Only 1-1 sentence blocks
    are returned.  Each pair's ``origin`` is ``(doc_id, source sentence index,
    target sentence index)`` over the whole document, and ``score`` is its
    block score.
    """
    src_paras, tgt_paras = _keep_sentences(doc, profile or LanguageProfile())
    para_params = replace(params, length_variance=params.length_variance * params.paragraph_variance_scale)
    para_blocks = align_blocks(
        [" ".join(s for _, s in p) for p in src_paras],
        [" ".join(s for _, s in p) for p in tgt_paras],
        ttable,
        para_params,
    )
    pairs = []
    for pb in para_blocks:
        if not pb.source or not pb.target:
            continue
        src_sents = [x for k in pb.source for x in src_paras[k]]
        tgt_sents = [x for k in pb.target for x in tgt_paras[k]]
        blocks = align_blocks([s for _, s in src_sents], [s for _, s in tgt_sents], ttable, params)
        for sb in blocks:
            if sb.pattern != (1, 1):
                continue
            i, src_text = src_sents[sb.source[0]]
            j, tgt_text = tgt_sents[sb.target[0]]
            src = block_tokens(src_text, params.source_mode)
            tgt = block_tokens(tgt_text, params.target_mode)
            if src and tgt:
                pairs.append(SentencePair(src, tgt, score=sb.score, origin=(doc.doc_id, i, j)))
    return Corpus(tuple(pairs))


@dataclass(frozen=True)
class LanguageProfile:
    source_script: str | None = "cjk"
    target_script: str | None = "latin"
    min_fraction: float = 0.5


def filter_pairs(pairs, params: AlignParams, profile: LanguageProfile | None = None) -> Corpus:
    """Drop identical, wrong-language and low-scoring pairs, preserving order."""
    profile = profile or LanguageProfile()
    kept = []
    for p in pairs:
        src, tgt = "".join(p.source), "".join(p.target)
        if src == tgt:
            continue
        if profile.source_script and script_fraction(src, profile.source_script) < profile.min_fraction:
            continue
        if profile.target_script and script_fraction(tgt, profile.target_script) < profile.min_fraction:
            continue
        if p.score is not None and p.score < params.tau:
            continue
        kept.append(p)
    return Corpus(tuple(kept))
