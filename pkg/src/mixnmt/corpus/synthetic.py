"""Synthetic multi-domain parallel data with known ground truth.

Every domain is a substitution cipher: a bijection from its source characters
to target words, followed by a fixed reordering of positions.  Domains may
share source characters (mapped differently in each domain), which is what
makes a single model trained on the union ambiguous.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .data import Corpus, SentencePair
from .text import segment_sentences, split_paragraphs

_CJK_BASE = 0x4E00
_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


class SyntheticConfigError(ValueError):
    pass


def source_alphabet(n: int, offset: int = 0) -> list[str]:
    return [chr(_CJK_BASE + offset + i) for i in range(n)]


def pseudo_words(n: int, rng: np.random.Generator) -> list[str]:
    """``n`` distinct lowercase pseudo-words of 2-4 letters."""
    cv = [c + v for c in _CONSONANTS for v in _VOWELS]
    pool = cv + [s + c for s in cv for c in _CONSONANTS] + [a + b for a in cv for b in cv]
    if n > len(pool):
        raise SyntheticConfigError(f"at most {len(pool)} target words available")
    idx = rng.permutation(len(pool))[:n]
    return [pool[i] for i in sorted(idx)]


@dataclass(frozen=True)
class SyntheticSpec:
    source_vocabs: tuple[tuple[str, ...], ...]
    mappings: tuple[dict, ...]
    # Per-domain permutation of positions 0..max_len-1; None keeps source order.
    orders: tuple[tuple[int, ...] | None, ...]
    token_weights: tuple[tuple[float, ...], ...] | None = None
    length_range: tuple[int, int] = (4, 8)
    num_pairs: int = 1000
    domain_weights: tuple[float, ...] | None = None
    identical_rate: float = 0.0
    wrong_language_rate: float = 0.0
    misalignment_rate: float = 0.0
    # Share of misalignment events that merge two sentences instead of dropping one.
    merge_fraction: float = 0.0
    num_documents: int = 10
    paragraphs_per_document: tuple[int, int] = (2, 4)
    sentences_per_paragraph: tuple[int, int] = (2, 5)
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def num_domains(self) -> int:
        return len(self.source_vocabs)

    def validate(self) -> None:
        D = self.num_domains
        if D < 1:
            raise SyntheticConfigError("need at least one domain")
        if not (len(self.mappings) == len(self.orders) == D):
            raise SyntheticConfigError("mappings and orders must have one entry per domain")
        lo, hi = self.length_range
        if not 1 <= lo <= hi:
            raise SyntheticConfigError(f"bad length_range {self.length_range}")
        if self.num_pairs < 0 or self.num_documents < 0:
            raise SyntheticConfigError("counts must be non-negative")
        for name in ("identical_rate", "wrong_language_rate", "misalignment_rate", "merge_fraction"):
            r = getattr(self, name)
            if not 0.0 <= r <= 1.0:
                raise SyntheticConfigError(f"{name}={r} outside [0, 1]")
        for d, (vocab, mapping, order) in enumerate(zip(self.source_vocabs, self.mappings, self.orders)):
            if not vocab:
                raise SyntheticConfigError(f"domain {d} has an empty vocabulary")
            if set(mapping) != set(vocab):
                raise SyntheticConfigError(f"domain {d}: mapping must cover the vocabulary exactly")
            if len(set(mapping.values())) != len(mapping):
                raise SyntheticConfigError(f"domain {d}: mapping is not bijective")
            if order is not None and sorted(order) != list(range(hi)):
                raise SyntheticConfigError(f"domain {d}: order must permute range({hi})")
        if self.token_weights is not None:
            for d, w in enumerate(self.token_weights):
                if len(w) != len(self.source_vocabs[d]) or min(w) < 0 or sum(w) <= 0:
                    raise SyntheticConfigError(f"domain {d}: bad token weights")
        if self.domain_weights is not None:
            w = self.domain_weights
            if len(w) != D or min(w) < 0 or sum(w) <= 0:
                raise SyntheticConfigError("bad domain weights")
        for name in ("paragraphs_per_document", "sentences_per_paragraph"):
            lo, hi = getattr(self, name)
            if not 1 <= lo <= hi:
                raise SyntheticConfigError(f"bad {name}")


def make_cipher_spec(
    num_domains: int = 3,
    vocab_size: int = 40,
    shared_fraction: float = 0.0,
    shared_targets: bool = False,
    reorder: bool = False,
    zipf: float = 0.0,
    seed: int = 0,
    shared_mapping: bool = False,
    **kwargs,
) -> SyntheticSpec:
    """Build a random cipher spec.

    ``shared_fraction`` of each domain's source characters come from a pool
    common to all domains.  With ``shared_targets`` every domain maps onto the
    same target word list (so target words alone do not reveal the domain).
    ``zipf`` is the exponent of the per-domain token frequency law; 0 gives
    uniform sampling.  With ``shared_mapping`` the shared characters translate
    to the same words in every domain (a general vocabulary), so domains differ
    only in their own characters and word order.  Remaining keyword arguments
    go to :class:`SyntheticSpec`.
    """
    if shared_mapping and shared_targets:
        raise SyntheticConfigError("shared_mapping and shared_targets are exclusive")
    rng = np.random.default_rng(seed)
    n_shared = int(round(shared_fraction * vocab_size))
    n_own = vocab_size - n_shared
    shared = source_alphabet(n_shared)
    n_targets = vocab_size if shared_targets else vocab_size * num_domains
    words = pseudo_words(n_targets + (n_shared if shared_mapping else 0), rng)
    general = {}
    if shared_mapping:
        general = dict(zip(shared, words[-n_shared:] if n_shared else []))
        words = words[: len(words) - n_shared]
    hi = kwargs.get("length_range", (4, 8))[1]

    vocabs, mappings, orders, weights = [], [], [], []
    for d in range(num_domains):
        vocab = shared + source_alphabet(n_own, offset=n_shared + d * n_own)
        pool = words if shared_targets else words[d * vocab_size : (d + 1) * vocab_size]
        perm = rng.permutation(vocab_size)
        mapping = {s: pool[perm[i]] for i, s in enumerate(vocab)}
        mapping.update(general)
        mappings.append(mapping)
        vocabs.append(tuple(vocab))
        if reorder and d > 0:
            orders.append(tuple(int(i) for i in rng.permutation(hi)))
        else:
            orders.append(None)
        ranks = rng.permutation(vocab_size) + 1
        weights.append(tuple(float(r) ** -zipf for r in ranks))
    spec = SyntheticSpec(
        source_vocabs=tuple(vocabs),
        mappings=tuple(mappings),
        orders=tuple(orders),
        token_weights=tuple(weights),
        **kwargs,
    )
    spec.validate()
    return spec


def drift_domain(spec: SyntheticSpec, domain: int, fraction: float, seed: int) -> SyntheticSpec:
    """Single-domain spec equal to ``domain`` with ``fraction`` of its mapping shuffled.

    Models a target domain whose usage differs slightly from the matching
    pretraining domain.
    """
    rng = np.random.default_rng(seed)
    vocab = spec.source_vocabs[domain]
    mapping = dict(spec.mappings[domain])
    n = int(round(fraction * len(vocab)))
    if n >= 2:
        chosen = [vocab[i] for i in sorted(rng.choice(len(vocab), size=n, replace=False))]
        values = [mapping[s] for s in chosen]
        rolled = values[1:] + values[:1]  # derangement of the chosen outputs
        mapping.update(zip(chosen, rolled))
    weights = None if spec.token_weights is None else (spec.token_weights[domain],)
    return replace(
        spec,
        source_vocabs=(vocab,),
        mappings=(mapping,),
        orders=(spec.orders[domain],),
        token_weights=weights,
        domain_weights=None,
    )


def _reorder(tokens: list[str], order) -> list[str]:
    if order is None:
        return tokens
    n = len(tokens)
    positions = sorted(range(n), key=lambda i: order[i])
    return [tokens[i] for i in positions]


class _Sampler:
    def __init__(self, spec: SyntheticSpec, rng: np.random.Generator):
        self.spec = spec
        self.rng = rng
        self.probs = []
        for d, vocab in enumerate(spec.source_vocabs):
            w = np.ones(len(vocab)) if spec.token_weights is None else np.asarray(spec.token_weights[d], float)
            self.probs.append(w / w.sum())
        dw = np.ones(spec.num_domains) if spec.domain_weights is None else np.asarray(spec.domain_weights, float)
        self.domain_probs = dw / dw.sum()

    def domain(self) -> int:
        return int(self.rng.choice(len(self.domain_probs), p=self.domain_probs))

    def source(self, d: int) -> list[str]:
        lo, hi = self.spec.length_range
        n = int(self.rng.integers(lo, hi + 1))
        vocab = self.spec.source_vocabs[d]
        idx = self.rng.choice(len(vocab), size=n, p=self.probs[d])
        return [vocab[i] for i in idx]

    def translate(self, d: int, source: list[str]) -> list[str]:
        mapping = self.spec.mappings[d]
        return _reorder([mapping[s] for s in source], self.spec.orders[d])


def generate_synthetic_corpus(spec: SyntheticSpec, seed: int) -> Corpus:
    """Sample ``spec.num_pairs`` labelled pairs; noise rates corrupt some targets.

    Identical pairs copy the source into the target, wrong-language pairs get a
    random source-language target, misaligned pairs borrow the target of an
    unrelated sentence.  Corrupted pairs keep the domain label of their source.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    sampler = _Sampler(spec, rng)
    pairs = []
    for _ in range(spec.num_pairs):
        d = sampler.domain()
        src = sampler.source(d)
        tgt = sampler.translate(d, src)
        u = rng.random()
        if u < spec.identical_rate:
            tgt = list(src)
        elif u < spec.identical_rate + spec.wrong_language_rate:
            tgt = sampler.source(sampler.domain())
        elif u < spec.identical_rate + spec.wrong_language_rate + spec.misalignment_rate:
            d2 = sampler.domain()
            tgt = sampler.translate(d2, sampler.source(d2))
        pairs.append(SentencePair(tuple(src), tuple(tgt), d))
    return Corpus(tuple(pairs), meta={"seed": seed})


@dataclass
class DocumentPair:
    doc_id: str
    source: list[list[str]]  # paragraphs of sentence strings
    target: list[list[str]]


def _src_text(tokens) -> str:
    return "".join(tokens) + "。"


def _tgt_text(tokens) -> str:
    return " ".join(tokens) + "."


def generate_synthetic_documents(spec: SyntheticSpec, seed: int):
    """Parallel documents plus the gold list of surviving 1-1 sentence pairs.

    Returns ``(documents, gold)`` where gold holds ``(doc_id, src_index,
    tgt_index)`` with sentence indices counted over the whole document.
    """
    spec.validate()
    rng = np.random.default_rng(seed)
    sampler = _Sampler(spec, rng)
    p_drop = spec.misalignment_rate * (1.0 - spec.merge_fraction)
    p_merge = spec.misalignment_rate * spec.merge_fraction
    docs, gold = [], []
    for k in range(spec.num_documents):
        doc_id = f"doc{k:04d}"
        d = sampler.domain()
        src_paras, tgt_paras = [], []
        n_src = n_tgt = 0
        for _ in range(int(rng.integers(spec.paragraphs_per_document[0], spec.paragraphs_per_document[1] + 1))):
            n_sent = int(rng.integers(spec.sentences_per_paragraph[0], spec.sentences_per_paragraph[1] + 1))
            sources = [sampler.source(d) for _ in range(n_sent)]
            src_para, tgt_para = [], []
            i = 0
            while i < n_sent:
                src = sources[i]
                u = rng.random()
                if u < p_drop:
                    src_para.append(_src_text(src))
                    n_src += 1
                    i += 1
                elif u < p_drop + p_merge and i + 1 < n_sent:
                    nxt = sources[i + 1]
                    src_para += [_src_text(src), _src_text(nxt)]
                    tgt_para.append(_tgt_text(sampler.translate(d, src) + sampler.translate(d, nxt)))
                    n_src += 2
                    n_tgt += 1
                    i += 2
                else:
                    src_para.append(_src_text(src))
                    tgt_para.append(_tgt_text(sampler.translate(d, src)))
                    gold.append((doc_id, n_src, n_tgt))
                    n_src += 1
                    n_tgt += 1
                    i += 1
                if rng.random() < spec.identical_rate:
                    copy = _src_text(sampler.source(d))
                    src_para.append(copy)
                    tgt_para.append(copy)
                    n_src += 1
                    n_tgt += 1
                if rng.random() < spec.wrong_language_rate:
                    src_para.append(_src_text(sampler.source(d)))
                    tgt_para.append(_src_text(sampler.source(d)))
                    n_src += 1
                    n_tgt += 1
            src_paras.append(src_para)
            if tgt_para:
                tgt_paras.append(tgt_para)
        docs.append(DocumentPair(doc_id, src_paras, tgt_paras))
    return docs, gold


def write_documents(docs, root) -> None:
    """Write ``root/src/<doc_id>.txt`` and ``root/tgt/<doc_id>.txt``."""
    root = Path(root)
    for side in ("src", "tgt"):
        (root / side).mkdir(parents=True, exist_ok=True)
    for doc in docs:
        for side, paras in (("src", doc.source), ("tgt", doc.target)):
            text = "\n\n".join("\n".join(p) for p in paras) + "\n"
            (root / side / f"{doc.doc_id}.txt").write_text(text, encoding="utf-8")


def read_documents(src_dir, tgt_dir) -> list[DocumentPair]:
    """Pair up same-named files from two directories."""
    src_dir, tgt_dir = Path(src_dir), Path(tgt_dir)
    docs = []
    for path in sorted(src_dir.glob("*.txt")):
        other = tgt_dir / path.name
        if not other.exists():
            continue
        paras = []
        for p in (path, other):
            text = p.read_text(encoding="utf-8")
            paras.append([segment_sentences(par) for par in split_paragraphs(text)])
        docs.append(DocumentPair(path.stem, paras[0], paras[1]))
    return docs


def write_gold(gold, path) -> None:
    Path(path).write_text("".join(f"{d}\t{s}\t{t}\n" for d, s, t in gold), encoding="utf-8")


def read_gold(path) -> list[tuple[str, int, int]]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            d, s, t = line.split("\t")
            out.append((d, int(s), int(t)))
    return out

