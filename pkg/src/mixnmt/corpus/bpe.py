"""Byte-pair encoding without end-of-word markers.

Merges are learned greedily (most frequent adjacent pair, ties broken by the
pair itself) and applied in learned order, leftmost occurrence first.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable


@dataclass(frozen=True)
class BpeModel:
    merges: tuple[tuple[str, str], ...] = ()
    alphabet: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        if len(set(self.merges)) != len(self.merges):
            raise ValueError("duplicate merge operations")

    @property
    def symbols(self) -> set[str]:
        """Alphabet plus every symbol produced by a merge."""
        return set(self.alphabet) | {a + b for a, b in self.merges}

    def save(self, path) -> None:
        lines = [f"BPE v1 {len(self.merges)}"]
        lines += [f"{a} {b}" for a, b in self.merges]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "BpeModel":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        head = lines[0].split() if lines else []
        if len(head) != 3 or head[:2] != ["BPE", "v1"]:
            raise ValueError(f"{path}: not a BPE v1 file")
        n = int(head[2])
        merges = [tuple(line.split(" ")) for line in lines[1 : n + 1]]
        if len(merges) != n or any(len(m) != 2 for m in merges):
            raise ValueError(f"{path}: expected {n} merges")
        alphabet = {ch for a, b in merges for ch in a + b}
        return cls(tuple(merges), frozenset(alphabet))


def _merge_word(symbols: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    a, b = pair
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i + 1 < n and symbols[i] == a and symbols[i + 1] == b:
            out.append(a + b)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return tuple(out)


def learn_bpe(corpus: Iterable[str], num_merges: int) -> BpeModel:
    """Learn up to ``num_merges`` merges from whitespace-separated words."""
    if num_merges < 0:
        raise ValueError("num_merges must be >= 0")
    words: Counter = Counter()
    for line in corpus:
        words.update(line.split())
    vocab = {tuple(w): c for w, c in words.items()}
    alphabet = frozenset(ch for w in words for ch in w)

    merges: list[tuple[str, str]] = []
    while len(merges) < num_merges:
        pairs: Counter = Counter()
        for syms, c in vocab.items():
            for p in zip(syms, syms[1:]):
                pairs[p] += c
        if not pairs:
            break
        best = min(pairs.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        merges.append(best)
        merged: Counter = Counter()
        for syms, c in vocab.items():
            merged[_merge_word(syms, best)] += c
        vocab = merged
    return BpeModel(tuple(merges), alphabet)


def apply_bpe(model: BpeModel, word: str) -> tuple[str, ...]:
    symbols = tuple(word)
    for pair in model.merges:
        if len(symbols) < 2:
            break
        symbols = _merge_word(symbols, pair)
    return symbols


def bpe_tokenize(model: BpeModel, text: str) -> tuple[str, ...]:
    return tuple(s for w in text.split() for s in apply_bpe(model, w))
