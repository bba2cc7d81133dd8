from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

UNK, BOS, EOS, PAD = "<unk>", "<s>", "</s>", "<pad>"
RESERVED = (UNK, BOS, EOS, PAD)
UNK_ID, BOS_ID, EOS_ID, PAD_ID = range(4)


class Vocab:
    """Ordered token list with the four reserved entries at indices 0-3."""

    def __init__(self, tokens: Iterable[str] = ()):
        self.itos: list[str] = list(RESERVED)
        self.stoi: dict[str, int] = {t: i for i, t in enumerate(self.itos)}
        for tok in tokens:
            if tok in self.stoi:
                if tok in RESERVED:
                    continue
                raise ValueError(f"duplicate token {tok!r}")
            self.stoi[tok] = len(self.itos)
            self.itos.append(tok)

    def __len__(self) -> int:
        return len(self.itos)

    def __contains__(self, tok: str) -> bool:
        return tok in self.stoi

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.itos == other.itos

    def __repr__(self) -> str:
        return f"Vocab(size={len(self)})"

    def encode(self, tokens: Sequence[str]) -> list[int]:
        return [self.stoi.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Sequence[int]) -> tuple[str, ...]:
        return tuple(self.itos[i] for i in ids)

    def save(self, path) -> None:
        Path(path).write_text("".join(t + "\n" for t in self.itos), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "Vocab":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        if tuple(lines[:4]) != RESERVED:
            raise ValueError(f"{path}: reserved entries missing")
        return cls(lines[4:])


def build_vocab(corpus, side: str, cap: int) -> Vocab:
    """Keep the ``cap - 4`` most frequent tokens of one side of ``corpus``.

    Frequency ties are broken lexicographically so the result does not depend
    on corpus order.
    """
    if cap < len(RESERVED):
        raise ValueError("cap must leave room for the reserved entries")
    if side not in ("source", "target"):
        raise ValueError(f"side must be 'source' or 'target', got {side!r}")
    counts: Counter = Counter()
    for pair in corpus:
        counts.update(getattr(pair, side))
    for tok in RESERVED:
        counts.pop(tok, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocab(tok for tok, _ in ranked[: cap - len(RESERVED)])
