from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

from .text import detokenize, tokenize


@dataclass(frozen=True)
class SentencePair:
    source: tuple[str, ...]
    target: tuple[str, ...]
    domain: int | None = None
    weight: float = 1.0
    score: float | None = None  # pairing score from the aligner, if any
    origin: tuple | None = None  # provenance, e.g. (doc_id, src_index, tgt_index)

    def __post_init__(self):
        object.__setattr__(self, "source", tuple(self.source))
        object.__setattr__(self, "target", tuple(self.target))
        if not self.source or not self.target:
            raise ValueError("source and target must be non-empty")
        if not self.weight >= 0:
            raise ValueError(f"weight must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class Corpus:
    """Immutable sequence of sentence pairs with optional provenance."""

    pairs: tuple[SentencePair, ...] = ()
    path: str | None = None
    line_numbers: tuple[int, ...] | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        if self.line_numbers is not None:
            lines = tuple(self.line_numbers)
            if len(lines) != len(self.pairs):
                raise ValueError("one line number per pair required")
            if len(set(lines)) != len(lines):
                raise ValueError("line numbers must be unique")
            object.__setattr__(self, "line_numbers", lines)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[SentencePair]:
        return iter(self.pairs)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return Corpus(self.pairs[idx])
        return self.pairs[idx]

    def subset(self, indices: Sequence[int]) -> "Corpus":
        return Corpus(tuple(self.pairs[i] for i in indices))

    @property
    def domains(self) -> list[int | None]:
        return [p.domain for p in self.pairs]


def read_pairs(path, source_mode: str = "char", target_mode: str = "word") -> Corpus:
    """Read a ``source<TAB>target[<TAB>domain]`` file.

    Lines whose source or target tokenizes to nothing are skipped.
    """
    pairs, lines = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise ValueError(f"{path}:{lineno}: expected 2 or 3 tab-separated fields")
            src = tokenize(fields[0], source_mode)
            tgt = tokenize(fields[1], target_mode)
            if not src or not tgt:
                continue
            domain = int(fields[2]) if len(fields) == 3 and fields[2] != "" else None
            pairs.append(SentencePair(src, tgt, domain))
            lines.append(lineno)
    return Corpus(tuple(pairs), str(path), tuple(lines))


def write_pairs(corpus, path, source_mode: str = "char", target_mode: str = "word") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in corpus:
            fields = [detokenize(p.source, source_mode), detokenize(p.target, target_mode)]
            if p.domain is not None:
                fields.append(str(p.domain))
            fh.write("\t".join(fields) + "\n")
