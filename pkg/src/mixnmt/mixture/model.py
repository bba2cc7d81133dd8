"""Mixture container, training configuration and checkpoint files."""

from __future__ import annotations

import json
import math
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from ..corpus.vocab import Vocab
from .component import Component, encode_pairs
from .decode import decode
from .gate import HASH_DIM, GateModel

STRATEGIES = ("single", "uniform", "topic", "dynamic")
MANIFEST = "MODEL"


@dataclass(frozen=True)
class TrainConfig:
    B: int = 32  # instances per component per E-step / update batch
    epochs: float = 1.0
    interval: float = 0.1  # checkpoint spacing, in epochs
    seed: int = 0
    lam: float = 0.1
    delta: float = 0.5
    rho0: float = 0.2
    alignment: str = "learned"
    max_positions: int = 32
    beam: int = 4
    diversity: float = 0.0
    memory: float = 0.5  # count memory in epochs (weight e^-1 after this long); 0 keeps counts forever
    restarts: int = 1  # hill-climbing restarts per E-step
    gate_epochs: int = 5
    gate_lr: float = 1.0
    finetune_iters: int = 1
    finetune_weight: float = 5.0

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("B must be >= 1")
        if not self.interval > 0:
            raise ValueError("interval must be > 0")
        if not self.epochs > 0:
            raise ValueError("epochs must be > 0")
        if self.beam < 1:
            raise ValueError("beam must be >= 1")
        if self.memory < 0:
            raise ValueError("memory must be >= 0")
        if self.finetune_iters < 0 or self.finetune_weight < 0:
            raise ValueError("fine-tuning settings must be non-negative")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(d) - set(known)
        if unknown:
            raise ValueError(f"unknown TrainConfig keys: {sorted(unknown)}")
        out = {}
        defaults = cls()
        for k, v in d.items():
            kind = type(getattr(defaults, k))
            out[k] = kind(v)
        return cls(**out)

    def decay_factor(self, batch: int, corpus_size: int) -> float:
        """Per-update count decay so that ``memory`` epochs of data weigh e^-1."""
        if self.memory <= 0:
            return 1.0
        return math.exp(-batch / (self.memory * corpus_size))

    def component_kwargs(self) -> dict:
        return {"lam": self.lam, "delta": self.delta, "rho0": self.rho0, "max_positions": self.max_positions,
                "alignment": self.alignment}


class MixtureModel:
    def __init__(self, components, gate: GateModel, strategy: str, config: TrainConfig | None = None):
        if not components:
            raise ValueError("a mixture needs at least one component")
        if gate.K != len(components):
            raise ValueError("gate size must equal the number of components")
        if strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        self.components = list(components)
        self.gate = gate
        self.strategy = strategy
        self.config = config or TrainConfig()

    @property
    def K(self) -> int:
        return len(self.components)

    @property
    def src_vocab(self) -> Vocab:
        return self.components[0].src_vocab

    @property
    def tgt_vocab(self) -> Vocab:
        return self.components[0].tgt_vocab

    def copy(self) -> "MixtureModel":
        return MixtureModel([c.copy() for c in self.components], self.gate.copy(), self.strategy, self.config)

    def weights(self, sources) -> np.ndarray:
        return self.gate.predict_many(sources)

    def score_matrix(self, pairs) -> np.ndarray:
        """(N, K) matrix of ``log p(y | z, x)``."""
        enc = encode_pairs(list(pairs), self.src_vocab, self.tgt_vocab)
        return np.stack([c.score_encoded(enc) for c in self.components], axis=1)

    def translate(self, source, beam=None, diversity=None, max_len=None, weights=None):
        cfg = self.config
        w = self.weights([source])[0] if weights is None else weights
        return decode(self.components, w, source, beam or cfg.beam,
                      cfg.diversity if diversity is None else diversity, max_len or len(source))


def new_components(K: int, src_vocab: Vocab, tgt_vocab: Vocab, config: TrainConfig):
    return [Component(src_vocab, tgt_vocab, **config.component_kwargs()) for _ in range(K)]


# --- checkpoints ---------------------------------------------------------------


def save_model(model: MixtureModel, path, extra: dict | None = None) -> Path:
    """Write a checkpoint directory atomically (temp directory, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".tmp-" + path.name, dir=path.parent))
    try:
        model.src_vocab.save(tmp / "src.vocab")
        model.tgt_vocab.save(tmp / "tgt.vocab")
        files = ["src.vocab", "tgt.vocab"]
        for z, c in enumerate(model.components):
            for name, arr in c.state().items():
                fn = f"component{z}.{name}.npy"
                np.save(tmp / fn, arr)
                files.append(fn)
        np.save(tmp / "gate.W.npy", model.gate.W)
        np.save(tmp / "gate.b.npy", model.gate.b)
        files += ["gate.W.npy", "gate.b.npy"]
        meta = {"config": asdict(model.config), "component": model.components[0].hyper(),
                "gate": {"dim": model.gate.dim, "trainable": model.gate.trainable}}
        if extra:
            meta["extra"] = extra
        (tmp / "config.json").write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n")
        files.append("config.json")
        lines = ["MODEL v1", f"strategy {model.strategy}", f"K {model.K}"] + [f"file {f}" for f in files]
        (tmp / MANIFEST).write_text("\n".join(lines) + "\n")
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return path


def load_model(path) -> MixtureModel:
    path = Path(path)
    head = (path / MANIFEST).read_text().splitlines()
    if not head or head[0] != "MODEL v1":
        raise ValueError(f"{path}: not a MODEL v1 checkpoint")
    info = dict(line.split(" ", 1) for line in head[1:3])
    K = int(info["K"])
    meta = json.loads((path / "config.json").read_text())
    config = TrainConfig.from_dict(meta["config"])
    sv, tv = Vocab.load(path / "src.vocab"), Vocab.load(path / "tgt.vocab")
    comps = []
    for z in range(K):
        c = Component(sv, tv, **meta["component"])
        for name in ("lex", "bigram", "align", "length"):
            setattr(c, name, np.load(path / f"component{z}.{name}.npy"))
        comps.append(c)
    g = meta.get("gate", {})
    gate = GateModel(K, g.get("dim", HASH_DIM), np.load(path / "gate.W.npy"), np.load(path / "gate.b.npy"),
                     g.get("trainable", True))
    return MixtureModel(comps, gate, info["strategy"], config)
