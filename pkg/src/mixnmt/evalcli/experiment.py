"""End-to-end experiments: split, pretrain, fine-tune, decode, evaluate."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .. import __version__
from ..corpus.data import Corpus, read_pairs
from ..mixture import MixtureModel, TrainConfig, decode, dynamic_pretrain, finetune, save_model, split_pretrain
from ..mixture.train import make_vocabs
from ..topicmodel import fit_bilingual_topics, topic_posteriors
from .metrics import corpus_bleu, pearson, purity, token_accuracy

METRICS_HEADER = ("experiment", "strategy", "seed", "epoch", "metric", "value")
FINETUNE_SUFFIX = "+ft"


@dataclass(frozen=True)
class MetricsRow:
    experiment: str
    strategy: str
    seed: int
    epoch: float
    metric: str
    value: float

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"metric {self.metric} is not finite: {self.value}")

    def key(self):
        return (self.experiment, self.strategy, self.seed, self.epoch, self.metric)

    def cells(self):
        return [self.experiment, self.strategy, str(self.seed), repr(float(self.epoch)), self.metric,
                repr(float(self.value))]


def write_metrics(rows, path) -> None:
    keys = [r.key() for r in rows]
    if len(set(keys)) != len(keys):
        raise ValueError("duplicate metrics rows")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(METRICS_HEADER)
    for r in rows:
        w.writerow(r.cells())
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def read_metrics(path) -> list[MetricsRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        return [MetricsRow(e, s, int(sd), float(ep), m, float(v)) for e, s, sd, ep, m, v in reader]


# --- splits --------------------------------------------------------------------


def split_uniform(corpus, K: int, seed: int):
    """Random partition into ``K`` near-equal subsets; returns (subsets, labels)."""
    pairs = list(corpus)
    labels = np.empty(len(pairs), np.int64)
    for z, part in enumerate(np.array_split(np.random.default_rng(seed).permutation(len(pairs)), K)):
        labels[part] = z
    return [Corpus(tuple(p for p, l in zip(pairs, labels) if l == z)) for z in range(K)], labels


def split_topic(corpus, K: int, seed: int, iterations: int = 20, alpha: float = 1.0):
    """Fit the bilingual topic model and group pairs by their most likely topic.

    Empty topics are not allowed as subsets; a topic that wins no pair gets
    the pairs it scores highest on relative to the others.
    """
    pairs = list(corpus)
    tm = fit_bilingual_topics(pairs, K, alpha=alpha, iterations=iterations, seed=seed)
    post = topic_posteriors(tm, pairs)
    labels = np.argmax(post, axis=1)
    for z in range(K):
        if not np.any(labels == z):
            take = np.argsort(-(post[:, z] - post.max(axis=1)), kind="stable")[: max(1, len(pairs) // (K * 10))]
            labels[take] = z
    subsets = [Corpus(tuple(p for p, l in zip(pairs, labels) if l == z)) for z in range(K)]
    return subsets, labels, tm


def pretrain(strategy: str, corpus, K: int, config: TrainConfig, out_dir=None, topic_iterations: int = 20,
             topic_alpha: float = 1.0, vocabs=None):
    """Pretrain one strategy; returns the model and the split labels (None for dynamic)."""
    pairs = list(corpus)
    vocabs = vocabs or make_vocabs(pairs)
    if strategy == "single":
        return split_pretrain([pairs], config, "single", out_dir, vocabs), np.zeros(len(pairs), np.int64)
    if strategy == "uniform":
        subsets, labels = split_uniform(pairs, K, config.seed)
        return split_pretrain(subsets, config, "uniform", out_dir, vocabs), labels
    if strategy == "topic":
        subsets, labels, _ = split_topic(pairs, K, config.seed, topic_iterations, topic_alpha)
        return split_pretrain(subsets, config, "topic", out_dir, vocabs), labels
    if strategy == "dynamic":
        model = dynamic_pretrain(pairs, K, config, out_dir, vocabs=vocabs)
        return model, model.history.final_assignment
    raise ValueError(f"unknown strategy {strategy!r}")


# --- evaluation ------------------------------------------------------------------


def translate_all(model: MixtureModel, sources, beam=None, diversity=None, component: int | None = None):
    cfg = model.config
    beam = beam or cfg.beam
    diversity = cfg.diversity if diversity is None else diversity
    sources = list(sources)
    if component is None:
        comps, W = model.components, model.weights(sources)
    else:
        comps, W = [model.components[component]], np.ones((len(sources), 1))
    return [decode(comps, w, s, beam, diversity, max_len=len(s)) for s, w in zip(sources, W)]


def evaluate(model: MixtureModel, eval_set, beam=None, diversity=None, component=None) -> dict:
    pairs = list(eval_set)
    hyps = translate_all(model, [p.source for p in pairs], beam, diversity, component)
    refs = [p.target for p in pairs]
    return {"accuracy": token_accuracy(hyps, refs), "bleu": corpus_bleu(hyps, refs)}


@dataclass(frozen=True)
class ComponentRow:
    component: int
    accuracy: float
    bleu: float
    weight: float


def report_components(model: MixtureModel, eval_set, beam=None) -> list[ComponentRow]:
    """Per component: its own translation quality and its average gate weight."""
    pairs = list(eval_set)
    weights = model.weights([p.source for p in pairs]).mean(axis=0)
    rows = []
    for z in range(model.K):
        m = evaluate(model, pairs, beam, 0.0, component=z)
        rows.append(ComponentRow(z, m["accuracy"], m["bleu"], float(weights[z])))
    return rows


def format_report(rows) -> str:
    lines = ["component  accuracy  bleu     weight"]
    lines += [f"{r.component:<9d}  {r.accuracy:.4f}    {r.bleu:7.3f}  {r.weight:.4f}" for r in rows]
    return "\n".join(lines)


def figure2_stats(rows) -> dict:
    acc = [r.accuracy for r in rows]
    return {"accuracy_variance": float(np.var(acc)), "weight_correlation": pearson(acc, [r.weight for r in rows])}


# --- pipeline --------------------------------------------------------------------


def run_pipeline(pretrain_set, finetune_set, eval_set, strategies, K: int, config: TrainConfig,
                 experiment: str = "experiment", out_dir=None, finetune_stage: bool = True,
                 topic_iterations: int = 20, topic_alpha: float = 1.0, report: bool = True):
    """Run every strategy; returns (metric rows, {strategy: model}, {strategy: component rows})."""
    pretrain_set, eval_set = list(pretrain_set), list(eval_set)
    finetune_set = list(finetune_set) if finetune_set is not None else []
    vocabs = make_vocabs(pretrain_set + finetune_set)
    gold = [p.domain for p in pretrain_set]
    rows, models, reports = [], {}, {}
    ep = float(config.epochs)

    def add(strategy, metric, value):
        rows.append(MetricsRow(experiment, strategy, config.seed, ep, metric, float(value)))

    for strategy in strategies:
        k = 1 if strategy == "single" else K
        sdir = None if out_dir is None else Path(out_dir) / strategy / "checkpoints"
        model, labels = pretrain(strategy, pretrain_set, k, config, sdir, topic_iterations, topic_alpha, vocabs)
        models[strategy] = model
        if out_dir is not None:
            save_model(model, Path(out_dir) / strategy / "pretrain")
        for name, value in evaluate(model, eval_set).items():
            add(strategy, name, value)
        if labels is not None and all(g is not None for g in gold):
            seen = labels >= 0
            add(strategy, "split_purity", purity(labels[seen], np.asarray(gold)[seen]))
        if report:
            comp = report_components(model, eval_set)
            reports[strategy] = comp
            for r in comp:
                add(strategy, f"component{r.component}.accuracy", r.accuracy)
                add(strategy, f"component{r.component}.weight", r.weight)
            for name, value in figure2_stats(comp).items():
                add(strategy, name, value)
        if finetune_stage and finetune_set:
            tuned = finetune(model, finetune_set, config)
            models[strategy + FINETUNE_SUFFIX] = tuned
            if out_dir is not None:
                save_model(tuned, Path(out_dir) / strategy / "finetune")
            for name, value in evaluate(tuned, eval_set).items():
                add(strategy + FINETUNE_SUFFIX, name, value)
    return rows, models, reports


# --- configuration ---------------------------------------------------------------

_TRAIN_KEYS = {f.name for f in fields(TrainConfig)}
EXPERIMENT_DEFAULTS = {
    "experiment": "experiment",
    "strategies": "uniform,topic,dynamic",
    "K": "3",
    "pairs": "",
    "finetune_pairs": "",
    "eval_pairs": "",
    "out": "runs/experiment",
    "finetune": "true",
    "topic_iterations": "20",
    "topic_alpha": "1.0",
    "source_mode": "char",
    "target_mode": "word",
}
PATH_KEYS = ("pairs", "finetune_pairs", "eval_pairs")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    values: tuple  # sorted (key, value) string pairs

    def __getitem__(self, key):
        return dict(self.values)[key]

    def as_dict(self) -> dict:
        return dict(self.values)

    @property
    def train(self) -> TrainConfig:
        d = {k: v for k, v in self.values if k in _TRAIN_KEYS}
        return TrainConfig.from_dict(d)

    @property
    def strategies(self) -> list[str]:
        return [s.strip() for s in self["strategies"].split(",") if s.strip()]

    def text(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in self.values)

    def digest(self) -> str:
        return hashlib.sha256(self.text().encode("utf-8")).hexdigest()


def parse_config_text(text: str, origin: str = "<config>") -> dict:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{n}: expected key=value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k] = v
    return out


def make_config(values: dict, check_paths: bool = True) -> ExperimentConfig:
    """Validate settings: unknown keys and missing input files are reported by key."""
    defaults = {k: str(v) for k, v in vars(TrainConfig()).items()}
    merged = {**defaults, **EXPERIMENT_DEFAULTS}
    for k, v in values.items():
        if k not in merged:
            raise ConfigError(f"unknown config key: {k}")
        merged[k] = str(v)
    try:
        TrainConfig.from_dict({k: v for k, v in merged.items() if k in _TRAIN_KEYS})
        int(merged["K"])
        int(merged["topic_iterations"])
        float(merged["topic_alpha"])
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None
    if merged["finetune"] not in ("true", "false"):
        raise ConfigError("finetune must be true or false")
    if check_paths:
        for k in PATH_KEYS:
            if k == "finetune_pairs" and merged["finetune"] == "false" and not merged[k]:
                continue
            if not merged[k] or not Path(merged[k]).is_file():
                raise ConfigError(f"config key {k}: file not found: {merged[k]!r}")
    return ExperimentConfig(tuple(sorted(merged.items())))


def load_config(path, overrides: dict | None = None, check_paths: bool = True) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text(encoding="utf-8"), str(path))
    values.update(overrides or {})
    return make_config(values, check_paths)


def run_experiment(config: ExperimentConfig) -> Path:
    """Run the configured strategies; writes metrics.csv, manifest.json and checkpoints under ``out``."""
    c = config.as_dict()
    train = config.train
    out = Path(c["out"])
    out.mkdir(parents=True, exist_ok=True)
    modes = (c["source_mode"], c["target_mode"])
    pre = read_pairs(c["pairs"], *modes)
    ft = read_pairs(c["finetune_pairs"], *modes) if c["finetune"] == "true" else None
    ev = read_pairs(c["eval_pairs"], *modes)
    rows, _, _ = run_pipeline(pre, ft, ev, config.strategies, int(c["K"]), train, c["experiment"], out,
                              c["finetune"] == "true", int(c["topic_iterations"]), float(c["topic_alpha"]))
    write_metrics(rows, out / "metrics.csv")
    manifest = {"config_sha256": config.digest(), "seed": train.seed, "version": __version__,
                "config": config.as_dict()}
    (out / "manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return out / "metrics.csv"
