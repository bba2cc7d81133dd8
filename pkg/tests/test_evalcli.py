import json
import math
from collections import Counter
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mixnmt.corpus import write_pairs
from mixnmt.evalcli import (
    METRICS_HEADER,
    ConfigError,
    MetricsRow,
    cipher_benchmark,
    corpus_bleu,
    figure2_stats,
    load_config,
    make_config,
    pearson,
    purity,
    read_metrics,
    report_components,
    run_experiment,
    token_accuracy,
    write_metrics,
)
from mixnmt.evalcli.cli import main
from mixnmt.evalcli.metrics import ngram_stats
from mixnmt.mixture import TrainConfig, dynamic_pretrain, split_pretrain

# --- BLEU --------------------------------------------------------------------------------


def oracle_bleu(hyps, refs):
    """Corpus BLEU from exact rational precisions."""
    num, den, h, r = [0] * 4, [0] * 4, 0, 0
    for hyp, ref in zip(hyps, refs):
        h, r = h + len(hyp), r + len(ref)
        for n in range(1, 5):
            hc = Counter(tuple(hyp[i : i + n]) for i in range(len(hyp) - n + 1))
            rc = Counter(tuple(ref[i : i + n]) for i in range(len(ref) - n + 1))
            num[n - 1] += sum(min(c, rc[g]) for g, c in hc.items())
            den[n - 1] += max(0, len(hyp) - n + 1)
    if h == 0:
        return 0.0
    ps = [Fraction(a, b) if b else Fraction(0) for a, b in zip(num, den)]
    bp = 1.0 if h >= r else math.exp(1 - r / h)
    return 100 * bp * math.exp(sum(math.log(max(float(p), 1e-9)) for p in ps) / 4)


# (hypotheses, references, frozen value, unigram precision)
BLEU_CASES = {
    "clipped": ([["the"] * 4], [["the", "cat"]], 1.2574334296829348e-05, Fraction(1, 4)),
    "clipped_twice": ([["the"] * 4], [["the", "cat", "the", "dog"]], 1.4953487812212207e-05, Fraction(1, 2)),
    "brevity": ([["the", "cat", "sat", "on"]], [["the", "cat", "sat", "on", "the", "mat"]], 60.653065971263345,
                Fraction(1)),
    "two_sentences": ([list("abcde"), list("xyzw")], [list("abcdf"), list("xyzw")], 79.84079523098931,
                      Fraction(8, 9)),
    "repeated_bigram": ([list("ababc")], [list("abc")], 0.3162277660168379, Fraction(3, 5)),
}


@pytest.mark.parametrize("name", sorted(BLEU_CASES))
def test_bleu_frozen_cases(name):
    hyps, refs, value, p1 = BLEU_CASES[name]
    assert oracle_bleu(hyps, refs) == pytest.approx(value, abs=1e-12)
    assert corpus_bleu(hyps, refs) == pytest.approx(value, abs=1e-6)
    matches, totals, _, _ = ngram_stats(hyps, refs)
    assert Fraction(matches[0], totals[0]) == p1


def test_bleu_edge_cases():
    refs = [["a", "b", "c", "d", "e"], ["x", "y"]]
    assert corpus_bleu(refs, refs) == pytest.approx(100.0, abs=1e-9)
    assert corpus_bleu([[]], [["a", "b"]]) == 0.0
    with pytest.raises(ValueError):
        corpus_bleu([["a"]], [])


sent = st.lists(st.sampled_from("abcd"), min_size=0, max_size=7)


@settings(max_examples=80)
@given(st.lists(st.tuples(sent, sent.filter(bool)), min_size=1, max_size=5), st.integers(0, 4))
def test_bleu_bounds_and_reference_monotonicity(pairs, k):
    hyps, refs = [h for h, _ in pairs], [r for _, r in pairs]
    b = corpus_bleu(hyps, refs)
    assert 0.0 <= b <= 100.0 + 1e-9
    assert b == pytest.approx(oracle_bleu(hyps, refs), abs=1e-9)
    k %= len(pairs)
    if len(hyps[k]) <= len(refs[k]):
        fixed = hyps[:k] + [refs[k]] + hyps[k + 1 :]
        assert corpus_bleu(fixed, refs) >= b - 1e-9


def test_reference_replacement_can_lower_bleu_through_brevity():
    # Swapping an over-long hypothesis for its shorter reference shrinks the
    # corpus length and the brevity penalty outweighs the precision gain.
    refs = [["a"]] * 5
    hyps = [[]] * 4 + [["a", "a"]]
    fixed = [[]] * 4 + [["a"]]
    assert corpus_bleu(fixed, refs) < corpus_bleu(hyps, refs)
    assert corpus_bleu(fixed, refs) == pytest.approx(oracle_bleu(fixed, refs), abs=1e-15)


# --- other metrics ---------------------------------------------------------------------


def test_token_accuracy_examples():
    assert token_accuracy([["x", "y"]], [["x", "y"]]) == 1.0
    assert token_accuracy([["p", "q"]], [["x", "y"]]) == 0.0
    assert token_accuracy([["x", "q"]], [["x", "y"]]) == 0.5
    assert token_accuracy([["x", "y", "z"], []], [["x", "y"], ["w"]]) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        token_accuracy([["x"]], [["x"], ["y"]])


def test_purity_examples():
    assert purity([2, 2, 0, 1], ["a", "a", "b", "c"]) == 1.0
    n = 7
    assert purity([0] * (2 * n), [0] * n + [1] * n) == 0.5
    assert purity(range(5), [0, 0, 1, 1, 0]) == 1.0
    with pytest.raises(ValueError):
        purity([], [])


@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 2)), min_size=1, max_size=30), st.permutations(range(4)))
def test_purity_is_label_invariant(pairs, perm):
    a, g = [x for x, _ in pairs], [y for _, y in pairs]
    assert purity([perm[x] for x in a], g) == purity(a, g)


def test_pearson():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
    assert pearson([1, 1, 1], [1, 2, 3]) == 0.0
    x, y = np.random.default_rng(0).normal(size=(2, 20))
    assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)


# --- component reports --------------------------------------------------------------------


@pytest.fixture(scope="module")
def small_bench():
    return cipher_benchmark(seed=5, num_pairs=600, num_finetune=100, num_eval=60)


def test_report_components_shape_and_uniform_weights(small_bench):
    b = small_bench
    pairs = list(b.pretrain)
    m = split_pretrain([pairs[:300], pairs[300:]], TrainConfig(B=16), "uniform")
    rows = report_components(m, b.eval)
    assert [r.component for r in rows] == [0, 1]
    assert all(r.weight == pytest.approx(0.5, abs=1e-12) for r in rows)
    d = dynamic_pretrain(pairs, 3, TrainConfig(B=16, seed=5))
    rows = report_components(d, b.eval)
    assert len(rows) == 3
    assert sum(r.weight for r in rows) == pytest.approx(1.0, abs=1e-9)
    assert all(0.0 <= r.accuracy <= 1.0 for r in rows)
    stats = figure2_stats(rows)
    assert stats["accuracy_variance"] >= 0.0 and -1.0 <= stats["weight_correlation"] <= 1.0


# --- metrics CSV ----------------------------------------------------------------------------


def test_metrics_csv(tmp_path):
    rows = [MetricsRow("e", "uniform", 0, 1.0, "bleu", 12.5), MetricsRow("e", "uniform+ft", 0, 1.0, "bleu", 13.0)]
    write_metrics(rows, tmp_path / "m.csv")
    text = (tmp_path / "m.csv").read_text()
    assert text.splitlines()[0] == "experiment,strategy,seed,epoch,metric,value"
    assert ",".join(METRICS_HEADER) == text.splitlines()[0]
    assert read_metrics(tmp_path / "m.csv") == rows
    with pytest.raises(ValueError):
        write_metrics(rows + rows[:1], tmp_path / "dup.csv")
    with pytest.raises(ValueError):
        MetricsRow("e", "s", 0, 1.0, "bleu", float("nan"))


# --- configuration --------------------------------------------------------------------------


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="unknown config key: colour"):
        make_config({"colour": "red"}, check_paths=False)
    with pytest.raises(ConfigError, match="config key pairs"):
        make_config({"pairs": str(tmp_path / "missing.tsv")})
    with pytest.raises(ConfigError, match="bad config value"):
        make_config({"B": "many"}, check_paths=False)
    (tmp_path / "c.cfg").write_text("# comment\nB = 4\nnot a setting\n")
    with pytest.raises(ConfigError, match="c.cfg:3"):
        load_config(tmp_path / "c.cfg", check_paths=False)


def test_config_overrides_and_digest(tmp_path):
    (tmp_path / "c.cfg").write_text("B=4\nepochs=0.5 # half\n")
    cfg = load_config(tmp_path / "c.cfg", {"seed": "3"}, check_paths=False)
    assert cfg.train == TrainConfig(B=4, epochs=0.5, seed=3)
    assert cfg.digest() == load_config(tmp_path / "c.cfg", {"seed": "3"}, check_paths=False).digest()
    assert cfg.digest() != load_config(tmp_path / "c.cfg", {"seed": "4"}, check_paths=False).digest()


# --- experiments ------------------------------------------------------------------------------


def write_bench(bench, root):
    root.mkdir(parents=True, exist_ok=True)
    for name in ("pretrain", "finetune", "eval"):
        write_pairs(getattr(bench, name), root / f"{name}.tsv")
    return {"pairs": str(root / "pretrain.tsv"), "finetune_pairs": str(root / "finetune.tsv"),
            "eval_pairs": str(root / "eval.tsv")}


@pytest.fixture(scope="module")
def experiment_runs(small_bench, tmp_path_factory):
    root = tmp_path_factory.mktemp("exp")
    paths = write_bench(small_bench, root / "data")
    outs = []
    for k in (0, 1):
        values = dict(paths, B="16", epochs="1", interval="0.1", seed="5", topic_iterations="5",
                      out=str(root / f"run{k}"))
        outs.append(run_experiment(make_config(values)).parent)
    return outs


def test_experiment_is_reproducible(experiment_runs):
    a, b = experiment_runs
    assert (a / "metrics.csv").read_bytes() == (b / "metrics.csv").read_bytes()
    files = sorted(p.relative_to(a) for p in a.rglob("*") if p.is_file() and p.name != "manifest.json")
    assert files == sorted(p.relative_to(b) for p in b.rglob("*") if p.is_file() and p.name != "manifest.json")
    assert len(files) > 100
    assert all((a / f).read_bytes() == (b / f).read_bytes() for f in files)
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["seed"] == 5 and len(manifest["config_sha256"]) == 64 and manifest["version"]


def test_experiment_shape(experiment_runs):
    out = experiment_runs[0]
    for strategy in ("uniform", "topic", "dynamic"):
        ckpts = sorted(p.name for p in (out / strategy / "checkpoints").iterdir())
        assert ckpts == [f"ckpt-{k:04d}" for k in range(1, 11)]
        assert (out / strategy / "pretrain" / "MODEL").is_file()
        assert (out / strategy / "finetune" / "MODEL").is_file()
    rows = read_metrics(out / "metrics.csv")
    for metric in ("accuracy", "bleu"):
        strategies = [r.strategy for r in rows if r.metric == metric]
        assert sorted(strategies) == sorted(["uniform", "topic", "dynamic", "uniform+ft", "topic+ft", "dynamic+ft"])
    assert all(np.isfinite(r.value) for r in rows)


# --- command line ----------------------------------------------------------------------------


def test_cli_pipeline(tmp_path, capsys, small_bench):
    paths = write_bench(replace(small_bench), tmp_path / "data")
    assert main(["assign", "--scores", str(_scores_file(tmp_path)), "--B", "2", "--exact"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "0 0 1 1"

    model = tmp_path / "m"
    assert main(["pretrain", "--strategy", "dynamic", "--pairs", paths["pairs"], "--K", "2", "--B", "16",
                 "--epochs", "1", "--seed", "1", "--out", str(model)]) == 0
    assert len(list((model / "checkpoints").iterdir())) == 10
    assert main(["finetune", "--model", str(model / "model"), "--pairs", paths["finetune_pairs"], "--iters", "1",
                 "--out", str(tmp_path / "ft")]) == 0
    assert main(["decode", "--model", str(tmp_path / "ft"), "--input", paths["eval_pairs"], "--beam", "2",
                 "--diverse", "0.5", "--output", str(tmp_path / "hyp.txt")]) == 0
    hyps = (tmp_path / "hyp.txt").read_text().splitlines()
    assert len(hyps) == len(small_bench.eval)
    refs = tmp_path / "ref.txt"
    refs.write_text("".join(" ".join(p.target) + "\n" for p in small_bench.eval))
    capsys.readouterr()
    assert main(["evaluate", "--hyp", str(tmp_path / "hyp.txt"), "--ref", str(refs)]) == 0
    assert capsys.readouterr().out.startswith("accuracy\t")
    assert main(["report", "--model", str(model / "model"), "--pairs", paths["eval_pairs"]]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3
    # the pretrain output directory itself is accepted wherever a model is
    assert main(["report", "--model", str(model), "--pairs", paths["eval_pairs"]]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 3


def _scores_file(tmp_path):
    path = tmp_path / "scores.csv"
    path.write_text("-1,-5\n-1.2,-4\n-6,-0.5\n-3,-0.7\n")
    return path


def test_cli_data_tools(tmp_path, capsys):
    docs = tmp_path / "docs"
    assert main(["make-synthetic", "--out", str(docs), "--domains", "1", "--vocab", "30", "--documents", "6",
                 "--seed", "2"]) == 0
    assert main(["make-synthetic", "--out", str(tmp_path / "seed"), "--domains", "1", "--vocab", "30",
                 "--pairs", "800", "--seed", "2"]) == 0
    seed_pairs = tmp_path / "seed" / "pairs.tsv"
    assert main(["train-ttable", "--pairs", str(seed_pairs), "--iterations", "5", "--out", str(tmp_path / "t")]) == 0
    assert main(["align", "--src", str(docs / "src"), "--tgt", str(docs / "tgt"), "--ttable", str(tmp_path / "t"),
                 "--seed-pairs", str(seed_pairs), "--tau", "-100", "--gamma", "0.5",
                 "--out", str(tmp_path / "aligned.tsv")]) == 0
    gold = (docs / "gold.tsv").read_text().splitlines()
    assert len((tmp_path / "aligned.tsv").read_text().splitlines()) == len(gold)

    assert main(["topic-split", "--pairs", str(seed_pairs), "--topics", "2", "--iters", "3", "--seed", "0",
                 "--out-prefix", str(tmp_path / "split")]) == 0
    sizes = [len((tmp_path / f"split.{z}.tsv").read_text().splitlines()) for z in (0, 1)]
    assert sum(sizes) == 800

    (tmp_path / "words.txt").write_text("low low lower\n")
    assert main(["learn-bpe", "--input", str(tmp_path / "words.txt"), "--merges", "2",
                 "--out", str(tmp_path / "bpe")]) == 0
    assert (tmp_path / "bpe").read_text() == "BPE v1 2\nl o\nlo w\n"


def test_cli_run_and_errors(tmp_path, capsys):
    assert main(["run", "--dump-config", "--B", "8"]) == 0
    out = capsys.readouterr().out
    assert "B=8\n" in out and "strategies=uniform,topic,dynamic\n" in out
    assert main(["run", "--colour", "red"]) == 2
    assert "unknown config key: colour" in capsys.readouterr().err
    assert main(["run", "--pairs", str(tmp_path / "nope.tsv")]) == 2
    assert "config key pairs" in capsys.readouterr().err
