"""``mixctl``: command-line entry point for the whole pipeline."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from ..align import (AlignParams, TTable, align_document_pair, calibrate_params, document_length_ratio,
                     filter_pairs, train_model1)
from ..assign import load_scores, objective, solve_balanced_exact, solve_balanced_hillclimb
from ..corpus import (
    Corpus,
    bpe_tokenize,
    generate_synthetic_corpus,
    generate_synthetic_documents,
    learn_bpe,
    make_cipher_spec,
    read_documents,
    read_pairs,
    write_documents,
    write_gold,
    write_pairs,
)
from ..corpus.text import detokenize, tokenize
from ..mixture.model import MANIFEST
from ..mixture import TrainConfig, finetune, load_model, save_model, split_pretrain
from ..mixture.train import make_vocabs
from .benchmark import cipher_benchmark
from .experiment import (
    ConfigError,
    evaluate,
    format_report,
    load_config,
    make_config,
    pretrain,
    report_components,
    run_experiment,
    split_topic,
)
from .metrics import corpus_bleu, token_accuracy


def _modes(p):
    p.add_argument("--source-mode", default="char", choices=("char", "word"))
    p.add_argument("--target-mode", default="word", choices=("char", "word"))


def cmd_make_synthetic(a):
    out = Path(a.out)
    out.mkdir(parents=True, exist_ok=True)
    if a.benchmark:
        b = cipher_benchmark(a.seed, a.pairs, a.finetune_pairs, a.eval_pairs, a.domains, a.vocab, a.shared,
                             shared_mapping=a.shared_mapping, drift=a.drift)
        write_pairs(b.pretrain, out / "pretrain.tsv")
        write_pairs(b.finetune, out / "finetune.tsv")
        write_pairs(b.eval, out / "eval.tsv")
        print(f"wrote {out}/pretrain.tsv, finetune.tsv, eval.tsv")
        return 0
    spec = make_cipher_spec(a.domains, a.vocab, a.shared, reorder=a.reorder, zipf=a.zipf, seed=a.seed,
                            shared_mapping=a.shared_mapping, num_pairs=a.pairs, num_documents=a.documents,
                            identical_rate=a.identical_rate, wrong_language_rate=a.wrong_language_rate,
                            misalignment_rate=a.misalignment_rate)
    if a.documents:
        docs, gold = generate_synthetic_documents(spec, a.seed)
        write_documents(docs, out)
        write_gold(gold, out / "gold.tsv")
        print(f"wrote {len(docs)} documents under {out}")
    else:
        write_pairs(generate_synthetic_corpus(spec, a.seed), out / "pairs.tsv")
        print(f"wrote {out / 'pairs.tsv'}")
    return 0


def cmd_train_ttable(a):
    table = train_model1(read_pairs(a.pairs, a.source_mode, a.target_mode), a.iterations)
    table.save(a.out)
    for k, ll in enumerate(table.log_likelihoods):
        print(f"iteration {k}\tlog-likelihood {ll:.6f}")
    return 0


def cmd_align(a):
    if not (a.ttable or a.seed_pairs):
        raise ValueError("align needs --ttable or --seed-pairs")
    seed = read_pairs(a.seed_pairs, a.source_mode, a.target_mode) if a.seed_pairs else None
    table = TTable.load(a.ttable) if a.ttable else train_model1(seed, a.iterations)
    calib = read_pairs(a.calibration_pairs, a.source_mode, a.target_mode) if a.calibration_pairs else seed
    if calib is not None:
        params = calibrate_params(calib, table, gamma=a.gamma, source_mode=a.source_mode, target_mode=a.target_mode)
    else:
        params = AlignParams(gamma=a.gamma, source_mode=a.source_mode, target_mode=a.target_mode)
    if a.docs:
        src_dir, tgt_dir = Path(a.docs) / "src", Path(a.docs) / "tgt"
    elif a.src and a.tgt:
        src_dir, tgt_dir = Path(a.src), Path(a.tgt)
    else:
        raise ValueError("align needs --docs or both --src and --tgt")
    docs = read_documents(src_dir, tgt_dir)
    if calib is None:
        params = replace(params, length_ratio=document_length_ratio(docs, a.source_mode, a.target_mode))
    if a.tau is not None:
        params = replace(params, tau=a.tau)
    pairs = [p for d in docs for p in align_document_pair(d, table, params)]
    kept = pairs if a.no_filter else list(filter_pairs(pairs, params))
    write_pairs(Corpus(tuple(kept)), a.out, a.source_mode, a.target_mode)
    if a.origins:
        with open(a.origins, "w", encoding="utf-8") as fh:
            for p in kept:
                doc, i, j = p.origin
                fh.write(f"{doc}\t{i}\t{j}\t{float(p.score)!r}\n")
    print(f"aligned {len(pairs)} pairs, kept {len(kept)} (tau={params.tau:.4f})")
    return 0


def cmd_learn_bpe(a):
    lines = Path(a.input).read_text(encoding="utf-8").splitlines()
    words = [w for line in lines for w in line.split()]
    model = learn_bpe(words, a.merges)
    model.save(a.out)
    print(f"learned {len(model.merges)} merges")
    if a.apply:
        with open(a.apply, "w", encoding="utf-8") as fh:
            for line in lines:
                fh.write(" ".join(bpe_tokenize(model, line)) + "\n")
    return 0


def cmd_topic_split(a):
    pairs = read_pairs(a.pairs, a.source_mode, a.target_mode)
    subsets, labels, tm = split_topic(pairs, a.K, a.seed, a.iterations, a.alpha)
    for z, s in enumerate(subsets):
        write_pairs(s, f"{a.out}.{z}.tsv", a.source_mode, a.target_mode)
    if a.model:
        tm.save(a.model)
    print("subset sizes: " + " ".join(str(len(s)) for s in subsets))
    return 0


def _train_config(a, base: TrainConfig | None = None) -> TrainConfig:
    base = base or TrainConfig()
    changes = {k: getattr(a, k) for k in ("B", "epochs", "seed", "interval", "delta", "memory", "lam",
                                          "finetune_weight") if getattr(a, k, None) is not None}
    return replace(base, **changes)


def _load(path):
    """Load a model directory, or the model inside a pretrain output directory."""
    path = Path(path)
    if not (path / MANIFEST).exists() and (path / "model" / MANIFEST).exists():
        path = path / "model"
    return load_model(path)


def cmd_pretrain(a):
    cfg = _train_config(a)
    pairs = read_pairs(a.pairs, a.source_mode, a.target_mode)
    out = Path(a.out)
    if a.subsets:
        K = 1 if a.strategy == "single" else a.K
        subsets = [read_pairs(f"{a.subsets}.{z}.tsv", a.source_mode, a.target_mode) for z in range(K)]
        model = split_pretrain(subsets, cfg, a.strategy, out / "checkpoints", make_vocabs(pairs))
    else:
        model, _ = pretrain(a.strategy, pairs, 1 if a.strategy == "single" else a.K, cfg, out / "checkpoints")
    save_model(model, out / "model")
    print(f"saved {out / 'model'} ({len(model.history.checkpoints)} checkpoints)")
    return 0


def cmd_finetune(a):
    model = _load(a.model)
    cfg = _train_config(a, model.config)
    tuned = finetune(model, read_pairs(a.pairs, a.source_mode, a.target_mode), cfg, a.iters)
    out = a.out or str(Path(a.model).with_name(Path(a.model).name + "-ft"))
    save_model(tuned, out)
    print(f"saved {out}")
    return 0


def cmd_decode(a):
    model = _load(a.model)
    src_mode, tgt_mode = a.source_mode, a.target_mode
    out = open(a.output, "w", encoding="utf-8") if a.output else sys.stdout
    try:
        for line in Path(a.input).read_text(encoding="utf-8").splitlines():
            source = tokenize(line.split("\t")[0], src_mode)
            if not source:
                out.write("\n")
                continue
            hyp = model.translate(source, beam=a.beam, diversity=a.diverse, max_len=a.max_len or len(source))
            out.write(detokenize(hyp, tgt_mode) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_evaluate(a):
    if a.model:
        model = _load(a.model)
        m = evaluate(model, read_pairs(a.pairs, a.source_mode, a.target_mode), beam=a.beam)
    else:
        hyps = [tokenize(l, a.target_mode) for l in Path(a.hyp).read_text(encoding="utf-8").splitlines()]
        refs = [tokenize(l, a.target_mode) for l in Path(a.ref).read_text(encoding="utf-8").splitlines()]
        m = {"accuracy": token_accuracy(hyps, refs), "bleu": corpus_bleu(hyps, refs)}
    for k, v in m.items():
        print(f"{k}\t{v:.6f}")
    return 0


def cmd_report(a):
    model = _load(a.model)
    print(format_report(report_components(model, read_pairs(a.pairs, a.source_mode, a.target_mode), a.beam)))
    return 0


def _overrides(extra) -> dict:
    out = {}
    k = 0
    while k < len(extra):
        tok = extra[k]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:].replace("-", "_")
        if "=" in key:
            key, value = key.split("=", 1)
            k += 1
        elif k + 1 < len(extra):
            value = extra[k + 1]
            k += 2
        else:
            raise ConfigError(f"missing value for {tok}")
        out[key] = value
    return out


def cmd_run(a, extra):
    overrides = _overrides(extra)
    if a.config:
        cfg = load_config(a.config, overrides, check_paths=not a.dump_config)
    else:
        cfg = make_config(overrides, check_paths=not a.dump_config)
    if a.dump_config:
        sys.stdout.write(cfg.text())
        return 0
    path = run_experiment(cfg)
    print(f"wrote {path}")
    return 0


def cmd_assign(a):
    scores = load_scores(a.scores)
    sol = solve_balanced_exact(scores, a.B) if a.exact else solve_balanced_hillclimb(scores, a.B, a.seed, a.restarts)
    print(" ".join(str(int(z)) for z in sol))
    print(f"objective {objective(scores, sol):.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mixctl", description="Mixture translation toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-synthetic", help="generate cipher corpora or documents")
    p.add_argument("--out", required=True)
    p.add_argument("--domains", type=int, default=3)
    p.add_argument("--vocab", type=int, default=40)
    p.add_argument("--shared", type=float, default=0.0)
    p.add_argument("--shared-mapping", action="store_true")
    p.add_argument("--reorder", action="store_true")
    p.add_argument("--zipf", type=float, default=0.0)
    p.add_argument("--pairs", type=int, default=1000)
    p.add_argument("--documents", type=int, default=0, help="write N documents instead of pairs")
    p.add_argument("--identical-rate", type=float, default=0.0)
    p.add_argument("--wrong-language-rate", type=float, default=0.0)
    p.add_argument("--misalignment-rate", type=float, default=0.0)
    p.add_argument("--benchmark", action="store_true", help="write the pretrain/finetune/eval benchmark")
    p.add_argument("--finetune-pairs", type=int, default=3000)
    p.add_argument("--eval-pairs", type=int, default=1000)
    p.add_argument("--drift", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_make_synthetic)

    p = sub.add_parser("train-ttable", help="fit a lexical translation table")
    p.add_argument("--pairs", required=True)
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--out", required=True)
    _modes(p)
    p.set_defaults(func=cmd_train_ttable)

    p = sub.add_parser("align", help="sentence-align a document collection")
    p.add_argument("--docs", help="directory with src/ and tgt/")
    p.add_argument("--src", help="source document directory")
    p.add_argument("--tgt", help="target document directory")
    p.add_argument("--seed-pairs", help="known-aligned pairs for the t-table and length statistics")
    p.add_argument("--calibration-pairs")
    p.add_argument("--ttable")
    p.add_argument("--iterations", type=int, default=5)
    p.add_argument("--gamma", type=float, default=0.5)
    p.add_argument("--tau", type=float)
    p.add_argument("--no-filter", action="store_true")
    p.add_argument("--origins", help="write doc/index/score per kept pair")
    p.add_argument("--out", required=True)
    _modes(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("learn-bpe", help="learn BPE merges from whitespace-tokenized text")
    p.add_argument("--input", required=True)
    p.add_argument("--merges", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--apply", help="also write the segmented input here")
    p.set_defaults(func=cmd_learn_bpe)

    p = sub.add_parser("topic-split", help="split pairs by bilingual topic")
    p.add_argument("--pairs", required=True)
    p.add_argument("--topics", "--K", dest="K", type=int, required=True)
    p.add_argument("--iters", "--iterations", dest="iterations", type=int, default=20)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-prefix", "--out", dest="out", required=True, help="writes PREFIX.<z>.tsv")
    p.add_argument("--model", help="save the topic model here")
    _modes(p)
    p.set_defaults(func=cmd_topic_split)

    p = sub.add_parser("pretrain", help="pretrain a mixture")
    p.add_argument("--strategy", required=True, choices=("single", "uniform", "topic", "dynamic"))
    p.add_argument("--pairs", required=True)
    p.add_argument("--subsets", help="prefix of precomputed subsets PREFIX.<z>.tsv")
    p.add_argument("--K", type=int, default=3)
    p.add_argument("--B", type=int)
    p.add_argument("--epochs", type=float)
    p.add_argument("--interval", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--memory", type=float)
    p.add_argument("--lam", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    _modes(p)
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("finetune", help="fine-tune a saved mixture")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--iters", type=int)
    p.add_argument("--finetune-weight", type=float)
    p.add_argument("--out")
    _modes(p)
    p.set_defaults(func=cmd_finetune)

    p = sub.add_parser("decode", help="translate one source sentence per line")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--beam", type=int, default=4)
    p.add_argument("--diverse", type=float, default=0.0)
    p.add_argument("--max-len", type=int)
    p.add_argument("--output")
    _modes(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("evaluate", help="score hypotheses, or a model on a pairs file")
    p.add_argument("--hyp")
    p.add_argument("--ref")
    p.add_argument("--model")
    p.add_argument("--pairs")
    p.add_argument("--beam", type=int)
    _modes(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="per-component accuracy and average gate weight")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    p.add_argument("--beam", type=int)
    _modes(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("run", help="run an experiment from a key=value config")
    p.add_argument("--config")
    p.add_argument("--dump-config", action="store_true")
    p.set_defaults(func=cmd_run, takes_extra=True)

    p = sub.add_parser("assign", help="solve a balanced assignment from a CSV score matrix")
    p.add_argument("--scores", required=True)
    p.add_argument("--B", type=int, required=True)
    p.add_argument("--exact", action="store_true")
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_assign)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args, extra = ap.parse_known_args(argv)
    try:
        if getattr(args, "takes_extra", False):
            return args.func(args, extra)
        if extra:
            ap.error(f"unrecognized arguments: {' '.join(extra)}")
        if args.command == "evaluate" and not (args.model and args.pairs) and not (args.hyp and args.ref):
            ap.error("evaluate needs --hyp/--ref or --model/--pairs")
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"mixctl: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
