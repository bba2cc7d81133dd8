"""Metrics, component reports and experiment orchestration."""

from .benchmark import BENCHMARK_CONFIG, Benchmark, cipher_benchmark
from .experiment import (
    METRICS_HEADER,
    ComponentRow,
    ConfigError,
    ExperimentConfig,
    MetricsRow,
    evaluate,
    figure2_stats,
    format_report,
    load_config,
    make_config,
    pretrain,
    read_metrics,
    report_components,
    run_experiment,
    run_pipeline,
    split_topic,
    split_uniform,
    translate_all,
    write_metrics,
)
from .metrics import corpus_bleu, pearson, purity, token_accuracy
