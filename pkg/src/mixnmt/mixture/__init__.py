"""Mixture of translation components: gate, training strategies, ensemble decoding."""

from .component import Component, Encoded, component_score, component_update, encode_pairs
from .decode import decode, decode_ids, ensemble_step
from .gate import GateModel, featurize, gate_gradient, gate_loss, gate_predict, gate_train, hard_targets
from .model import STRATEGIES, MixtureModel, TrainConfig, load_model, new_components, save_model
from .train import (
    TrainHistory,
    component_finetune,
    dynamic_pretrain,
    finetune,
    make_vocabs,
    responsibilities,
    soft_em_finetune,
    split_pretrain,
)
