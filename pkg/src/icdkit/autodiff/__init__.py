from .tensor import Parameter, Tensor, constant, result
from .layers import (
    GruWeights,
    RunningStats,
    batch_norm,
    bce_loss,
    conv1d,
    dense,
    embedding_lookup,
    global_average_pool,
    gru,
    label_attention,
    per_label_dense,
    sigmoid,
    sigmoid_bce_with_logits,
    tanh,
)
from .optim import AdamState, adam_step
from .gradcheck import GradCheckReport, grad_check
from .checkpoint import load_container, save_container
from .init import glorot_uniform, orthogonal

__all__ = [
    "AdamState",
    "GradCheckReport",
    "GruWeights",
    "Parameter",
    "RunningStats",
    "Tensor",
    "adam_step",
    "batch_norm",
    "bce_loss",
    "constant",
    "conv1d",
    "dense",
    "embedding_lookup",
    "glorot_uniform",
    "global_average_pool",
    "grad_check",
    "gru",
    "label_attention",
    "load_container",
    "orthogonal",
    "per_label_dense",
    "result",
    "save_container",
    "sigmoid",
    "sigmoid_bce_with_logits",
    "tanh",
]
