from mixtag.nn.params import ParamStore
from mixtag.nn.layers import (
    Conv1D,
    Dense,
    Dropout,
    Flatten,
    GRU,
    LSTM,
    LayerSpec,
    Network,
    build_network,
)
from mixtag.nn.losses import (
    bce_loss,
    cce_loss,
    contrastive_loss,
    embedding_distance,
)
from mixtag.nn.optim import l2_penalty, optimizer_step
from mixtag.nn.gradcheck import grad_check

__all__ = [
    "ParamStore",
    "Dense",
    "Conv1D",
    "LSTM",
    "GRU",
    "Dropout",
    "Flatten",
    "LayerSpec",
    "Network",
    "build_network",
    "bce_loss",
    "cce_loss",
    "contrastive_loss",
    "embedding_distance",
    "optimizer_step",
    "l2_penalty",
    "grad_check",
]
