"""Minimal reverse-mode autodiff engine and neural building blocks."""

from .gradcheck import GradCheckReport, grad_check
from .layers import TransformerLayerParams, linear, transformer_encoder_layer
from .optim import AdamState, adam_step
from .params import ParamStore, uniform_init
from .tensor import (
    Tensor,
    add,
    as_tensor,
    concat,
    default_dtype,
    div,
    exp,
    is_grad_enabled,
    layer_norm,
    leaky_relu,
    log,
    matmul,
    mean_,
    mul,
    no_grad,
    relu,
    reshape,
    segment_max_detached,
    segment_softmax,
    segment_sum,
    set_check_finite,
    set_default_dtype,
    sigmoid,
    softmax,
    sqrt,
    sub,
    sum_,
    swapaxes,
    take,
    tanh,
)

__all__ = [
    "AdamState",
    "GradCheckReport",
    "ParamStore",
    "Tensor",
    "TransformerLayerParams",
    "adam_step",
    "add",
    "as_tensor",
    "concat",
    "default_dtype",
    "div",
    "exp",
    "grad_check",
    "is_grad_enabled",
    "layer_norm",
    "leaky_relu",
    "linear",
    "log",
    "matmul",
    "mean_",
    "mul",
    "no_grad",
    "relu",
    "reshape",
    "segment_max_detached",
    "segment_softmax",
    "segment_sum",
    "set_check_finite",
    "set_default_dtype",
    "sigmoid",
    "softmax",
    "sqrt",
    "sub",
    "sum_",
    "swapaxes",
    "take",
    "tanh",
    "transformer_encoder_layer",
    "uniform_init",
]
