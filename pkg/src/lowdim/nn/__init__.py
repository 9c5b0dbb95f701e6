"""Minimal differentiable-computation core."""
from .grad import backward, check_finite, max_relative_error
from .init import INIT_SCHEMES, fan_in_uniform, glorot_uniform, init_params
from .layers import Conv2d, Dense, Mlp, Module, ResidualMlp, dense_forward, reinitialise
from .losses import binary_cross_entropy_with_logits, cross_entropy, mse
from .optim import RAdam, radam_step, rho_inf
from .rng import make_rng
from .serialize import load_params, read_header, save_params
from .tensor import Tensor, concat, log_softmax, parameter, softmax, stack, where

__all__ = [
    "INIT_SCHEMES", "Conv2d", "Dense", "Mlp", "Module", "RAdam", "ResidualMlp", "Tensor",
    "backward", "binary_cross_entropy_with_logits", "check_finite", "concat",
    "cross_entropy", "dense_forward", "fan_in_uniform", "glorot_uniform", "init_params", "load_params", "log_softmax",
    "make_rng", "max_relative_error", "mse", "parameter", "radam_step", "read_header", "reinitialise", "rho_inf",
    "save_params",
    "softmax", "stack", "where",
]
