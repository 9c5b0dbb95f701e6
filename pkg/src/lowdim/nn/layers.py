from __future__ import annotations

from typing import Iterator, Sequence

import numpy as np

from .. import kernels
from ..errors import DimensionError, ValidationError
from .init import INIT_SCHEMES, glorot_uniform
from .tensor import Tensor, as_tensor, parameter

ACTIVATIONS = ("relu", "identity", "tanh")


def activate(x: Tensor, kind: str) -> Tensor:
    if kind == "relu":
        return x.relu()
    if kind == "tanh":
        return x.tanh()
    if kind in ("identity", "softmax-deferred"):
        # softmax-deferred: logits pass through; the loss applies softmax
        return x
    raise ValidationError(f"unknown activation {kind!r}")


class Module:
    """Container that discovers parameters and sub-modules from its attributes."""

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, val in self.__dict__.items():
            name = f"{prefix}{key}"
            if isinstance(val, Tensor) and val.requires_grad:
                yield name, val
            elif isinstance(val, Module):
                yield from val.named_parameters(name + ".")
            elif isinstance(val, (list, tuple)):
                for i, item in enumerate(val):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{name}.{i}.")
                    elif isinstance(item, Tensor) and item.requires_grad:
                        yield f"{name}.{i}", item

    def modules(self) -> Iterator["Module"]:
        """This module and every sub-module, depth first."""
        yield self
        for val in self.__dict__.values():
            items = val if isinstance(val, (list, tuple)) else (val,)
            for item in items:
                if isinstance(item, Module):
                    yield from item.modules()

    def parameters(self) -> list[Tensor]:
        return [p for _, p in self.named_parameters()]

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.grad = None

    def state_dict(self) -> dict[str, np.ndarray]:
        return {k: p.data.copy() for k, p in self.named_parameters()}

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        own = dict(self.named_parameters())
        missing = set(own) - set(state)
        unexpected = set(state) - set(own)
        if missing or unexpected:
            raise ValidationError(f"state mismatch: missing={sorted(missing)} unexpected={sorted(unexpected)}")
        for k, p in own.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != p.shape:
                raise DimensionError(f"{k}: expected {p.shape}, got {arr.shape}")
            p.data = arr.copy()

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())


class Dense(Module):
    """Affine layer ``activation(x @ W.T + b)`` with ``W`` stored ``[out, in]``."""

    def __init__(self, rng: np.random.Generator, n_in: int, n_out: int,
                 activation: str = "identity", bias: bool = True):
        w, b = glorot_uniform(rng, n_in, n_out)
        self.weight = parameter(w)
        self.bias = parameter(b) if bias else None
        self.activation = activation
        self.n_in, self.n_out = n_in, n_out

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        if x.shape[-1] != self.n_in:
            raise DimensionError(f"Dense expects last dim {self.n_in}, got {x.shape}")
        lead = x.shape[:-1]
        if len(lead) != 1:
            x = x.reshape(-1, self.n_in)
        y = x @ self.weight.T
        if self.bias is not None:
            y = y + self.bias
        if len(lead) != 1:
            y = y.reshape(*lead, self.n_out)
        return activate(y, self.activation)


def dense_forward(layer: Dense, x) -> Tensor:
    return layer(x)


class Mlp(Module):
    """Stack of Dense layers; hidden layers use ``activation``, the last ``out_activation``."""

    def __init__(self, rng: np.random.Generator, sizes: Sequence[int],
                 activation: str = "relu", out_activation: str = "identity"):
        if len(sizes) < 2:
            raise ValidationError(f"Mlp needs at least input and output sizes, got {sizes}")
        self.sizes = list(sizes)
        n = len(sizes) - 1
        self.layers = [
            Dense(rng, sizes[i], sizes[i + 1], activation if i < n - 1 else out_activation)
            for i in range(n)
        ]

    def forward(self, x) -> Tensor:
        for layer in self.layers:
            x = layer(x)
        return x


class ResidualMlp(Module):
    """Input projection, relu hidden blocks with skip connections, linear head.

    ``sizes = [in, h, h, ..., out]``; equal-width consecutive hidden layers
    are joined by identity skips.
    """

    def __init__(self, rng: np.random.Generator, sizes: Sequence[int]):
        self.sizes = list(sizes)
        self.layers = [Dense(rng, a, b, "identity") for a, b in zip(sizes[:-1], sizes[1:])]

    def forward(self, x) -> Tensor:
        h = as_tensor(x)
        last = len(self.layers) - 1
        for i, layer in enumerate(self.layers):
            y = layer(h)
            if i == last:
                return y
            y = y.relu()
            h = h + y if (i > 0 and y.shape[-1] == h.shape[-1]) else y
        return h


def reinitialise(module: Module, rng: np.random.Generator, scheme: str = "glorot") -> Module:
    """Redraw every Dense/Conv2d weight (and bias) of ``module`` in place."""
    if scheme not in INIT_SCHEMES:
        raise ValidationError(f"unknown init scheme {scheme!r}; choose from {sorted(INIT_SCHEMES)}")
    draw = INIT_SCHEMES[scheme]
    for m in module.modules():
        if isinstance(m, (Dense, Conv2d)):
            fan_out = m.weight.shape[0]
            fan_in = m.weight.size // fan_out
            w, b = draw(rng, fan_in, fan_out)
            m.weight.data = w.reshape(m.weight.shape)
            if m.bias is not None:
                m.bias.data = b
    return module


def im2col_op(x: Tensor, k: int, stride: int, pad: int) -> Tensor:
    shape = x.shape
    cols = kernels.im2col(x.data, k, stride, pad)

    def bw(g):
        return ((x, kernels.col2im(g, shape, k, stride, pad)),)

    return Tensor(cols, _parents=(x,), _backward=bw)


class Conv2d(Module):
    """2-d convolution by patch extraction and one matrix multiply."""

    def __init__(self, rng: np.random.Generator, in_ch: int, out_ch: int, k: int,
                 stride: int = 1, padding: int = 0, activation: str = "relu"):
        w, b = glorot_uniform(rng, in_ch * k * k, out_ch)
        # glorot on the flattened filter matches fan_in=in*k*k
        self.weight = parameter(w.reshape(out_ch, in_ch, k, k))
        self.bias = parameter(b)
        self.in_ch, self.out_ch, self.k = in_ch, out_ch, k
        self.stride, self.padding, self.activation = stride, padding, activation

    def out_hw(self, h: int, w: int) -> tuple[int, int]:
        oh = (h + 2 * self.padding - self.k) // self.stride + 1
        ow = (w + 2 * self.padding - self.k) // self.stride + 1
        if oh < 1 or ow < 1:
            raise DimensionError(f"conv output would be empty for input {h}x{w}")
        return oh, ow

    def forward(self, x) -> Tensor:
        x = as_tensor(x)
        if x.ndim != 4 or x.shape[1] != self.in_ch:
            raise DimensionError(f"Conv2d expects [B,{self.in_ch},H,W], got {x.shape}")
        B = x.shape[0]
        oh, ow = self.out_hw(x.shape[2], x.shape[3])
        cols = im2col_op(x, self.k, self.stride, self.padding)
        w = self.weight.reshape(self.out_ch, -1)
        y = cols @ w.T + self.bias
        y = y.reshape(B, oh, ow, self.out_ch).transpose(0, 3, 1, 2)
        return activate(y, self.activation)
