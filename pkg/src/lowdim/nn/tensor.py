"""Tape-free reverse-mode autodiff over float64 numpy arrays.

Every op returns a new :class:`Tensor` holding its parents and a closure
that pushes the output gradient back to them. :meth:`Tensor.backward`
walks the graph in reverse topological order.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import DimensionError, StateError

DTYPE = np.float64


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    extra = grad.ndim - len(shape)
    if extra > 0:
        grad = grad.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and grad.shape[i] != 1)
    if axes:
        grad = grad.sum(axis=axes, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_consumed", "name", "mask")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        _parents: tuple["Tensor", ...] = (),
        _backward: Callable[[np.ndarray], None] | None = None,
        name: str | None = None,
    ):
        self.data = np.asarray(data, dtype=DTYPE)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents if self.requires_grad else ()
        self._backward = _backward if self.requires_grad else None
        self._consumed = False
        self.name = name
        # boolean keep-mask set by pruning; optimizers hold masked entries at zero
        self.mask: np.ndarray | None = None

    # -- basic properties ------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data)

    def __repr__(self) -> str:
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}{tag}, requires_grad={self.requires_grad})"

    def __len__(self) -> int:
        return len(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    # -- graph plumbing --------------------------------------------------
    def _accum(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=DTYPE)
        else:
            self.grad = self.grad + g

    def backward(self, grad: np.ndarray | None = None, retain_graph: bool = False) -> None:
        """Accumulate d(self)/d(leaf) into ``.grad`` of every reachable leaf."""
        if self._consumed:
            raise StateError("graph already consumed by a previous backward(); run forward again")
        if grad is None:
            if self.data.size != 1:
                raise StateError(f"backward() needs a scalar loss, got shape {self.shape}")
            grad = np.ones_like(self.data)
        if not self.requires_grad:
            return
        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in seen and p.requires_grad:
                    stack.append((p, False))
        grads: dict[int, np.ndarray] = {id(self): np.asarray(grad, dtype=DTYPE)}
        for node in reversed(order):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            if node._backward is None:
                node._accum(g)
                continue
            for parent, pg in node._backward(g):
                if pg is None or not parent.requires_grad:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
            if not retain_graph:
                node._consumed = True
                node._parents = ()
                node._backward = None
        if not retain_graph:
            self._consumed = True

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            return ((a, _unbroadcast(g, a.shape)), (b, _unbroadcast(g, b.shape)))

        return Tensor(a.data + b.data, _parents=(a, b), _backward=bw)

    __radd__ = __add__

    def __sub__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            return ((a, _unbroadcast(g, a.shape)), (b, _unbroadcast(-g, b.shape)))

        return Tensor(a.data - b.data, _parents=(a, b), _backward=bw)

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) - self

    def __neg__(self) -> "Tensor":
        a = self
        return Tensor(-a.data, _parents=(a,), _backward=lambda g: ((a, -g),))

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other

        def bw(g):
            return (
                (a, _unbroadcast(g * b.data, a.shape) if a.requires_grad else None),
                (b, _unbroadcast(g * a.data, b.shape) if b.requires_grad else None),
            )

        return Tensor(a.data * b.data, _parents=(a, b), _backward=bw)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other
        out = a.data / b.data

        def bw(g):
            return (
                (a, _unbroadcast(g / b.data, a.shape) if a.requires_grad else None),
                (b, _unbroadcast(-g * out / b.data, b.shape) if b.requires_grad else None),
            )

        return Tensor(out, _parents=(a, b), _backward=bw)

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other) / self

    def __pow__(self, p: float) -> "Tensor":
        a = self
        return Tensor(
            a.data**p, _parents=(a,), _backward=lambda g: ((a, g * p * a.data ** (p - 1)),)
        )

    def __matmul__(self, other) -> "Tensor":
        other = as_tensor(other)
        a, b = self, other
        if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
            raise DimensionError(f"matmul shape mismatch {a.shape} @ {b.shape}")

        def bw(g):
            ga = gb = None
            if a.requires_grad:
                ga = _unbroadcast(g @ np.swapaxes(b.data, -1, -2), a.shape)
            if b.requires_grad:
                if a.ndim == 2 and b.ndim == 2:
                    gb = a.data.T @ g
                else:
                    gb = _unbroadcast(np.swapaxes(a.data, -1, -2) @ g, b.shape)
            return ((a, ga), (b, gb))

        return Tensor(a.data @ b.data, _parents=(a, b), _backward=bw)

    # -- elementwise -----------------------------------------------------
    def relu(self) -> "Tensor":
        a = self
        mask = a.data > 0
        return Tensor(a.data * mask, _parents=(a,), _backward=lambda g: ((a, g * mask),))

    def tanh(self) -> "Tensor":
        a = self
        out = np.tanh(a.data)
        return Tensor(out, _parents=(a,), _backward=lambda g: ((a, g * (1.0 - out * out)),))

    def sigmoid(self) -> "Tensor":
        a = self
        out = 0.5 * (1.0 + np.tanh(0.5 * a.data))
        return Tensor(out, _parents=(a,), _backward=lambda g: ((a, g * out * (1.0 - out)),))

    def exp(self) -> "Tensor":
        a = self
        out = np.exp(a.data)
        return Tensor(out, _parents=(a,), _backward=lambda g: ((a, g * out),))

    def log(self) -> "Tensor":
        a = self
        return Tensor(np.log(a.data), _parents=(a,), _backward=lambda g: ((a, g / a.data),))

    def abs(self) -> "Tensor":
        a = self
        sign = np.sign(a.data)
        return Tensor(np.abs(a.data), _parents=(a,), _backward=lambda g: ((a, g * sign),))

    # -- reductions ------------------------------------------------------
    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        a = self

        def bw(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return ((a, np.broadcast_to(g, a.shape)),)

        return Tensor(a.data.sum(axis=axis, keepdims=keepdims), _parents=(a,), _backward=bw)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        n = self.data.size if axis is None else np.prod([self.shape[i] for i in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def max(self, axis: int, keepdims: bool = False) -> "Tensor":
        """Max along ``axis``; the gradient goes to the first arg-max."""
        a = self
        idx = np.argmax(a.data, axis=axis)
        out = np.take_along_axis(a.data, np.expand_dims(idx, axis), axis)

        def bw(g):
            if not keepdims:
                g = np.expand_dims(g, axis)
            full = np.zeros_like(a.data)
            np.put_along_axis(full, np.expand_dims(idx, axis), g, axis)
            return ((a, full),)

        return Tensor(out if keepdims else np.squeeze(out, axis), _parents=(a,), _backward=bw)

    # -- shape -----------------------------------------------------------
    def reshape(self, *shape) -> "Tensor":
        a = self
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return Tensor(
            a.data.reshape(shape), _parents=(a,), _backward=lambda g: ((a, g.reshape(a.shape)),)
        )

    def transpose(self, *axes) -> "Tensor":
        a = self
        axes = axes or tuple(reversed(range(a.ndim)))
        inv = np.argsort(axes)
        return Tensor(
            a.data.transpose(axes), _parents=(a,), _backward=lambda g: ((a, g.transpose(inv)),)
        )

    @property
    def T(self) -> "Tensor":
        return self.transpose()

    def __getitem__(self, idx) -> "Tensor":
        a = self
        if isinstance(idx, Tensor):
            idx = idx.data.astype(np.intp)

        parts = idx if isinstance(idx, tuple) else (idx,)
        advanced = any(isinstance(i, (np.ndarray, list)) for i in parts)

        def bw(g):
            full = np.zeros_like(a.data)
            if advanced:
                np.add.at(full, idx, g)
            else:
                full[idx] = g
            return ((a, full),)

        return Tensor(a.data[idx], _parents=(a,), _backward=bw)

    def take(self, indices: np.ndarray, axis: int = 0) -> "Tensor":
        """Gather along ``axis`` with an integer index array (repeats allowed)."""
        a = self
        indices = np.asarray(indices, dtype=np.intp)
        if indices.ndim > 1 and axis != 0:
            raise DimensionError("multi-dimensional take only supported on axis 0")

        def bw(g):
            full = np.zeros_like(a.data)
            moved = np.moveaxis(full, axis, 0)
            np.add.at(moved, indices.reshape(-1), np.moveaxis(g, axis, 0).reshape((-1,) + moved.shape[1:]))
            return ((a, full),)

        return Tensor(np.take(a.data, indices, axis=axis), _parents=(a,), _backward=bw)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(np.array(data, dtype=DTYPE), requires_grad=True, name=name)


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    ts = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in ts]
    cuts = np.cumsum(sizes)[:-1]

    def bw(g):
        return tuple(zip(ts, np.split(g, cuts, axis=axis)))

    return Tensor(np.concatenate([t.data for t in ts], axis=axis), _parents=tuple(ts), _backward=bw)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    ts = [as_tensor(t) for t in tensors]

    def bw(g):
        return tuple((t, np.take(g, i, axis=axis)) for i, t in enumerate(ts))

    return Tensor(np.stack([t.data for t in ts], axis=axis), _parents=tuple(ts), _backward=bw)


def where(cond: np.ndarray, a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    cond = np.asarray(cond, dtype=bool)

    def bw(g):
        return ((a, _unbroadcast(g * cond, a.shape)), (b, _unbroadcast(g * ~cond, b.shape)))

    return Tensor(np.where(cond, a.data, b.data), _parents=(a, b), _backward=bw)


def softmax(x: Tensor, axis: int = -1, mask: np.ndarray | None = None) -> Tensor:
    """Softmax along ``axis``; masked-out entries get probability exactly 0."""
    z = x.data
    if mask is not None:
        z = np.where(mask, z, -np.inf)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out = e / e.sum(axis=axis, keepdims=True)

    def bw(g):
        return ((x, out * (g - (g * out).sum(axis=axis, keepdims=True))),)

    return Tensor(out, _parents=(x,), _backward=bw)


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    z = x.data - x.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    out = z - lse
    sm = np.exp(out)

    def bw(g):
        return ((x, g - sm * g.sum(axis=axis, keepdims=True)),)

    return Tensor(out, _parents=(x,), _backward=bw)


def masked_max(x: Tensor, mask: np.ndarray, axis: int) -> Tensor:
    """Max over entries where ``mask`` is true."""
    fill = np.where(mask, 0.0, -np.inf)
    return (x + Tensor(fill)).max(axis=axis)


def masked_sum(x: Tensor, mask: np.ndarray, axis: int) -> Tensor:
    return (x * Tensor(mask.astype(DTYPE))).sum(axis=axis)
