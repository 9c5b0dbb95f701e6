"""Pairwise comparison through K low-dimensional projections.

``f(o_i, o_j) = g(concat_k c_k(dist(p_k(o_i), p_k(o_j))))`` where each
``p_k`` is an affine map to a ``proj_dim``-dimensional space, ``dist`` is a
fixed distance bias (vector difference, absolute difference or plain
concatenation) and ``c_k``/``g`` are small MLPs or the identity.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError, ValidationError
from .nn import Dense, Mlp, Module, ResidualMlp, Tensor, concat, cross_entropy, mse
from .nn.tensor import as_tensor


class DistanceMode(str, enum.Enum):
    VECTOR_DIFF = "vector_diff"
    ABS_DIFF = "abs_diff"
    CONCAT = "concat"

    @classmethod
    def parse(cls, value: "DistanceMode | str") -> "DistanceMode":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("-", "").replace("_", "")
        table = {"vectordiff": cls.VECTOR_DIFF, "absdiff": cls.ABS_DIFF, "concat": cls.CONCAT}
        if key not in table:
            raise ValidationError(f"unknown distance mode {value!r}")
        return table[key]


def head_distance(mode: DistanceMode | str, u, v) -> Tensor:
    """Distance bias fed to a comparator head; works on any leading batch shape."""
    mode = DistanceMode.parse(mode)
    u, v = as_tensor(u), as_tensor(v)
    if u.shape[-1] != v.shape[-1]:
        raise DimensionError(f"projection dims differ: {u.shape} vs {v.shape}")
    if mode is DistanceMode.VECTOR_DIFF:
        return u - v
    if mode is DistanceMode.ABS_DIFF:
        return (u - v).abs()
    return concat([u, v], axis=-1)


class ComparatorModule(Module):
    """K parallel projection/comparator heads and a combiner.

    The K projection heads are stored as one stacked affine layer
    ``proj`` of width ``K * proj_dim``; head ``k`` owns rows
    ``k*proj_dim:(k+1)*proj_dim``. ``head_hidden=None`` makes every ``c_k``
    the identity on the distance vector; otherwise each ``c_k`` is an MLP
    ``dist_dim -> *head_hidden -> head_out``. ``combiner=None`` makes ``g``
    the identity.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        embed_dim: int,
        num_heads: int = 1,
        proj_dim: int = 1,
        mode: DistanceMode | str = DistanceMode.VECTOR_DIFF,
        head_hidden: Sequence[int] | None = None,
        head_out: int = 1,
        combiner: Sequence[int] | None = None,
        proj_bias: bool = True,
        head_activation: str = "relu",
        combiner_activation: str = "relu",
        combiner_residual: bool = False,
    ):
        if num_heads < 1:
            raise ValidationError("a comparator needs at least one head (K >= 1)")
        if proj_dim < 1:
            raise ValidationError("proj_dim must be >= 1")
        self.embed_dim, self.num_heads, self.proj_dim = embed_dim, num_heads, proj_dim
        self.mode = DistanceMode.parse(mode)
        self.proj = Dense(rng, embed_dim, num_heads * proj_dim, "identity", bias=proj_bias)
        dist_dim = 2 * proj_dim if self.mode is DistanceMode.CONCAT else proj_dim
        self.dist_dim = dist_dim
        if head_hidden is None:
            self.heads = []
            self.head_out = dist_dim
        else:
            self.heads = [
                Mlp(rng, [dist_dim, *head_hidden, head_out], head_activation)
                for _ in range(num_heads)
            ]
            self.head_out = head_out
        g_in = num_heads * self.head_out
        if combiner is None:
            self.combiner = None
            self.out_dim = g_in
        else:
            if combiner_residual:
                self.combiner = ResidualMlp(rng, [g_in, *combiner])
            else:
                self.combiner = Mlp(rng, [g_in, *combiner], combiner_activation)
            self.out_dim = combiner[-1]

    def project(self, o) -> Tensor:
        """``[..., embed] -> [..., K, proj_dim]``."""
        o = as_tensor(o)
        if o.shape[-1] != self.embed_dim:
            raise DimensionError(f"expected embed_dim {self.embed_dim}, got {o.shape}")
        p = self.proj(o)
        return p.reshape(*o.shape[:-1], self.num_heads, self.proj_dim)

    def compare_projected(self, pi: Tensor, pj: Tensor) -> Tensor:
        """Apply the distance bias, the heads ``c_k`` and the combiner to projections."""
        d = head_distance(self.mode, pi, pj)
        lead = d.shape[:-2]
        if self.heads:
            outs = [c(d[(..., k, slice(None))]) for k, c in enumerate(self.heads)]
            h = concat(outs, axis=-1) if len(outs) > 1 else outs[0]
        else:
            h = d.reshape(*lead, self.num_heads * self.dist_dim)
        return self.combiner(h) if self.combiner is not None else h

    def forward(self, o_i, o_j) -> Tensor:
        return self.compare_projected(self.project(o_i), self.project(o_j))


def comparator_forward(f: ComparatorModule, o_i, o_j) -> Tensor:
    return f(o_i, o_j)


@dataclass(frozen=True)
class AttributeSupervision:
    """How attribute labels are built and scored.

    ``kind="continuous"`` regresses ``a_i - a_j`` with MSE;
    ``kind="categorical"`` classifies ``1[a_i == a_j]`` (class 1 = equal)
    with cross entropy over two logits.
    """

    kind: str = "continuous"
    loss: str = "mse"

    def __post_init__(self):
        expected = {"continuous": "mse", "categorical": "cross_entropy"}
        if self.kind not in expected:
            raise ValidationError(f"unknown supervision kind {self.kind!r}")
        if self.loss != expected[self.kind]:
            raise ValidationError(f"{self.kind} labels need {expected[self.kind]} loss, got {self.loss!r}")


def attribute_labels(a_i, a_j, sup: AttributeSupervision) -> np.ndarray:
    a_i, a_j = np.asarray(a_i, dtype=np.float64), np.asarray(a_j, dtype=np.float64)
    if sup.kind == "continuous":
        return (a_i - a_j).reshape(-1, 1)
    eq = (a_i == a_j).reshape(-1).astype(np.int64)
    return np.eye(2)[eq]


def supervised_comparator_loss(f: ComparatorModule, o_i, o_j, a_i, a_j,
                               sup: AttributeSupervision) -> Tensor:
    labels = attribute_labels(a_i, a_j, sup)
    out = f(o_i, o_j)
    if out.shape != labels.shape:
        raise ValidationError(
            f"comparator output {out.shape} does not fit {sup.kind} labels {labels.shape}"
        )
    if sup.kind == "continuous":
        return mse(out, labels)
    return cross_entropy(out, labels)
