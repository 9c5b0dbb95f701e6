"""Two-level comparator relation stack and its MLP-pair baseline.

Each candidate fills cell 8. Its row (cells 6, 7, cand) is scored against
the two context rows and its column (cells 2, 5, cand) against the two
context columns; the four scores are summed into the candidate's logit.
"""
from __future__ import annotations

import numpy as np

from ..comparator import DistanceMode, head_distance
from ..errors import DimensionError, ValidationError
from ..nn import Dense, Mlp, Module, ResidualMlp, Tensor, concat, softmax, stack
from ..nn.tensor import as_tensor
from .generate import GridSpec, RpmBatch
from .rules import FULL_MASK, MASK_BITS, META_SIZE, popcount

PANEL_DIM = MASK_BITS + 3
TAG_DIM = 9
CONTEXT_ROWS = ((0, 1, 2), (3, 4, 5))
CONTEXT_COLS = ((0, 3, 6), (1, 4, 7))
# with the candidate appended as index 8
CANDIDATE_ROW = (6, 7, 8)
CANDIDATE_COL = (2, 5, 8)
PAIRS = ((0, 1), (0, 2), (1, 2))


def panel_features(panels: np.ndarray, spec: GridSpec | None = None) -> np.ndarray:
    """``[..., 3]`` int panels -> ``[..., 12]``: mask bits, count/9, size and colour scaled to [0, 1]."""
    spec = spec or GridSpec()
    p = np.asarray(panels, dtype=np.int64)
    bits = (p[..., :1] >> np.arange(MASK_BITS)) & 1
    count = popcount(p[..., 0])[..., None] / MASK_BITS
    size = p[..., 1:2] / (spec.size_levels - 1)
    colour = p[..., 2:3] / (spec.colour_levels - 1)
    return np.concatenate([bits, count, size, colour], axis=-1).astype(np.float64)


def position_tags(batch_size: int) -> tuple[np.ndarray, np.ndarray]:
    """One-hot cell tags: ``[B, 8, 9]`` for the context (cells 0..7) and for the candidates (all cell 8)."""
    tags = np.eye(TAG_DIM)
    return (np.broadcast_to(tags[:8], (batch_size, 8, TAG_DIM)),
            np.broadcast_to(tags[8], (batch_size, 8, TAG_DIM)))


def scaled(width: float, mult: float) -> int:
    return max(1, int(round(width * mult)))


class PanelEncoder(Module):
    """``[..., 12]`` panel features -> ``[..., 32]`` relu MLP embedding."""

    def __init__(self, rng: np.random.Generator, embed_sizes=(64, 32)):
        self.obs_shape = (PANEL_DIM,)
        self.embed_dim = embed_sizes[-1]
        self.net = Mlp(rng, [PANEL_DIM, *embed_sizes])

    def forward(self, x) -> Tensor:
        return self.net(x)


def random_panels(rng: np.random.Generator, n: int, spec: GridSpec | None = None) -> np.ndarray:
    """``[n, 3]`` panels uniform over every non-empty mask and the full size/colour grids."""
    spec = spec or GridSpec()
    return np.stack([rng.integers(1, FULL_MASK + 1, n), rng.integers(0, spec.size_levels, n),
                     rng.integers(0, spec.colour_levels, n)], axis=1)


class RelationStack(Module):
    """Shared wiring; subclasses define the level-1 pair map and the level-2 row score."""

    def __init__(self, rng: np.random.Generator, width_mult: float = 1 / 16, embed_sizes=(64, 32),
                 aux_head: bool = False, spec: GridSpec | None = None):
        if width_mult <= 0:
            raise ValidationError("width multiplier must be positive")
        self.spec = spec or GridSpec()
        self.width_mult = width_mult
        self.encoder = PanelEncoder(rng, embed_sizes)
        # o_i = encoder(panel) with the position tag appended
        self.embed_dim = self.encoder.embed_dim + TAG_DIM
        self.g1_sizes = [scaled(w, width_mult) for w in (2048, 2048, 2048, 796)]
        self.pair_dim = self.g1_sizes[-1]
        self.row_dim = 3 * self.pair_dim
        self.g2_sizes = [scaled(w, width_mult) for w in (1024, 512)] + [1]
        self.aux = Mlp(rng, [self.row_dim, *[scaled(w, width_mult) for w in (1024, 512)], META_SIZE]) if aux_head else None

    # level 1 ---------------------------------------------------------
    def panel_code(self, o: Tensor) -> Tensor:
        return o

    def pair(self, ci: Tensor, cj: Tensor) -> Tensor:
        raise NotImplementedError

    # level 2 ---------------------------------------------------------
    def row_code(self, r: Tensor) -> Tensor:
        return r

    def row_score(self, qa: Tensor, qb: Tensor) -> Tensor:
        raise NotImplementedError

    def line_embedding(self, codes: Tensor) -> Tensor:
        """``[..., 3, D]`` panel codes of a line -> ``r = e_01 ⊕ e_02 ⊕ e_12``."""
        return concat([self.pair(codes[..., i, :], codes[..., j, :]) for i, j in PAIRS], axis=-1)

    def candidate_lines(self, ctx: Tensor, cand: Tensor) -> Tensor:
        """Embeddings of the candidate-filled row and column, ``[B, 8, 2, R]``.

        The pair of fixed context panels is shared by all 8 candidates, so
        it is compared once per line and broadcast.
        """
        B, D = ctx.shape[0], ctx.shape[-1]
        fixed = stack([stack([ctx[:, i, :] for i in line[:2]], axis=1)
                       for line in (CANDIDATE_ROW, CANDIDATE_COL)], axis=1)  # [B, 2, 2, D]
        a = fixed[:, :, 0, :].reshape(B, 2, 1, D) * np.ones((1, 1, 8, 1))
        b = fixed[:, :, 1, :].reshape(B, 2, 1, D) * np.ones((1, 1, 8, 1))
        c = cand.reshape(B, 1, 8, D) * np.ones((1, 2, 1, 1))
        e_ab = self.pair(fixed[:, :, 0, :], fixed[:, :, 1, :])  # [B, 2, P]
        e_ab = e_ab.reshape(B, 2, 1, -1) * np.ones((1, 1, 8, 1))
        r = concat([e_ab, self.pair(a, c), self.pair(b, c)], axis=-1)  # [B, 2, 8, R]
        return r.transpose(0, 2, 1, 3)

    def forward(self, batch: RpmBatch) -> tuple[Tensor, Tensor | None]:
        """Candidate logits ``[B, 8]`` and, with the aux head, rule logits ``[B, META_SIZE]``."""
        B = len(batch)
        ctx_tag, cand_tag = position_tags(B)
        ctx = self.panel_code(concat([self.encoder(panel_features(batch.context, self.spec)), ctx_tag], -1))
        cand = self.panel_code(concat([self.encoder(panel_features(batch.candidates, self.spec)), cand_tag], -1))
        ctx_lines = stack([stack([ctx[:, i, :] for i in line], axis=1)
                           for line in CONTEXT_ROWS + CONTEXT_COLS], axis=1)  # [B, 4, 3, D]
        ctx_r = self.line_embedding(ctx_lines)  # [B, 4, R]
        cand_r = self.candidate_lines(ctx, cand)  # [B, 8, 2, R]
        # candidate row vs context rows, candidate column vs context columns
        q_ctx = self.row_code(ctx_r).reshape(B, 1, 2, 2, -1)  # [B, 1, axis, which, Q]
        q_cand = self.row_code(cand_r).reshape(B, 8, 2, 1, -1)
        scores = self.row_score(q_cand, q_ctx)  # [B, 8, 2, 2]
        logits = scores.sum(axis=(2, 3))
        rule_logits = self.aux(ctx_r.sum(axis=1)) if self.aux is not None else None
        return logits, rule_logits

    def predict_proba(self, batch: RpmBatch) -> np.ndarray:
        logits, _ = self(batch)
        return softmax(logits, axis=-1).data


class TwoLevelComparatorModel(RelationStack):
    """Level 1: K 1-d projections, vector difference, residual MLP ``g``.
    Level 2: K 1-d projections of row embeddings, absolute difference, MLP score."""

    def __init__(self, rng: np.random.Generator, width_mult: float = 1 / 16, num_proj: int | None = None,
                 embed_sizes=(64, 32), aux_head: bool = False, spec: GridSpec | None = None):
        super().__init__(rng, width_mult, embed_sizes, aux_head, spec)
        self.num_proj = num_proj if num_proj is not None else scaled(512, width_mult)
        if self.num_proj < 1:
            raise ValidationError("num_proj must be >= 1")
        K = self.num_proj
        self.p1 = Dense(rng, self.embed_dim, K)
        self.g1 = ResidualMlp(rng, [K, *self.g1_sizes])
        self.p2 = Dense(rng, self.row_dim, K)
        self.g2 = Mlp(rng, [K, *self.g2_sizes])

    def panel_code(self, o: Tensor) -> Tensor:
        return self.p1(o)

    def pair(self, ci: Tensor, cj: Tensor) -> Tensor:
        return self.g1(head_distance(DistanceMode.VECTOR_DIFF, ci, cj))

    def row_code(self, r: Tensor) -> Tensor:
        return self.p2(r)

    def row_score(self, qa: Tensor, qb: Tensor) -> Tensor:
        # broadcasting difference over [B, 8, 2, 1, K] and [B, 1, 2, 2, K]
        d = head_distance(DistanceMode.ABS_DIFF, qa, qb)
        return self.g2(d).reshape(*d.shape[:-1])


class RelationBaselineModel(RelationStack):
    """Same stack with both comparators replaced by MLPs on concatenated inputs."""

    def __init__(self, rng: np.random.Generator, width_mult: float = 1 / 16, embed_sizes=(64, 32),
                 aux_head: bool = False, spec: GridSpec | None = None):
        super().__init__(rng, width_mult, embed_sizes, aux_head, spec)
        self.g1 = ResidualMlp(rng, [2 * self.embed_dim, *self.g1_sizes])
        self.g2 = Mlp(rng, [2 * self.row_dim, *self.g2_sizes])

    def pair(self, ci: Tensor, cj: Tensor) -> Tensor:
        return self.g1(concat([ci, cj], axis=-1))

    def row_score(self, qa: Tensor, qb: Tensor) -> Tensor:
        shape = np.broadcast_shapes(qa.shape[:-1], qb.shape[:-1])
        qa = qa * np.ones(shape + (1,))
        qb = qb * np.ones(shape + (1,))
        return self.g2(concat([qa, qb], axis=-1)).reshape(*shape)


RPM_MODEL_KINDS = ("comparator", "baseline")


def build_rpm_model(kind: str, rng: np.random.Generator, **kw) -> RelationStack:
    if kind == "comparator":
        return TwoLevelComparatorModel(rng, **kw)
    if kind == "baseline":
        kw.pop("num_proj", None)
        return RelationBaselineModel(rng, **kw)
    raise ValidationError(f"unknown model {kind!r}; choose from {RPM_MODEL_KINDS}")


def two_level_forward(model: RelationStack, batch: RpmBatch) -> tuple[np.ndarray, np.ndarray | None]:
    """8-way candidate probabilities and optional rule logits."""
    logits, rule_logits = model(batch)
    if logits.shape != (len(batch), 8):
        raise DimensionError(f"expected [B, 8] logits, got {logits.shape}")
    return softmax(logits, axis=-1).data, (rule_logits.data if rule_logits is not None else None)
