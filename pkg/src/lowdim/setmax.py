"""Maximum of a set: extrapolation data, the comparator set model and baselines."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .comparator import ComparatorModule, DistanceMode
from .errors import ValidationError
from .nn import Dense, Mlp, Module, Tensor, make_rng, mse, parameter, reinitialise, softmax
from .nn.tensor import as_tensor, masked_max, masked_sum
from .report import ExperimentReport
from .training import ModelHooks, TrainConfig, fit

MODEL_KINDS = ("comparator", "deepsets_mean", "deepsets_max", "set_transformer")


@dataclass(frozen=True)
class SetMaxSplitSpec:
    train_card: tuple[int, int] = (2, 20)
    test_card: tuple[int, int] = (2, 40)
    train_range: tuple[float, float] = (0.0, 100.0)
    test_range: tuple[float, float] = (100.0, 200.0)
    n_train: int = 10000
    n_test: int = 2000

    def __post_init__(self):
        if not self.train_range[1] <= self.test_range[0]:
            raise ValidationError("training values must lie below every test value")
        for lo, hi in (self.train_card, self.test_card):
            if lo < 2 or hi < lo:
                raise ValidationError(f"bad cardinality range {(lo, hi)}")


@dataclass
class SetBatch:
    """Padded sets: ``values[b, :n_b]`` are real, the rest is zero padding."""

    values: np.ndarray  # [B, N]
    mask: np.ndarray  # [B, N] bool
    target: np.ndarray  # [B]

    def __len__(self) -> int:
        return len(self.target)

    def subset(self, idx: np.ndarray) -> "SetBatch":
        n = int(self.mask[idx].sum(axis=1).max())
        return SetBatch(self.values[idx, :n], self.mask[idx, :n], self.target[idx])

    def samples(self) -> list[list[float]]:
        return [list(v[m]) for v, m in zip(self.values, self.mask)]


def pack_sets(sets: Sequence[Sequence[float]]) -> SetBatch:
    if any(len(s) == 0 for s in sets):
        raise ValidationError("empty set")
    n = max(len(s) for s in sets)
    values = np.zeros((len(sets), n))
    mask = np.zeros((len(sets), n), dtype=bool)
    for i, s in enumerate(sets):
        values[i, : len(s)] = s
        mask[i, : len(s)] = True
    target = np.array([max(s) for s in sets], dtype=np.float64)
    return SetBatch(values, mask, target)


def _draw(rng: np.random.Generator, n: int, card: tuple[int, int], rng_range: tuple[float, float],
          closed: bool) -> SetBatch:
    sizes = rng.integers(card[0], card[1] + 1, size=n)
    lo, hi = rng_range
    raw = rng.uniform(lo, hi, size=(n, card[1]))
    if not closed:
        # uniform() can round up to the open upper bound
        raw = np.minimum(raw, np.nextafter(hi, lo))
    mask = np.arange(card[1])[None, :] < sizes[:, None]
    values = np.where(mask, raw, 0.0)
    target = np.where(mask, raw, -np.inf).max(axis=1)
    return SetBatch(values, mask, target)


def generate_setmax_split(spec: SetMaxSplitSpec, rng: np.random.Generator) -> tuple[SetBatch, SetBatch]:
    """Training sets from ``[0,100)``, test sets from ``[100,200]``."""
    train = _draw(rng, spec.n_train, spec.train_card, spec.train_range, closed=False)
    test = _draw(rng, spec.n_test, spec.test_card, spec.test_range, closed=True)
    return train, test


class SetModel(Module):
    def forward(self, values, mask: np.ndarray) -> Tensor:
        raise NotImplementedError

    def predict(self, batch: SetBatch) -> np.ndarray:
        return self(batch.values, batch.mask).data


class ComparatorSetModel(SetModel):
    """Comparator-encoded elements pooled by attention over their 1-d projections.

    ``e_i = MLP(sum_j f(x_i, x_j))`` with ``f(x_i,x_j) = c(p(x_i) - p(x_j))``,
    output ``sum_i softmax_i(e) * p(x_i)``. The projection ``p`` is shared
    between the comparator and the pooling.
    """

    def __init__(self, rng: np.random.Generator, summariser_hidden: int = 16,
                 proj_bias: bool = False):
        # the comparator only sees projection differences, so a projection bias
        # acts solely on the pooled output, where it cannot extrapolate
        self.f = ComparatorModule(rng, embed_dim=1, num_heads=1, proj_dim=1,
                                  mode=DistanceMode.VECTOR_DIFF, head_hidden=[], head_out=1,
                                  proj_bias=proj_bias)
        self.summariser = Mlp(rng, [1, summariser_hidden, 1])

    def attention(self, values, mask: np.ndarray) -> tuple[Tensor, Tensor]:
        x = as_tensor(values).reshape(*np.shape(values), 1)
        proj = self.f.project(x)  # [B, N, 1, 1]
        B, N = mask.shape
        pi = proj.reshape(B, N, 1, 1, 1)
        pj = proj.reshape(B, 1, N, 1, 1)
        pair = self.f.compare_projected(pi, pj)  # [B, N, N, 1]
        pair_mask = (mask[:, None, :] & mask[:, :, None])[..., None]
        summed = masked_sum(pair, pair_mask, axis=2)  # [B, N, 1]
        e = self.summariser(summed).reshape(B, N)
        return softmax(e, axis=1, mask=mask), proj.reshape(B, N)

    def forward(self, values, mask: np.ndarray) -> Tensor:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape[1] == 0 or not mask.any(axis=1).all():
            raise ValidationError("every set needs at least one element")
        attn, proj = self.attention(values, mask)
        return masked_sum(attn * proj, mask, axis=1)


def comparator_set_forward(model: ComparatorSetModel, values: Sequence[float]) -> float:
    if len(values) < 1:
        raise ValidationError("empty set")
    batch = pack_sets([list(values)])
    return float(model(batch.values, batch.mask).data[0])


class DeepSetsModel(SetModel):
    """``rho(pool_i phi(x_i))`` with mean or max pooling.

    ``phi_sizes``/``rho_sizes`` of ``None`` make that net the identity.
    """

    def __init__(self, rng: np.random.Generator, pooling: str = "mean",
                 phi_sizes: Sequence[int] | None = (1, 32, 32),
                 rho_sizes: Sequence[int] | None = (32, 32, 1)):
        if pooling not in ("mean", "max"):
            raise ValidationError(f"pooling must be mean or max, got {pooling!r}")
        self.pooling = pooling
        self.phi = Mlp(rng, phi_sizes, out_activation="relu") if phi_sizes else None
        self.rho = Mlp(rng, rho_sizes) if rho_sizes else None

    def forward(self, values, mask: np.ndarray) -> Tensor:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape[1] == 0 or not mask.any(axis=1).all():
            raise ValidationError("every set needs at least one element")
        x = as_tensor(values).reshape(*mask.shape, 1)
        h = self.phi(x) if self.phi is not None else x  # [B, N, H]
        m3 = np.broadcast_to(mask[..., None], h.shape)
        if self.pooling == "max":
            pooled = masked_max(h, m3, axis=1)
        else:
            pooled = masked_sum(h, m3, axis=1) * Tensor(1.0 / mask.sum(axis=1, keepdims=True))
        out = self.rho(pooled) if self.rho is not None else pooled
        return out.reshape(mask.shape[0])


class MultiheadAttentionBlock(Module):
    """MAB(X, Y): ``H = Q + softmax(Q K^T / sqrt(dim)) V`` per head, then ``H + relu(W H)``."""

    def __init__(self, rng: np.random.Generator, dim_q: int, dim_k: int, dim: int, heads: int):
        if dim % heads:
            raise ValidationError("hidden width must be divisible by the head count")
        self.q = Dense(rng, dim_q, dim)
        self.k = Dense(rng, dim_k, dim)
        self.v = Dense(rng, dim_k, dim)
        self.o = Dense(rng, dim, dim)
        self.dim, self.heads = dim, heads

    def forward(self, x: Tensor, y: Tensor, key_mask: np.ndarray) -> Tensor:
        B, Nq, Nk, H = x.shape[0], x.shape[1], y.shape[1], self.heads
        dh = self.dim // H
        q = self.q(x).reshape(B, Nq, H, dh).transpose(0, 2, 1, 3)
        k = self.k(y).reshape(B, Nk, H, dh).transpose(0, 2, 3, 1)
        v = self.v(y).reshape(B, Nk, H, dh).transpose(0, 2, 1, 3)
        logits = (q @ k) * (1.0 / np.sqrt(self.dim))  # [B, H, Nq, Nk]
        attn = softmax(logits, axis=-1, mask=np.broadcast_to(key_mask[:, None, None, :], logits.shape))
        h = (q + attn @ v).transpose(0, 2, 1, 3).reshape(B, Nq, self.dim)
        return h + self.o(h).relu()


class SetTransformerModel(SetModel):
    """Element embedding, ``num_sab`` self-attention blocks, PMA pooling, linear head."""

    def __init__(self, rng: np.random.Generator, hidden: int = 64, heads: int = 4,
                 num_seeds: int = 1, num_sab: int = 1):
        self.embed = Dense(rng, 1, hidden)
        self.sabs = [MultiheadAttentionBlock(rng, hidden, hidden, hidden, heads) for _ in range(num_sab)]
        self.seeds = parameter(rng.uniform(-np.sqrt(6 / (1 + hidden)), np.sqrt(6 / (1 + hidden)),
                                           size=(num_seeds, hidden)))
        self.pma = MultiheadAttentionBlock(rng, hidden, hidden, hidden, heads)
        self.head = Dense(rng, hidden * num_seeds, 1)
        self.num_seeds = num_seeds

    def forward(self, values, mask: np.ndarray) -> Tensor:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape[1] == 0 or not mask.any(axis=1).all():
            raise ValidationError("every set needs at least one element")
        B, N = mask.shape
        h = self.embed(as_tensor(values).reshape(B, N, 1))
        for sab in self.sabs:
            h = sab(h, h, mask)
        s = self.seeds.reshape(1, self.num_seeds, -1) * Tensor(np.ones((B, 1, 1)))
        pooled = self.pma(s, h, mask).reshape(B, -1)
        return self.head(pooled).reshape(B)


def deepsets_forward(model: DeepSetsModel, values: Sequence[float]) -> float:
    batch = pack_sets([list(values)])
    return float(model(batch.values, batch.mask).data[0])


def settransformer_forward(model: SetTransformerModel, values: Sequence[float]) -> float:
    batch = pack_sets([list(values)])
    return float(model(batch.values, batch.mask).data[0])


def build_set_model(kind: str, rng: np.random.Generator, **kw) -> SetModel:
    if kind == "comparator":
        return ComparatorSetModel(rng, **kw)
    if kind == "deepsets_mean":
        return DeepSetsModel(rng, "mean", **kw)
    if kind == "deepsets_max":
        return DeepSetsModel(rng, "max", **kw)
    if kind == "set_transformer":
        return SetTransformerModel(rng, **kw)
    raise ValidationError(f"unknown set model {kind!r}; choose from {MODEL_KINDS}")


def evaluate_mse(model: SetModel, batch: SetBatch, chunk: int = 500) -> float:
    sq = []
    for lo in range(0, len(batch), chunk):
        sub = batch.subset(np.arange(lo, min(lo + chunk, len(batch))))
        sq.append((model.predict(sub) - sub.target) ** 2)
    return float(np.concatenate(sq).mean())


def train_setmax_once(kind: str, spec: SetMaxSplitSpec, cfg: TrainConfig, seed: int,
                      model_kw: dict | None = None, init_scheme: str = "fan_in",
                      hooks: ModelHooks | None = None) -> dict:
    """One seeded run; returns a row with train and extrapolation test MSE.

    ``init_scheme="fan_in"`` redraws all layers with the torch ``Linear``
    default; with glorot a 1->1 projection can start so far on the wrong side
    of zero that RAdam at lr 1e-3 cannot cross it within 20 epochs.
    """
    train, test = generate_setmax_split(spec, make_rng(seed, "setmax", "data"))
    init_rng = make_rng(seed, "setmax", "init", kind)
    model = build_set_model(kind, init_rng, **(model_kw or {}))
    if init_scheme != "glorot":
        reinitialise(model, init_rng, init_scheme)
    hooks = hooks or ModelHooks()
    tag = f"setmax-{kind}-seed{seed}"
    hooks.built(model, tag)

    def loss_on(idx):
        b = train.subset(idx)
        return mse(model(b.values, b.mask), b.target)

    fit(model, len(train), loss_on, cfg, make_rng(seed, "setmax", "shuffle"))
    hooks.fitted(model, tag)
    return {
        "model": kind,
        "seed": seed,
        "train_mse": evaluate_mse(model, train),
        "test_mse": evaluate_mse(model, test),
    }


def train_and_eval_setmax(kind: str, spec: SetMaxSplitSpec | None = None,
                          cfg: TrainConfig | None = None, seeds: Sequence[int] = (0,),
                          model_kw: dict | None = None, init_scheme: str = "fan_in",
                          hooks: ModelHooks | None = None) -> ExperimentReport:
    spec = spec or SetMaxSplitSpec()
    cfg = cfg or TrainConfig()
    report = ExperimentReport("setmax", {"model": kind, "split": asdict(spec), "train": asdict(cfg),
                                         "seeds": list(seeds), "model_kw": dict(model_kw or {}),
                                         "init": init_scheme})
    t0 = time.perf_counter()
    for s in seeds:
        report.add(**train_setmax_once(kind, spec, cfg, s, model_kw, init_scheme, hooks))
    report.wall_clock = time.perf_counter() - t0
    return report


__all__ = [
    "ComparatorSetModel", "DeepSetsModel", "MODEL_KINDS", "SetBatch", "SetMaxSplitSpec",
    "SetTransformerModel", "build_set_model", "comparator_set_forward", "deepsets_forward",
    "evaluate_mse", "generate_setmax_split", "pack_sets", "settransformer_forward",
    "train_and_eval_setmax", "train_setmax_once",
]
