"""Procedural Raven-style instances with row/column rules and an extrapolation split."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import GenerationError, ValidationError
from .rules import (ALLOWED, AXES, FULL_MASK, GROUP, LOGIC, Rule, check_rules, lines, meta_target, popcount)

DUMP_FORMAT = "lowdim-minirpm-instances"
DUMP_VERSION = 1
SPLITS = ("train", "test")
DELTAS = (-2, -1, 1, 2)
COUNT_RANGE = (1, 9)

_MASKS_BY_COUNT = {k: np.array([m for m in range(1, FULL_MASK + 1) if popcount(m) == k]) for k in range(1, 10)}


@dataclass(frozen=True)
class GridSpec:
    """Level grids of size and colour; train uses the lower half, test the upper half."""

    size_levels: int = 16
    colour_levels: int = 16

    def __post_init__(self):
        if min(self.size_levels, self.colour_levels) < 16:
            # a lone size/colour rule needs 8 distinct values per half for 8 distinct candidates
            raise ValidationError("size and colour grids need at least 16 levels")

    def levels(self, attr: str) -> int:
        return {"size": self.size_levels, "colour": self.colour_levels}[attr]

    def window(self, attr: str, split: str) -> tuple[int, int]:
        """Inclusive level range of ``attr`` in ``split``; count is never truncated."""
        if split not in SPLITS:
            raise ValidationError(f"split must be one of {SPLITS}, got {split!r}")
        if attr == "count":
            return COUNT_RANGE
        n = self.levels(attr)
        half = n // 2
        return (0, half - 1) if split == "train" else (half, n - 1)


@dataclass
class RpmInstance:
    context: np.ndarray  # [8, 3] panels in cells 0..7
    candidates: np.ndarray  # [8, 3]
    answer: int
    rules: tuple[Rule, ...]
    split: str

    @property
    def extrapolation(self) -> bool:
        return self.split == "test"

    def grid(self, k: int) -> np.ndarray:
        """All nine panels with candidate ``k`` in the last cell."""
        return np.concatenate([self.context, self.candidates[k:k + 1]], axis=0)

    def to_dict(self) -> dict:
        return {"context": self.context.tolist(), "candidates": self.candidates.tolist(), "answer": self.answer,
                "rules": [r.to_dict() for r in self.rules], "split": self.split}

    @classmethod
    def from_dict(cls, d: dict) -> "RpmInstance":
        return cls(np.array(d["context"], dtype=np.int64), np.array(d["candidates"], dtype=np.int64),
                   int(d["answer"]), tuple(Rule.from_dict(r) for r in d["rules"]), d["split"])


def _random_mask(rng, count: int | None = None) -> int:
    if count is None:
        return int(rng.integers(1, FULL_MASK + 1))
    return int(rng.choice(_MASKS_BY_COUNT[count]))


def sample_rules(rng: np.random.Generator, split: str = "train", max_rules: int = 2,
                 spec: GridSpec | None = None) -> tuple[Rule, ...]:
    """1..max_rules rules on distinct attribute groups, with parameters that fit the split window."""
    spec = spec or GridSpec()
    if not 1 <= max_rules <= 3:
        raise ValidationError("max_rules must be in 1..3")
    n = int(rng.integers(1, max_rules + 1))
    groups = rng.choice(["mask", "size", "colour"], size=n, replace=False)
    rules = []
    for g in groups:
        options = [(rel, attr) for rel, attrs in ALLOWED.items() for attr in attrs if GROUP[attr] == g]
        rel, attr = options[int(rng.integers(len(options)))]
        axis = AXES[int(rng.integers(2))]
        lo, hi = spec.window(attr, split) if attr != "position" else (0, 0)
        if rel == "progression":
            rules.append(Rule(rel, attr, axis, delta=int(rng.choice(DELTAS))))
        elif rel == "consistent_union":
            vals = rng.choice(np.arange(lo, hi + 1), size=3, replace=False)
            rules.append(Rule(rel, attr, axis, values=tuple(int(v) for v in vals)))
        else:
            rules.append(Rule(rel, attr, axis))
    return tuple(rules)


def _fill_line(rule: Rule, rng, lo: int, hi: int) -> list[int]:
    """Attribute values for one line that satisfy ``rule``."""
    if rule.relation == "progression":
        span = 2 * rule.delta
        starts = [s for s in range(lo, hi + 1) if lo <= s + span <= hi]
        s = int(rng.choice(starts))
        return [s, s + rule.delta, s + span]
    if rule.relation == "consistent_union":
        return [int(v) for v in rng.permutation(rule.values)]
    op = LOGIC[rule.relation]
    for _ in range(1000):
        a, b = _random_mask(rng), _random_mask(rng)
        c = int(op(a, b))
        if c != 0:
            return [a, b, c]
    raise GenerationError(f"could not fill a {rule.relation} line with non-empty masks")


def _set_attr(panel: np.ndarray, attr: str, value: int, rng) -> None:
    if attr == "count":
        panel[0] = _random_mask(rng, value)
    elif attr == "position":
        panel[0] = value
    elif attr == "size":
        panel[1] = value
    else:
        panel[2] = value


def _perturb(panel: np.ndarray, rule: Rule, split: str, spec: GridSpec, rng) -> np.ndarray:
    out = panel.copy()
    if rule.attr == "position":
        new = _random_mask(rng)
        while new == out[0]:
            new = _random_mask(rng)
        out[0] = new
        return out
    lo, hi = spec.window(rule.attr, split)
    cur = int(popcount(out[0])) if rule.attr == "count" else int(out[1 if rule.attr == "size" else 2])
    choices = [v for v in range(lo, hi + 1) if v != cur]
    _set_attr(out, rule.attr, int(rng.choice(choices)), rng)
    return out


def generate_rpm_instance(rules, split: str, rng: np.random.Generator, spec: GridSpec | None = None,
                          max_tries: int = 200) -> RpmInstance:
    """Context grid obeying ``rules`` plus 8 candidates of which exactly one completes it.

    Attributes not governed by a rule are drawn independently per panel
    (sizes and colours inside the split window).
    """
    spec = spec or GridSpec()
    rules = tuple(rules)
    if not rules:
        raise ValidationError("an instance needs at least one rule")
    if len({r.group for r in rules}) != len(rules):
        raise GenerationError("two rules act on the same attribute group")
    for _ in range(max_tries):
        grid = np.zeros((9, 3), dtype=np.int64)
        s_lo, s_hi = spec.window("size", split)
        c_lo, c_hi = spec.window("colour", split)
        grid[:, 0] = [_random_mask(rng) for _ in range(9)]
        grid[:, 1] = rng.integers(s_lo, s_hi + 1, size=9)
        grid[:, 2] = rng.integers(c_lo, c_hi + 1, size=9)
        for rule in rules:
            lo, hi = spec.window(rule.attr, split) if rule.attr != "position" else (0, 0)
            for line in lines(rule.axis):
                for cell, v in zip(line, _fill_line(rule, rng, lo, hi)):
                    _set_attr(grid[cell], rule.attr, v, rng)
        if not check_rules(rules, grid):
            continue
        answer_panel = grid[8]
        cands = [answer_panel]
        for _ in range(max_tries * 8):
            if len(cands) == 8:
                break
            d = _perturb(answer_panel, rules[int(rng.integers(len(rules)))], split, spec, rng)
            if any((d == c).all() for c in cands):
                continue
            if check_rules(rules, np.concatenate([grid[:8], d[None]], axis=0)):
                continue
            cands.append(d)
        if len(cands) < 8:
            continue
        order = rng.permutation(8)
        candidates = np.stack(cands)[order]
        answer = int(np.argmin(order))  # original index 0 went to this slot
        return RpmInstance(grid[:8].copy(), candidates, answer, rules, split)
    raise GenerationError(f"no valid instance for rules {rules} after {max_tries} tries")


def verify_instance(inst: RpmInstance) -> bool:
    """Exactly one candidate (the answer) satisfies every governing rule."""
    ok = [check_rules(inst.rules, inst.grid(k)) for k in range(8)]
    return ok[inst.answer] and sum(ok) == 1


@dataclass
class RpmBatch:
    context: np.ndarray  # [N, 8, 3]
    candidates: np.ndarray  # [N, 8, 3]
    answer: np.ndarray  # [N]
    meta: np.ndarray  # [N, META_SIZE]

    def __len__(self) -> int:
        return len(self.answer)

    def subset(self, idx) -> "RpmBatch":
        return RpmBatch(self.context[idx], self.candidates[idx], self.answer[idx], self.meta[idx])


def stack_instances(instances) -> RpmBatch:
    return RpmBatch(
        np.stack([i.context for i in instances]),
        np.stack([i.candidates for i in instances]),
        np.array([i.answer for i in instances], dtype=np.int64),
        np.stack([meta_target(i.rules) for i in instances]),
    )


def generate_dataset(n: int, split: str, rng: np.random.Generator, max_rules: int = 2,
                     spec: GridSpec | None = None) -> list[RpmInstance]:
    spec = spec or GridSpec()
    return [generate_rpm_instance(sample_rules(rng, split, max_rules, spec), split, rng, spec) for _ in range(n)]


def dump_instances(path: str | Path, instances, meta: dict | None = None) -> None:
    """One JSON header line, then one instance per line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(json.dumps({"format": DUMP_FORMAT, "version": DUMP_VERSION, "n": len(instances),
                             "panel_fields": ["mask", "size", "colour"], "meta": meta or {}}, sort_keys=True) + "\n")
        for inst in instances:
            fh.write(json.dumps(inst.to_dict(), sort_keys=True) + "\n")


def load_instances(path: str | Path) -> list[RpmInstance]:
    with open(path) as fh:
        header = json.loads(fh.readline())
        if header.get("format") != DUMP_FORMAT or header.get("version") != DUMP_VERSION:
            raise ValidationError(f"{path}: not a version-{DUMP_VERSION} instance dump")
        return [RpmInstance.from_dict(json.loads(line)) for line in fh if line.strip()]
