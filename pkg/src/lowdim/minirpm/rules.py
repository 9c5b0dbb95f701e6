"""Relation rules over lines (rows or columns) of a 3x3 panel matrix.

A panel is an int triple ``(mask, size, colour)``: ``mask`` is a 9-bit
occupancy pattern over a 3x3 slot grid (never empty), ``count`` is its
popcount. Every rule is a pure predicate over the three panels of a line.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError

RELATIONS = ("progression", "and", "or", "xor", "consistent_union")
ATTRIBUTES = ("count", "position", "size", "colour")
AXES = ("rows", "columns")
LOGIC = {"and": np.bitwise_and, "or": np.bitwise_or, "xor": np.bitwise_xor}
# count and position both live in the mask, so they form one group
GROUP = {"count": "mask", "position": "mask", "size": "size", "colour": "colour"}
ALLOWED = {
    "progression": ("count", "size", "colour"),
    "consistent_union": ("count", "size", "colour"),
    "and": ("position",),
    "or": ("position",),
    "xor": ("position",),
}
MASK_BITS = 9
FULL_MASK = (1 << MASK_BITS) - 1
META_SIZE = len(RELATIONS) + len(ATTRIBUTES) + len(AXES)

# cell index r*3+c
ROW_LINES = ((0, 1, 2), (3, 4, 5), (6, 7, 8))
COL_LINES = ((0, 3, 6), (1, 4, 7), (2, 5, 8))


def popcount(mask) -> np.ndarray:
    m = np.asarray(mask, dtype=np.int64)
    return sum((m >> b) & 1 for b in range(MASK_BITS))


def lines(axis: str) -> tuple[tuple[int, int, int], ...]:
    if axis == "rows":
        return ROW_LINES
    if axis == "columns":
        return COL_LINES
    raise ValidationError(f"axis must be rows or columns, got {axis!r}")


@dataclass(frozen=True)
class Rule:
    relation: str
    attr: str
    axis: str = "rows"
    delta: int = 0  # progression step
    values: tuple[int, ...] = field(default_factory=tuple)  # consistent-union value set

    def __post_init__(self):
        if self.relation not in RELATIONS:
            raise ValidationError(f"unknown relation {self.relation!r}")
        if self.attr not in ALLOWED[self.relation]:
            raise ValidationError(f"{self.relation} cannot act on {self.attr}")
        if self.axis not in AXES:
            raise ValidationError(f"axis must be one of {AXES}")
        if self.relation == "progression" and self.delta == 0:
            raise ValidationError("progression needs a non-zero step")
        if self.relation == "consistent_union" and len(set(self.values)) != 3:
            raise ValidationError("consistent union needs three distinct values")

    @property
    def group(self) -> str:
        return GROUP[self.attr]

    def to_dict(self) -> dict:
        d = {"relation": self.relation, "attr": self.attr, "axis": self.axis}
        if self.relation == "progression":
            d["delta"] = self.delta
        if self.relation == "consistent_union":
            d["values"] = list(self.values)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Rule":
        return cls(d["relation"], d["attr"], d["axis"], int(d.get("delta", 0)), tuple(d.get("values", ())))


def attribute_value(panel, attr: str) -> int:
    mask, size, colour = (int(v) for v in panel)
    if attr == "count":
        return int(popcount(mask))
    if attr == "position":
        return mask
    if attr == "size":
        return size
    if attr == "colour":
        return colour
    raise ValidationError(f"unknown attribute {attr!r}")


def holds_on_line(rule: Rule, a, b, c) -> bool:
    """Does ``rule`` hold on the ordered panel triple ``(a, b, c)``?"""
    va, vb, vc = (attribute_value(p, rule.attr) for p in (a, b, c))
    if rule.relation == "progression":
        return vb - va == rule.delta and vc - vb == rule.delta
    if rule.relation == "consistent_union":
        return sorted((va, vb, vc)) == sorted(rule.values)
    return int(LOGIC[rule.relation](va, vb)) == vc


def holds(rule: Rule, grid) -> bool:
    """``grid`` holds 9 panels in row-major order; every line along the axis must satisfy the rule."""
    grid = np.asarray(grid)
    return all(holds_on_line(rule, *grid[list(line)]) for line in lines(rule.axis))


def check_rules(rules, grid) -> bool:
    return all(holds(r, grid) for r in rules)


def meta_target(rules) -> np.ndarray:
    """Multi-hot over relations, attributes and axes present in ``rules``."""
    out = np.zeros(META_SIZE)
    for r in rules:
        out[RELATIONS.index(r.relation)] = 1
        out[len(RELATIONS) + ATTRIBUTES.index(r.attr)] = 1
        out[len(RELATIONS) + len(ATTRIBUTES) + AXES.index(r.axis)] = 1
    return out


def compatible(rules) -> bool:
    """At most one rule per attribute group."""
    groups = [r.group for r in rules]
    return len(groups) == len(set(groups))
