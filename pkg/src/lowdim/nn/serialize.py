"""Parameter files: one ``.npz`` archive per model.

Layout: every parameter is stored under its dotted name from
``Module.named_parameters``; the reserved entry ``__header__`` holds a
JSON string ``{"format": ..., "version": ..., "meta": {...}}``. Pruning
masks, when present, are stored as ``__mask__.<name>``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .layers import Module

PARAM_FORMAT = "lowdim-params"
PARAM_VERSION = 1
_HEADER = "__header__"
_MASK = "__mask__."


def save_params(path: str | Path, model: Module, meta: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {}
    for name, p in model.named_parameters():
        arrays[name] = p.data
        if p.mask is not None:
            arrays[_MASK + name] = p.mask.astype(np.uint8)
    header = {"format": PARAM_FORMAT, "version": PARAM_VERSION, "meta": meta or {}}
    arrays[_HEADER] = np.array(json.dumps(header, sort_keys=True))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)
    return path


def read_header(path: str | Path) -> dict:
    with np.load(path, allow_pickle=False) as z:
        if _HEADER not in z.files:
            raise ValidationError(f"{path}: missing parameter-file header")
        return json.loads(str(z[_HEADER]))


def load_params(path: str | Path, model: Module) -> dict:
    """Copy stored parameters into ``model`` in place; returns the header meta.

    Names and shapes must match exactly.
    """
    header = read_header(path)
    if header.get("format") != PARAM_FORMAT or header.get("version") != PARAM_VERSION:
        raise ValidationError(f"{path}: expected {PARAM_FORMAT} v{PARAM_VERSION}, got {header}")
    with np.load(path, allow_pickle=False) as z:
        stored = {k: z[k] for k in z.files if k != _HEADER}
    params = dict(model.named_parameters())
    names = {k for k in stored if not k.startswith(_MASK)}
    if names != set(params):
        missing, extra = sorted(set(params) - names), sorted(names - set(params))
        raise ValidationError(f"{path}: parameter names differ (missing {missing}, unexpected {extra})")
    for name, p in params.items():
        if stored[name].shape != p.data.shape:
            raise ValidationError(f"{path}: {name} has shape {stored[name].shape}, model has {p.data.shape}")
        p.data = stored[name].astype(p.data.dtype).copy()
        mask = stored.get(_MASK + name)
        p.mask = mask.astype(bool) if mask is not None else None
    return header.get("meta", {})
