from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights ``[fan_out, fan_in]`` uniform in +-sqrt(6/(fan_in+fan_out)), zero bias."""
    if fan_in <= 0 or fan_out <= 0:
        raise ValidationError(f"fans must be positive, got {fan_in}, {fan_out}")
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
    return w, np.zeros(fan_out)


def init_params(rng: np.random.Generator, fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
    return glorot_uniform(rng, fan_in, fan_out)


def fan_in_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> tuple[np.ndarray, np.ndarray]:
    """Weights and bias uniform in +-1/sqrt(fan_in), the usual torch ``Linear`` default."""
    if fan_in <= 0 or fan_out <= 0:
        raise ValidationError(f"fans must be positive, got {fan_in}, {fan_out}")
    limit = 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
    return w, rng.uniform(-limit, limit, size=fan_out)


INIT_SCHEMES = {"glorot": glorot_uniform, "fan_in": fan_in_uniform}
