"""Seeded weight initializers."""

from __future__ import annotations

import numpy as np


def glorot_uniform(
    shape: tuple[int, ...], rng: np.random.Generator, fan_in: int, fan_out: int
) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def orthogonal(size: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((size, size))
    q, r = np.linalg.qr(a)
    # Sign convention keeps the factorization unique and deterministic.
    return q * np.sign(np.diag(r))
