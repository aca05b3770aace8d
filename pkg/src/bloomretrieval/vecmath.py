"""Dense vector primitives: L2 distance, cosine distance, normalization.

All functions accept anything array-like and compute in float64. Persisted
formats elsewhere store float32; the extra internal precision keeps distance
accumulation stable.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, ZeroVectorError


def as_vector(x) -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or Inf")
    return v


def _check_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatchError(
            f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}"
        )


def l2_distance(a, b) -> float:
    """Euclidean distance between two equal-dimension vectors."""
    a = as_vector(a)
    b = as_vector(b)
    _check_dims(a, b)
    return float(np.linalg.norm(a - b))


def l2_norm(a) -> float:
    return float(np.linalg.norm(as_vector(a)))


def l2_normalize(a) -> np.ndarray:
    """Scale to unit L2 norm, preserving direction."""
    a = as_vector(a)
    n = np.linalg.norm(a)
    if n == 0.0:
        raise ZeroVectorError("cannot normalize a zero vector")
    return a / n


def cosine_distance(a, b) -> float:
    """1 - cosine similarity, in [0, 2]. Zero for same-direction vectors."""
    a = as_vector(a)
    b = as_vector(b)
    _check_dims(a, b)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ZeroVectorError("cosine distance is undefined for zero vectors")
    return 1.0 - float(np.dot(a, b)) / (na * nb)


def unit_cosine_distance(qn: np.ndarray, rn: np.ndarray) -> float:
    """Cosine distance between two pre-normalized vectors.

    Both retrieval paths (staged and brute force) go through this one
    function so their distances agree bit-for-bit.
    """
    return 1.0 - float(np.dot(qn, rn))
