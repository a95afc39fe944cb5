"""Input validation helpers shared by the numerical modules."""

from __future__ import annotations

import numpy as np

from .errors import DomainError

#: Tolerance on row sums of stochastic matrices and probability vectors.
STOCHASTIC_ATOL = 1e-9

#: Slack allowed on individual probability entries before rejecting input.
ENTRY_ATOL = 1e-12


def as_probability_vector(v, name: str, atol: float = STOCHASTIC_ATOL) -> np.ndarray:
    """Validate and return a 1-D probability vector as float64."""
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be 1-dimensional, got shape {arr.shape}")
    _check_entries(arr, name)
    total = arr.sum()
    if abs(total - 1.0) > atol:
        raise DomainError(f"{name} must sum to 1 within {atol}, got {total!r}")
    return arr


def as_row_stochastic(m, name: str, atol: float = STOCHASTIC_ATOL) -> np.ndarray:
    """Validate and return a 2-D row-stochastic matrix as float64."""
    arr = np.asarray(m, dtype=float)
    if arr.ndim != 2:
        raise DomainError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    _check_entries(arr, name)
    sums = arr.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > atol)
    if bad.size:
        raise DomainError(
            f"{name} row {bad[0]} must sum to 1 within {atol}, got {sums[bad[0]]!r}"
        )
    return arr


def _check_entries(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    if arr.min(initial=0.0) < -ENTRY_ATOL or arr.max(initial=0.0) > 1.0 + ENTRY_ATOL:
        raise DomainError(f"{name} entries must lie in [0, 1]")


def as_observation_indices(obs, vocab_size: int) -> np.ndarray:
    """Validate a sequence of dense observation indices against a vocabulary size."""
    arr = np.asarray(obs, dtype=np.intp)
    if arr.ndim != 1:
        raise DomainError(f"observation sequence must be 1-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise DomainError("observation sequence must not be empty")
    if arr.min() < 0 or arr.max() >= vocab_size:
        raise DomainError(
            f"observation indices must lie in 0..{vocab_size - 1}, "
            f"got range [{arr.min()}, {arr.max()}]"
        )
    return arr


def as_rng(seed) -> np.random.Generator:
    """Coerce ``None``, an int seed, or a ``Generator`` into a ``Generator``."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
