"""Input validation and random-state helpers shared across the package."""
from __future__ import annotations

import numbers

import numpy as np


def check_random_state(seed) -> np.random.Generator:
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    Accepts ``None`` (fresh entropy), an int, a ``SeedSequence`` or an
    existing ``Generator`` (returned as is).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    raise ValueError(f"{seed!r} cannot be used to seed a numpy Generator")


def seed_sequence(seed) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if isinstance(seed, np.random.Generator):
        return np.random.SeedSequence(int(seed.integers(2**63)))
    return np.random.SeedSequence(seed)


def spawn_seeds(seed, count: int) -> list[np.random.SeedSequence]:
    """Independent child seeds; child ``r`` depends only on ``(seed, r)``."""
    ss = seed_sequence(seed)
    return [np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (r,)) for r in range(count)]


def check_seed_set(seeds, n: int) -> np.ndarray:
    """Sorted, duplicate-free int array of vertex ids below ``n``."""
    arr = np.unique(np.asarray(list(seeds) if not isinstance(seeds, np.ndarray) else seeds, dtype=np.int64))
    if arr.size and (arr[0] < 0 or arr[-1] >= n):
        raise ValueError(f"seed set {arr.tolist()} has ids outside 0..{n - 1}")
    return arr


def check_probability(p, name="p", *, open_upper=False) -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0) or (open_upper and p == 1.0):
        raise ValueError(f"{name} must lie in [0, 1{')' if open_upper else ']'}, got {p}")
    return p


def check_positive_int(value, name) -> int:
    if not isinstance(value, numbers.Integral) or value < 1:
        raise ValueError(f"{name} must be a positive integer, got {value!r}")
    return int(value)
