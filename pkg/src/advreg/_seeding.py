"""Deterministic RNG derivation.

Every random quantity in the package is drawn from a generator derived from
(root seed, *path), where path elements name the consumer (a stream label and
integer indices such as grid position or replicate number).  Two consumers
with different paths get independent streams; the same path always yields the
same stream, so results are reproducible bit-for-bit and independent of
execution order.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["derive_rng", "derive_seed", "derive_seed_sequence"]


def _as_entropy(key: int | str) -> int:
    if isinstance(key, str):
        return zlib.crc32(key.encode("utf-8"))
    if isinstance(key, (int, np.integer)):
        return int(key)
    raise TypeError(f"seed-path elements must be int or str, got {type(key)!r}")


def derive_seed_sequence(seed: int, *path: int | str) -> np.random.SeedSequence:
    return np.random.SeedSequence([_as_entropy(seed)] + [_as_entropy(k) for k in path])


def derive_rng(seed: int, *path: int | str) -> np.random.Generator:
    """Generator for the stream identified by (seed, *path)."""
    return np.random.default_rng(derive_seed_sequence(seed, *path))


def derive_seed(seed: int, *path: int | str) -> int:
    """Collapse (seed, *path) to one integer, for APIs that take a root seed."""
    return int(derive_seed_sequence(seed, *path).generate_state(1, np.uint64)[0])
