"""Deterministic named-stream randomness.

Every run owns a single 64-bit seed; independent generators for init,
dropout, shuffle (and anything else) are split off by name so adding a
consumer never perturbs the other streams.
"""
from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, *names: str) -> int:
    """Stable 64-bit child seed from a parent seed and a path of names."""
    h = hashlib.blake2s(digest_size=8)
    h.update(int(seed & _MASK64).to_bytes(8, "little"))
    for name in names:
        h.update(b"/")
        h.update(name.encode("utf-8"))
    return int.from_bytes(h.digest(), "little")


def named_stream(seed: int, name: str) -> np.random.Generator:
    """Generator for one named stream of a run (e.g. "init", "dropout")."""
    return np.random.default_rng(derive_seed(seed, name))
