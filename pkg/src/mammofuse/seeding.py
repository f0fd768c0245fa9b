"""Deterministic fan-out of one master seed to every stochastic consumer.

Child streams are keyed by a path of labels (fold year, learner kind, ...)
so that adding or reordering consumers never shifts another stream.
"""
from __future__ import annotations

import zlib

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seedseq(seed: int, *path) -> np.random.SeedSequence:
    """Build a SeedSequence for the consumer identified by ``path``."""
    keys = [int(seed) & _MASK64]
    keys.extend(zlib.crc32(str(part).encode("utf-8")) for part in path)
    return np.random.SeedSequence(keys)


def derive_rng(seed: int, *path) -> np.random.Generator:
    """A fresh Generator for the consumer identified by ``path``."""
    return np.random.default_rng(derive_seedseq(seed, *path))


def derive_int(seed: int, *path) -> int:
    """A derived 64-bit sub-seed, for APIs that take a plain integer."""
    return int(derive_seedseq(seed, *path).generate_state(1, np.uint64)[0])
