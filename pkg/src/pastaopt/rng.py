"""Deterministic random-stream derivation.

All randomness in this package flows through numpy Generators that are
derived from integer seeds via SeedSequence, so that every experiment is
reproducible from a single master seed and independent substreams can be
handed to independent consumers (replications, purposes) without any
stream ever being shared.
"""

from __future__ import annotations

import zlib

import numpy as np

__all__ = ["derive_rng", "derive_seed"]


def _tag_key(purpose: str) -> int:
    # crc32 is stable across processes and platforms, unlike hash().
    return zlib.crc32(purpose.encode("utf-8"))


def derive_rng(master_seed: int, rep: int = 0, purpose: str = "") -> np.random.Generator:
    """Return an independent Generator keyed by (master_seed, rep, purpose).

    Distinct (rep, purpose) pairs yield statistically independent streams;
    identical arguments always yield the identical stream.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(rep, _tag_key(purpose)))
    return np.random.default_rng(ss)


def derive_seed(master_seed: int, rep: int = 0, purpose: str = "") -> int:
    """Collapse (master_seed, rep, purpose) into a single derived integer seed."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(rep, _tag_key(purpose)))
    return int(ss.generate_state(2, dtype=np.uint32).view(np.uint64)[0])
