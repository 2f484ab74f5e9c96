"""Deterministic, collision-free random-stream derivation.

Streams are derived by hashing (seed, labels) into a numpy SeedSequence
spawn key and driving a counter-based Philox generator: string labels are
folded through SHA-256, integer labels are used directly.  Identical labels
give identical streams; distinct labels give statistically independent ones.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _label_key(label) -> int:
    if isinstance(label, (int, np.integer)):
        if label < 0:
            raise ValueError("integer labels must be non-negative")
        return int(label)
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def seed_stream(seed: int, *labels) -> np.random.Generator:
    """Independent generator for (seed, labels...)."""
    key = tuple(_label_key(l) for l in labels)
    ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))
