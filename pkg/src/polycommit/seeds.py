"""Deterministic seed derivation.

A master seed is split into labeled substreams (role, session, trial, ...)
by hashing the label path with a counter-style construction.  Every
randomized procedure in the package takes its own ``random.Random`` so
audits are reproducible and trials can run independently.
"""

from __future__ import annotations

import hashlib
import random

_SEED_BITS = 128


def derive_seed(master: int, *labels: object) -> int:
    """Derive a child seed from a master seed and a label path."""
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for label in labels:
        h.update(b"/")
        h.update(repr(label).encode())
    return int.from_bytes(h.digest()[: _SEED_BITS // 8], "little")


def substream(master: int, *labels: object) -> random.Random:
    """A fresh RNG for the given label path under ``master``."""
    return random.Random(derive_seed(master, *labels))
