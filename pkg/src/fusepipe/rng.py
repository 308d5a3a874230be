"""Deterministic seed derivation.

Every random decision in the package draws from a Generator whose seed is
derived from the master seed plus a path of string/int tokens describing
*what* the stream is for (e.g. ``derive_seed(seed, "cv", fold, "RandomForest",
family)``).  Because streams are keyed by content rather than by evaluation
order, parallel and serial runs consume identical randomness.
"""

import hashlib

import numpy as np


def derive_seed(master_seed: int, *tokens) -> int:
    """Map (master seed, token path) to a 64-bit stream seed via SHA-256.
    Seeds of any size (including already-derived ones) chain safely."""
    h = hashlib.sha256()
    h.update(str(int(master_seed)).encode("ascii"))
    for tok in tokens:
        h.update(b"\x1f")  # separator so ("ab","c") != ("a","bc")
        h.update(str(tok).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def generator(master_seed: int, *tokens) -> np.random.Generator:
    """A PCG64 generator seeded by :func:`derive_seed`."""
    return np.random.Generator(np.random.PCG64(derive_seed(master_seed, *tokens)))
