"""Deterministic seed derivation.

Every random draw in the package goes through :func:`rng_for`, which mixes
a root seed with string labels (subsystem name, query id, repeat index).
Work split across processes therefore sees the same streams as a serial run.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(root: int, *labels: object) -> int:
    h = hashlib.sha256(str(int(root)).encode("utf-8"))
    for label in labels:
        h.update(b"\x1f")
        h.update(str(label).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def rng_for(root: int, *labels: object) -> np.random.Generator:
    return np.random.default_rng(derive_seed(root, *labels))
