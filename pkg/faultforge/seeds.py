"""seeds.py

Splittable seed derivation.

A master seed is expanded into independent sub-seeds keyed by a path of labels,
e.g. ``derive_seed(42, "rf|cfs|ga|pooled", "fold", 3, "model")``. Each label is
hashed (sha256, first 8 bytes) into a spawn-key entry of a numpy SeedSequence,
so a sub-seed depends only on its own path: adding cells or folds never shifts
the seeds of existing ones.
"""

from __future__ import annotations

import hashlib
from typing import Union

import numpy as np

Label = Union[str, int]


def _label_key(label: Label) -> int:
    if isinstance(label, (int, np.integer)) and not isinstance(label, bool):
        return int(label) & 0xFFFFFFFF
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def derive_seed(master: int, *path: Label) -> int:
    """Return a 63-bit sub-seed for ``path`` under ``master``."""
    ss = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(_label_key(p) for p in path))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int((int(hi) << 32 | int(lo)) & 0x7FFFFFFFFFFFFFFF)


def rng_for(master: int, *path: Label) -> np.random.Generator:
    return np.random.default_rng(derive_seed(master, *path))
