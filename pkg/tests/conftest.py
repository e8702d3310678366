from __future__ import annotations

from pathlib import Path
from typing import Callable, Optional

import numpy as np
import pytest

from faultforge.corpus import DEFAULT_FEATURES


def write_promise_csv(
    path: Path,
    n: int,
    n_defective: int,
    *,
    seed: int = 0,
    project: Optional[str] = None,
    version: Optional[str] = None,
    signal: float = 6.0,
    missing: int = 0,
) -> Path:
    """Synthetic PROMISE-layout CSV; defective rows get larger wmc/cbo/rfc/loc."""
    stem_project, _, stem_version = path.stem.rpartition("-")
    project = project or stem_project or path.stem
    version = version if version is not None else stem_version
    rng = np.random.default_rng(seed)
    labels = np.zeros(n, dtype=int)
    labels[:n_defective] = 1
    rng.shuffle(labels)
    X = rng.gamma(2.0, 3.0, size=(n, len(DEFAULT_FEATURES)))
    for name in ("wmc", "cbo", "rfc", "loc"):
        X[:, DEFAULT_FEATURES.index(name)] += signal * labels * rng.uniform(0.5, 1.5, size=n)
    bugs = labels * rng.integers(1, 4, size=n)
    cells = [[f"{v:.4f}" for v in row] for row in X]
    for _ in range(missing):
        i, j = int(rng.integers(n)), int(rng.integers(len(DEFAULT_FEATURES)))
        cells[i][j] = "?"
    lines = [",".join(["name", "version", "name", *DEFAULT_FEATURES, "bug"])]
    for i in range(n):
        lines.append(",".join([project, version, f"org.example.C{i}", *cells[i], str(int(bugs[i]))]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def promise_csv(tmp_path: Path) -> Callable[..., Path]:
    def make(name: str, n: int, n_defective: int, **kwargs) -> Path:
        return write_promise_csv(tmp_path / name, n, n_defective, **kwargs)

    return make


def separable_problem(n: int = 60, p: int = 4, seed: int = 0, margin: float = 0.5):
    """Two Gaussian blobs in [0, 1]^p split by the first coordinate."""
    rng = np.random.default_rng(seed)
    y = np.zeros(n, dtype=int)
    y[: n // 2] = 1
    rng.shuffle(y)
    X = rng.uniform(0.0, 1.0, size=(n, p))
    X[:, 0] = np.where(y == 1, rng.uniform(0.5 + margin / 2, 1.0, n), rng.uniform(0.0, 0.5 - margin / 2, n))
    return X, y
