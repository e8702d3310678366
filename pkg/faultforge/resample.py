"""resample.py

ADASYN oversampling of the minority class.

  G      = round((n_majority - n_minority) * balance_target)
  r_i    = (#majority among the K nearest neighbours of minority point i) / K
  g_i    = largest-remainder apportionment of G by r_i / sum(r)
  s      = x_i + lam * (x_z - x_i),  x_z one of i's K nearest minority
           neighbours chosen uniformly, lam ~ U(0, 1)

Synthetic rows are appended after the original rows, which are returned
unchanged as a prefix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.spatial import cKDTree

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdasynConfig:
    k_neighbors: int = 5
    balance_target: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k_neighbors < 1:
            raise ValueError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if not 0.0 < self.balance_target <= 1.0:
            raise ValueError(f"balance_target must be in (0, 1], got {self.balance_target}")


@dataclass(frozen=True, eq=False)
class ResampleResult:
    X: np.ndarray
    y: np.ndarray
    n_synthetic: int
    minority_label: int = -1
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def __iter__(self):
        # (X, y) unpacking
        yield self.X
        yield self.y


def largest_remainder(total: int, weights: np.ndarray) -> np.ndarray:
    """Apportion ``total`` integer units by ``weights`` (sum 1); ties go to lower index."""
    quotas = total * np.asarray(weights, dtype=float)
    base = np.floor(quotas).astype(np.int64)
    short = int(total - base.sum())
    if short > 0:
        remainders = quotas - base
        order = np.lexsort((np.arange(len(remainders)), -remainders))
        base[order[:short]] += 1
    return base


def adasyn(X: np.ndarray, y: np.ndarray, cfg: AdasynConfig) -> ResampleResult:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    labels, counts = np.unique(y, return_counts=True)
    if labels.size < 2:
        msg = "single-class input; ADASYN skipped"
        _logger.warning(msg)
        return ResampleResult(X.copy(), y.copy(), 0, warnings=(msg,))

    minority = int(labels[np.argmin(counts)])
    n_min, n_maj = int(counts.min()), int(counts.max())
    G = int(round((n_maj - n_min) * cfg.balance_target))
    if G == 0:
        return ResampleResult(X.copy(), y.copy(), 0, minority_label=minority)

    min_idx = np.flatnonzero(y == minority)
    X_min = X[min_idx]
    warnings: list = []

    if n_min == 1:
        msg = "single minority point; duplicating it"
        _logger.warning(msg)
        synth = np.repeat(X_min, G, axis=0)
        warnings.append(msg)
    else:
        rng = np.random.default_rng(cfg.seed)
        K = min(cfg.k_neighbors, n_min - 1)

        # K nearest over the whole set, self excluded
        _, nn_all = cKDTree(X).query(X_min, k=K + 1)
        nn_all = np.asarray(nn_all).reshape(n_min, K + 1)
        delta = np.array(
            [np.sum(y[[j for j in row if j != i][:K]] != minority) for i, row in zip(min_idx, nn_all)],
            dtype=float,
        )
        r = delta / K
        if r.sum() == 0:
            msg = "no minority point has majority neighbours; using uniform weights"
            _logger.info(msg)
            warnings.append(msg)
            r = np.ones(n_min)
        g = largest_remainder(G, r / r.sum())

        _, nn_min = cKDTree(X_min).query(X_min, k=K + 1)
        nn_min = np.asarray(nn_min).reshape(n_min, K + 1)
        neighbours = [[j for j in row if j != i][:K] for i, row in enumerate(nn_min)]

        synth = np.empty((G, X.shape[1]), dtype=float)
        pos = 0
        for i in range(n_min):
            for _ in range(int(g[i])):
                z = neighbours[i][int(rng.integers(len(neighbours[i])))]
                lam = rng.random()
                synth[pos] = X_min[i] + lam * (X_min[z] - X_min[i])
                pos += 1

    X_out = np.vstack([X, synth])
    y_out = np.concatenate([y, np.full(G, minority, dtype=np.int64)])
    _logger.debug("ADASYN: %d synthetic minority (label %d) rows", G, minority)
    return ResampleResult(X_out, y_out, G, minority_label=minority, warnings=tuple(warnings))
