"""preprocess.py

KNN imputation and min-max scaling, fitted on training rows only.

Imputation
  For a row with feature j missing, the donors are the reference rows where j
  is observed. Distance to a donor is the Euclidean distance over the
  co-observed dimensions, rescaled by sqrt(p / #co-observed). The imputed
  value is the unweighted mean of feature j over the k nearest donors
  (ties: earlier reference row first).

Scaling
  x' = (x - min) / (max - min), clipped to [0, 1]; constant features map to 0.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import UnimputableFeatureError

_logger = logging.getLogger(__name__)

DEFAULT_IMPUTER_K = 5


# ----------------------------
# Imputation
# ----------------------------

@dataclass(frozen=True, eq=False)
class ImputerModel:
    k: int
    reference_rows: np.ndarray

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        ref = np.array(self.reference_rows, dtype=float, copy=True)
        ref.setflags(write=False)
        object.__setattr__(self, "reference_rows", ref)

    @property
    def n_features(self) -> int:
        return int(self.reference_rows.shape[1])


def fit_imputer(X_train: np.ndarray, k: int = DEFAULT_IMPUTER_K) -> ImputerModel:
    X = np.asarray(X_train, dtype=float)
    if X.ndim != 2:
        raise ValueError("X_train must be a 2-D matrix")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    observed = ~np.isnan(X)
    for j in range(X.shape[1]):
        if not observed[:, j].any():
            raise UnimputableFeatureError(j)
    return ImputerModel(k=k, reference_rows=X)


def _partial_distances(row: np.ndarray, ref: np.ndarray) -> np.ndarray:
    p = ref.shape[1]
    co = ~np.isnan(ref) & ~np.isnan(row)
    diff = np.where(co, ref - np.nan_to_num(row), 0.0)
    n_co = co.sum(axis=1)
    sq = (diff**2).sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        dist = np.sqrt(sq * p / n_co)
    dist[n_co == 0] = np.inf
    return dist


def apply_imputer(m: ImputerModel, X: np.ndarray) -> np.ndarray:
    X = np.array(X, dtype=float, copy=True)
    if X.ndim != 2 or X.shape[1] != m.n_features:
        raise ValueError(f"expected {m.n_features} columns, got {X.shape[-1]}")
    ref = m.reference_rows
    ref_observed = ~np.isnan(ref)
    rows = np.flatnonzero(np.isnan(X).any(axis=1))
    for i in rows:
        dist = _partial_distances(X[i], ref)
        for j in np.flatnonzero(np.isnan(X[i])):
            donors = np.flatnonzero(ref_observed[:, j])
            order = donors[np.argsort(dist[donors], kind="stable")]
            k = min(m.k, order.size)
            X[i, j] = ref[order[:k], j].mean()
    if rows.size:
        _logger.debug("imputed %d row(s) with k=%d", rows.size, m.k)
    return X


# ----------------------------
# Scaling
# ----------------------------

@dataclass(frozen=True, eq=False)
class ScalerModel:
    min: np.ndarray
    max: np.ndarray

    def __post_init__(self) -> None:
        lo = np.array(self.min, dtype=float, copy=True)
        hi = np.array(self.max, dtype=float, copy=True)
        if lo.shape != hi.shape:
            raise ValueError("min and max must have the same length")
        if (lo > hi).any():
            raise ValueError("scaler min must not exceed max")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)


def fit_scaler(X_train: np.ndarray) -> ScalerModel:
    X = np.asarray(X_train, dtype=float)
    if np.isnan(X).any():
        raise ValueError("fit_scaler needs a complete matrix; impute first")
    if X.shape[0] == 0:
        raise ValueError("fit_scaler needs at least one row")
    return ScalerModel(min=X.min(axis=0), max=X.max(axis=0))


def apply_scaler(s: ScalerModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != s.min.shape[0]:
        raise ValueError(f"expected {s.min.shape[0]} columns, got {X.shape[-1]}")
    span = s.max - s.min
    constant = span == 0
    scaled = (X - s.min) / np.where(constant, 1.0, span)
    scaled[:, constant] = 0.0
    return np.clip(scaled, 0.0, 1.0)
