"""feature_selection.py

Four selectors, each fitted on a (scaled) training partition and returning a
FeatureSubset:

  rfe   recursive elimination with an L2 logistic regression, one feature per round
  l1    embedded selection by an L1 logistic regression (|coef| > 1e-8 kept)
  mi    top-k by plug-in mutual information over equal-frequency bins (nats)
  cfs   greedy forward search on the correlation-based merit
          merit(S) = k * mean|r_cf| / sqrt(k + k(k-1) * mean|r_ff|)

plus ``none``, which keeps every feature.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import xlogy
from scipy.stats import rankdata

from .classifiers import LrParams, train_lr
from .errors import ConfigError, EmptySelectionError

_logger = logging.getLogger(__name__)

SELECTORS = ("none", "rfe", "l1", "mi", "cfs")
L1_ZERO = 1e-8


@dataclass(frozen=True)
class SelectorConfig:
    target_count: int = 10
    l1_strength: float = 1.0
    mi_bins: int = 10
    cfs_patience: int = 5
    rfe_strength: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.target_count < 1:
            raise ConfigError(f"target_count must be >= 1, got {self.target_count}")
        if not self.l1_strength > 0 or not self.rfe_strength > 0:
            raise ConfigError("l1_strength and rfe_strength must be > 0")
        if self.mi_bins < 1 or self.cfs_patience < 1:
            raise ConfigError("mi_bins and cfs_patience must be >= 1")


@dataclass(frozen=True, eq=False)
class FeatureSubset:
    indices: Tuple[int, ...]
    scores: Tuple[float, ...]
    method: str
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise EmptySelectionError(self.method, "a subset must keep at least one feature")
        if len(set(idx)) != len(idx) or min(idx) < 0:
            raise ValueError(f"invalid feature indices: {idx}")
        if len(self.scores) != len(idx):
            raise ValueError("one score per retained feature")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))

    def __len__(self) -> int:
        return len(self.indices)

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X)
        if max(self.indices) >= X.shape[1]:
            raise ValueError(f"subset refers to feature {max(self.indices)} but X has {X.shape[1]}")
        return X[:, list(self.indices)]

    def names(self, feature_names: Sequence[str]) -> List[str]:
        return [feature_names[i] for i in self.indices]


def _check_target(cfg: SelectorConfig, p: int) -> None:
    if cfg.target_count > p:
        raise ConfigError(f"target_count {cfg.target_count} exceeds the {p} available features")


# ----------------------------
# RFE
# ----------------------------

def select_rfe(X: np.ndarray, y: np.ndarray, cfg: SelectorConfig) -> FeatureSubset:
    X = np.asarray(X, dtype=float)
    p = X.shape[1]
    if p < 2:
        raise ValueError("RFE needs at least two features")
    _check_target(cfg, p)
    params = LrParams(C=cfg.rfe_strength, penalty="l2")
    remaining = list(range(p))
    while True:
        mags = np.abs(train_lr(X[:, remaining], y, params).beta)
        if len(remaining) <= cfg.target_count:
            break
        # tie -> drop the higher index
        lowest = np.flatnonzero(mags <= mags.min())
        dropped = remaining.pop(int(lowest[-1]))
        _logger.debug("RFE: dropped feature %d (|coef|=%.3g)", dropped, mags.min())
    return FeatureSubset(indices=tuple(remaining), scores=tuple(mags), method="rfe")


# ----------------------------
# L1
# ----------------------------

def select_l1(X: np.ndarray, y: np.ndarray, cfg: SelectorConfig) -> FeatureSubset:
    model = train_lr(np.asarray(X, dtype=float), y, LrParams(C=cfg.l1_strength, penalty="l1"))
    keep = np.flatnonzero(np.abs(model.beta) > L1_ZERO)
    if keep.size == 0:
        raise EmptySelectionError(
            "l1", f"every coefficient is zero at C={cfg.l1_strength:g}; use a larger C (--fs-c)"
        )
    return FeatureSubset(indices=tuple(keep), scores=tuple(model.beta[keep]), method="l1")


# ----------------------------
# Mutual information
# ----------------------------

def equal_frequency_bins(x: np.ndarray, bins: int) -> np.ndarray:
    """Rank-based bin ids in [0, bins); tied values share a bin.

    At most ``bins`` distinct values get one bin each. Otherwise a tie group is
    placed by its average rank, so a small group of equal values is never folded
    into the bin of the values below it.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    distinct, dense = np.unique(x, return_inverse=True)
    if distinct.size <= bins:
        return dense.reshape(-1).astype(np.int64)
    ranks = rankdata(x, method="average") - 0.5
    return np.minimum(np.floor(ranks * bins / n), bins - 1).astype(np.int64)


def mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """Plug-in MI (nats) of two discrete label vectors."""
    a = np.unique(np.asarray(a), return_inverse=True)[1].reshape(-1)
    b = np.unique(np.asarray(b), return_inverse=True)[1].reshape(-1)
    n = a.shape[0]
    if n == 0:
        return 0.0
    joint = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(joint, (a, b), 1)
    na = joint.sum(axis=1, keepdims=True)
    nb = joint.sum(axis=0, keepdims=True)
    # integer ratio n_ab * n / (n_a * n_b): exactly 1 under exact independence
    ratio = (joint * n) / (na * nb)
    return float(xlogy(joint, ratio).sum() / n)


def mi_scores(X: np.ndarray, y: np.ndarray, bins: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    b = max(1, min(bins, math.isqrt(n)))
    return np.array([mutual_information(equal_frequency_bins(X[:, j], b), y) for j in range(X.shape[1])])


def select_mi(X: np.ndarray, y: np.ndarray, cfg: SelectorConfig) -> FeatureSubset:
    X = np.asarray(X, dtype=float)
    _check_target(cfg, X.shape[1])
    scores = mi_scores(X, y, cfg.mi_bins)
    # descending MI, ties -> lower index
    order = np.lexsort((np.arange(scores.size), -scores))[: cfg.target_count]
    return FeatureSubset(indices=tuple(order), scores=tuple(scores[order]), method="mi")


# ----------------------------
# CFS
# ----------------------------

def _abs_corr(X: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """(|r_cf| per column, |r_ff| matrix); undefined correlations count as 0."""
    data = np.column_stack([X, np.asarray(y, dtype=float)])
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.corrcoef(data, rowvar=False)
    r = np.nan_to_num(np.abs(np.atleast_2d(r)), nan=0.0)
    p = X.shape[1]
    return r[:p, p], r[:p, :p]


def _merit(r_cf: np.ndarray, r_ff: np.ndarray, subset: Sequence[int]) -> float:
    k = len(subset)
    if k == 0:
        return 0.0
    s = list(subset)
    mean_cf = float(r_cf[s].mean())
    if k == 1:
        mean_ff = 0.0
    else:
        block = r_ff[np.ix_(s, s)]
        mean_ff = float((block.sum() - np.trace(block)) / (k * (k - 1)))
    return k * mean_cf / math.sqrt(k + k * (k - 1) * mean_ff)


def cfs_merit(X: np.ndarray, y: np.ndarray, subset: Sequence[int]) -> float:
    r_cf, r_ff = _abs_corr(np.asarray(X, dtype=float), y)
    return _merit(r_cf, r_ff, subset)


def select_cfs(X: np.ndarray, y: np.ndarray, cfg: SelectorConfig) -> FeatureSubset:
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 3:
        raise ValueError("CFS needs at least three rows")
    warnings: List[str] = []
    constant = np.flatnonzero(np.ptp(X, axis=0) == 0)
    if constant.size:
        msg = f"constant feature(s) {constant.tolist()} excluded from CFS"
        _logger.warning(msg)
        warnings.append(msg)
    candidates = [j for j in range(X.shape[1]) if j not in set(constant.tolist())]
    if not candidates:
        raise EmptySelectionError("cfs", "every feature is constant on this training partition")

    r_cf, r_ff = _abs_corr(X, y)
    chosen: List[int] = []
    best_merit, best_len, stale = -np.inf, 0, 0
    pool = list(candidates)
    while pool and stale < cfg.cfs_patience:
        merits = [_merit(r_cf, r_ff, chosen + [j]) for j in pool]
        pick = int(np.argmax(merits))  # first max -> lower index
        chosen.append(pool.pop(pick))
        if merits[pick] > best_merit + 1e-12:
            best_merit, best_len, stale = merits[pick], len(chosen), 0
        else:
            stale += 1
    kept = chosen[:best_len]
    _logger.debug("CFS: kept %s (merit %.4f)", kept, best_merit)
    return FeatureSubset(
        indices=tuple(kept), scores=tuple(r_cf[kept]), method="cfs", warnings=tuple(warnings)
    )


# ----------------------------
# Dispatch
# ----------------------------

def select_none(X: np.ndarray, y: np.ndarray, cfg: SelectorConfig) -> FeatureSubset:
    p = np.asarray(X).shape[1]
    return FeatureSubset(indices=tuple(range(p)), scores=(1.0,) * p, method="none")


_SELECTORS: Dict[str, Callable[[np.ndarray, np.ndarray, SelectorConfig], FeatureSubset]] = {
    "none": select_none,
    "rfe": select_rfe,
    "l1": select_l1,
    "mi": select_mi,
    "cfs": select_cfs,
}


def select(method: str, X: np.ndarray, y: np.ndarray, cfg: SelectorConfig) -> FeatureSubset:
    try:
        fn = _SELECTORS[method.lower()]
    except KeyError:
        raise ValueError(f"unknown selector {method!r}; expected one of {', '.join(SELECTORS)}") from None
    return fn(X, y, cfg)
