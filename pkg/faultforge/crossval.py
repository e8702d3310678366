"""crossval.py

Deterministic stratified k-fold partitioning.

Within each class (ascending label order) the row indices are shuffled with the
plan's seed and dealt round-robin to the folds; the dealing cursor carries over
from one class to the next, so overall fold sizes differ by at most one and the
per-class counts per fold differ by at most one.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Tuple

import numpy as np

from .errors import StratificationError

DEFAULT_FOLDS = 10


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self) -> None:
        a = np.array(self.assignments, dtype=np.int64, copy=True)
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if a.size and (a.min() < 0 or a.max() >= self.k):
            raise ValueError("fold assignments must lie in [0, k)")
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    @property
    def n(self) -> int:
        return int(self.assignments.shape[0])

    def fold_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)

    def __iter__(self) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        for fold in range(self.k):
            yield fold_split(self, fold)


def stratified_folds(y: np.ndarray, k: int = DEFAULT_FOLDS, seed: int = 0) -> FoldPlan:
    y = np.asarray(y).reshape(-1)
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    labels, counts = np.unique(y, return_counts=True)
    for label, count in zip(labels, counts):
        if count < k:
            raise StratificationError(int(label), int(count), k)

    rng = np.random.default_rng(seed)
    assignments = np.empty(y.shape[0], dtype=np.int64)
    cursor = 0
    for label in labels:
        members = np.flatnonzero(y == label)
        members = members[rng.permutation(members.size)]
        assignments[members] = (cursor + np.arange(members.size)) % k
        cursor = (cursor + members.size) % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


def fold_split(plan: FoldPlan, fold: int) -> Tuple[np.ndarray, np.ndarray]:
    """(train indices, test indices) of ``fold``, both ascending."""
    if not 0 <= fold < plan.k:
        raise IndexError(f"fold {fold} out of range [0, {plan.k})")
    test = np.flatnonzero(plan.assignments == fold)
    train = np.flatnonzero(plan.assignments != fold)
    return train, test
