"""classifiers.py

Random forest, logistic regression and a soft-margin SVM, written against numpy,
with one train/predict contract:

    model = train("rf", X, y, {"n_estimators": 100, ...}, seed=7)
    labels = predict(model, X_test)

Labels are 0 (non-faulty) / 1 (faulty) everywhere; the SVM maps them to -1/+1
internally.

Models
  ForestModel  bootstrap trees, sqrt(p) candidate features per split, Gini,
               majority vote (ties -> 0)
  LinearModel  P(Y=1|X) = 1 / (1 + exp(-(b0 + X.b))); L2 by gradient descent with
               backtracking, L1 by proximal gradient (soft threshold); the
               intercept is never penalised
  SvmModel     dual solved by SMO on the maximal violating pair; linear / rbf

Persistence: save_model / load_model write a versioned JSON document
  {"format": "faultforge-model", "version": 1, "kind": "rf"|"lr"|"svm", ...}
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
from scipy.special import expit

from .errors import ConvergenceError

_logger = logging.getLogger(__name__)

MODEL_KINDS = ("rf", "lr", "svm")
MODEL_FORMAT = "faultforge-model"
MODEL_FORMAT_VERSION = 1


def _as_labels(y: np.ndarray) -> np.ndarray:
    y = np.asarray(y).reshape(-1).astype(np.int64)
    if y.size and not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    return y


def _check_both_classes(y: np.ndarray, who: str) -> None:
    if y.size < 2 or np.unique(y).size < 2:
        raise ValueError(f"{who} needs at least two rows covering both classes")


# =============================================================================
# Random forest
# =============================================================================

@dataclass(frozen=True)
class RfParams:
    n_estimators: int = 100
    max_depth: Optional[int] = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: Union[str, int] = "sqrt"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None (unlimited)")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.min_samples_leaf > self.min_samples_split:
            raise ValueError(
                f"min_samples_leaf ({self.min_samples_leaf}) must not exceed "
                f"min_samples_split ({self.min_samples_split})"
            )
        if not (self.max_features == "sqrt" or (isinstance(self.max_features, int) and self.max_features >= 1)):
            raise ValueError("max_features must be 'sqrt' or a positive integer")

    def features_per_split(self, p: int) -> int:
        if self.max_features == "sqrt":
            return max(1, math.ceil(math.sqrt(p)))
        return min(int(self.max_features), p)


@dataclass(frozen=True, eq=False)
class DecisionTree:
    """Flat binary tree; ``feature == -1`` marks a leaf. Left branch: x <= threshold."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    counts: np.ndarray  # (n_nodes, 2) training class counts
    n_oob: int = 0

    @property
    def n_nodes(self) -> int:
        return int(self.feature.shape[0])

    def node_class(self) -> np.ndarray:
        # ties -> 0
        return (self.counts[:, 1] > self.counts[:, 0]).astype(np.int64)

    def apply(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            f = self.feature[node]
            active = np.flatnonzero(f >= 0)
            if active.size == 0:
                return node
            cur = node[active]
            go_left = X[active, f[active]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.node_class()[self.apply(np.asarray(X, dtype=float))]

    def leaves(self) -> np.ndarray:
        return np.flatnonzero(self.feature < 0)


@dataclass(frozen=True, eq=False)
class ForestModel:
    trees: Tuple[DecisionTree, ...]
    n_features: int
    feature_importances: np.ndarray
    params: RfParams = field(default_factory=RfParams)

    kind = "rf"


def gini(counts: np.ndarray) -> float:
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return float(1.0 - np.sum(p**2))


def _best_split(
    X: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int
) -> Optional[Tuple[int, float, float]]:
    """Best (feature, threshold, weighted gini) over ``features``; None if no valid split."""
    n = y.shape[0]
    total_pos = float(y.sum())
    left_n = np.arange(1, n, dtype=float)
    right_n = n - left_n
    size_ok = (left_n >= min_leaf) & (right_n >= min_leaf)
    best: Optional[Tuple[int, float, float]] = None
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        valid = size_ok & (xs[1:] > xs[:-1])
        if not valid.any():
            continue
        left_pos = np.cumsum(y[order])[:-1].astype(float)
        right_pos = total_pos - left_pos
        g_left = 1.0 - (left_pos / left_n) ** 2 - ((left_n - left_pos) / left_n) ** 2
        g_right = 1.0 - (right_pos / right_n) ** 2 - ((right_n - right_pos) / right_n) ** 2
        weighted = np.where(valid, (left_n * g_left + right_n * g_right) / n, np.inf)
        pos = int(np.argmin(weighted))
        if best is None or weighted[pos] < best[2] - 1e-12:
            t = 0.5 * (xs[pos] + xs[pos + 1])
            if t >= xs[pos + 1]:
                t = xs[pos]
            best = (int(f), float(t), float(weighted[pos]))
    return best


def _grow_tree(
    X: np.ndarray, y: np.ndarray, params: RfParams, rng: np.random.Generator
) -> Tuple[DecisionTree, np.ndarray]:
    n, p = X.shape
    boot = rng.integers(0, n, size=n)
    n_oob = int(n - np.unique(boot).size)
    m = params.features_per_split(p)

    feature: List[int] = []
    threshold: List[float] = []
    left: List[int] = []
    right: List[int] = []
    counts: List[np.ndarray] = []
    importance = np.zeros(p)

    def new_node(idx: np.ndarray) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.bincount(y[idx], minlength=2))
        return len(feature) - 1

    stack = [(new_node(boot), boot, 0)]
    while stack:
        node, idx, depth = stack.pop()
        c = counts[node]
        if (
            (params.max_depth is not None and depth >= params.max_depth)
            or c.min() == 0
            or idx.size < params.min_samples_split
        ):
            continue
        candidates = rng.choice(p, size=m, replace=False)
        split = _best_split(X[idx], y[idx], candidates, params.min_samples_leaf)
        if split is None:
            continue
        f, t, weighted = split
        importance[f] += idx.size / n * (gini(c) - weighted)
        mask = X[idx, f] <= t
        li, ri = idx[mask], idx[~mask]
        feature[node], threshold[node] = f, t
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    tree = DecisionTree(
        feature=np.array(feature, dtype=np.int64),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        counts=np.array(counts, dtype=np.int64).reshape(-1, 2),
        n_oob=n_oob,
    )
    return tree, importance


def train_rf(X: np.ndarray, y: np.ndarray, p: RfParams) -> ForestModel:
    X = np.asarray(X, dtype=float)
    y = _as_labels(y)
    _check_both_classes(y, "train_rf")
    # one child seed per tree: tree i is the same for any n_estimators > i
    children = np.random.SeedSequence(p.seed).spawn(p.n_estimators)
    trees = []
    importances = np.zeros(X.shape[1])
    for child in children:
        tree, imp = _grow_tree(X, y, p, np.random.default_rng(child))
        trees.append(tree)
        if imp.sum() > 0:
            importances += imp / imp.sum()
    if importances.sum() > 0:
        importances /= importances.sum()
    return ForestModel(trees=tuple(trees), n_features=X.shape[1], feature_importances=importances, params=p)


def forest_votes(m: ForestModel, X: np.ndarray) -> np.ndarray:
    """Number of trees voting 1, per row."""
    X = np.asarray(X, dtype=float)
    if X.shape[1] != m.n_features:
        raise ValueError(f"expected {m.n_features} features, got {X.shape[1]}")
    votes = np.zeros(X.shape[0], dtype=np.int64)
    for tree in m.trees:
        votes += tree.predict(X)
    return votes


def predict_rf(m: ForestModel, X: np.ndarray) -> np.ndarray:
    votes = forest_votes(m, X)
    # exact tie -> 0
    return (2 * votes > len(m.trees)).astype(np.int64)


# =============================================================================
# Logistic regression
# =============================================================================

PENALTIES = ("l1", "l2")


@dataclass(frozen=True)
class LrParams:
    C: float = 1.0
    penalty: str = "l2"
    tol: float = 1e-6
    max_iter: int = 5000

    def __post_init__(self) -> None:
        object.__setattr__(self, "penalty", str(self.penalty).lower())
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if self.penalty not in PENALTIES:
            raise ValueError(f"penalty must be one of {PENALTIES}, got {self.penalty!r}")
        if self.tol <= 0 or self.max_iter < 1:
            raise ValueError("tol must be > 0 and max_iter >= 1")


@dataclass(frozen=True, eq=False)
class LinearModel:
    beta0: float
    beta: np.ndarray
    iterations: int = 0
    objective: float = float("nan")

    kind = "lr"

    @property
    def n_features(self) -> int:
        return int(self.beta.shape[0])


def logistic(z: np.ndarray | float) -> np.ndarray | float:
    return expit(z)


def _nll(beta0: float, beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    z = beta0 + X @ beta
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def _nll_grad(beta0: float, beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> Tuple[float, np.ndarray]:
    r = expit(beta0 + X @ beta) - y
    return float(r.mean()), X.T @ r / X.shape[0]


def lr_objective(beta0: float, beta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float, penalty: str = "l2") -> float:
    """Mean negative log-likelihood plus the (1/C)-weighted penalty."""
    beta = np.asarray(beta, dtype=float)
    if penalty == "l1":
        return _nll(beta0, beta, X, y) + np.abs(beta).sum() / C
    return _nll(beta0, beta, X, y) + 0.5 * float(beta @ beta) / C


def lr_gradient(beta0: float, beta: np.ndarray, X: np.ndarray, y: np.ndarray, C: float) -> Tuple[float, np.ndarray]:
    """Gradient of the L2 objective w.r.t. (beta0, beta)."""
    g0, g = _nll_grad(beta0, np.asarray(beta, dtype=float), X, y)
    return g0, g + np.asarray(beta, dtype=float) / C


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def train_lr(X: np.ndarray, y: np.ndarray, p: LrParams) -> LinearModel:
    X = np.asarray(X, dtype=float)
    y = _as_labels(y).astype(float)
    n, d = X.shape
    if n == 0:
        raise ValueError("train_lr needs at least one row")
    beta0, beta = 0.0, np.zeros(d)
    step = 1.0

    if p.penalty == "l2":
        obj = lr_objective(beta0, beta, X, y, p.C)
        for it in range(1, p.max_iter + 1):
            g0, g = lr_gradient(beta0, beta, X, y, p.C)
            gnorm2 = g0 * g0 + float(g @ g)
            while True:
                nb0, nb = beta0 - step * g0, beta - step * g
                new_obj = lr_objective(nb0, nb, X, y, p.C)
                if new_obj <= obj - 0.5 * step * gnorm2 or step < 1e-20:
                    break
                step *= 0.5
            decrease = obj - new_obj
            if decrease >= 0:
                beta0, beta, obj = nb0, nb, new_obj
            if decrease < p.tol:
                return LinearModel(beta0=beta0, beta=beta, iterations=it, objective=obj)
            step *= 2.0
    else:
        smooth = _nll(beta0, beta, X, y)
        obj = smooth + np.abs(beta).sum() / p.C
        for it in range(1, p.max_iter + 1):
            g0, g = _nll_grad(beta0, beta, X, y)
            while True:
                nb0 = beta0 - step * g0
                nb = soft_threshold(beta - step * g, step / p.C)
                d0, dv = nb0 - beta0, nb - beta
                new_smooth = _nll(nb0, nb, X, y)
                bound = smooth + g0 * d0 + float(g @ dv) + (d0 * d0 + float(dv @ dv)) / (2.0 * step)
                if new_smooth <= bound + 1e-15 or step < 1e-20:
                    break
                step *= 0.5
            new_obj = new_smooth + np.abs(nb).sum() / p.C
            decrease = obj - new_obj
            if decrease >= 0:
                beta0, beta, smooth, obj = nb0, nb, new_smooth, new_obj
            if decrease < p.tol:
                return LinearModel(beta0=beta0, beta=beta, iterations=it, objective=obj)
            step *= 2.0

    raise ConvergenceError(
        f"logistic regression ({p.penalty}) did not converge", iterations=p.max_iter, objective=obj
    )


def predict_proba_lr(m: LinearModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != m.n_features:
        raise ValueError(f"expected {m.n_features} features, got {X.shape[1]}")
    return expit(m.beta0 + X @ m.beta)


def predict_lr(m: LinearModel, X: np.ndarray, threshold: float = 0.5) -> np.ndarray:
    return (predict_proba_lr(m, X) >= threshold).astype(np.int64)


# =============================================================================
# Support vector machine
# =============================================================================

KERNELS = ("linear", "rbf")
TAU = 1e-12
MIN_SMO_ITER = 1_000_000


@dataclass(frozen=True)
class SvmParams:
    C: float = 1.0
    kernel: str = "rbf"
    gamma: Union[str, float] = "scale"
    tol: float = 1e-3
    max_passes: int = 10
    max_iter: Optional[int] = None
    cache_rows: int = 1024

    def __post_init__(self) -> None:
        if not self.C > 0:
            raise ValueError(f"C must be > 0, got {self.C}")
        if self.kernel not in KERNELS:
            raise ValueError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if not (self.gamma == "scale" or (isinstance(self.gamma, (int, float)) and self.gamma > 0)):
            raise ValueError(f"gamma must be 'scale' or a positive number, got {self.gamma!r}")
        if self.tol <= 0 or self.max_passes < 1 or (self.max_iter is not None and self.max_iter < 1):
            raise ValueError("tol must be > 0, max_passes and max_iter >= 1")

    def iteration_cap(self, n: int) -> int:
        """Pair-update cap; unset means max(1 000 000, 100 n)."""
        return int(self.max_iter) if self.max_iter is not None else max(MIN_SMO_ITER, 100 * n)

    def resolve_gamma(self, X: np.ndarray) -> float:
        if self.gamma != "scale":
            return float(self.gamma)
        var = float(np.var(X)) if X.size else 0.0
        return 1.0 / (X.shape[1] * var) if var > 0 else 1.0


def kernel_matrix(kernel: str, gamma: float, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    if kernel == "linear":
        return A @ B.T
    sq = (A**2).sum(axis=1)[:, None] + (B**2).sum(axis=1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass(frozen=True, eq=False)
class SvmModel:
    support_vectors: np.ndarray
    alphas: np.ndarray
    sv_labels: np.ndarray  # -1 / +1
    b: float
    kernel: str
    gamma: float
    C: float
    support_indices: np.ndarray = field(default=None)  # type: ignore[assignment]
    iterations: int = 0

    kind = "svm"

    def __post_init__(self) -> None:
        sv = np.asarray(self.support_vectors, dtype=float)
        a = np.asarray(self.alphas, dtype=float).reshape(-1)
        if sv.ndim != 2 or sv.shape[0] == 0:
            raise ValueError("an SVM model needs at least one support vector")
        if a.shape[0] != sv.shape[0] or np.asarray(self.sv_labels).shape[0] != sv.shape[0]:
            raise ValueError("alphas / labels must match the support vectors")
        if (a < 0).any() or (a > self.C * (1 + 1e-9)).any():
            raise ValueError("dual weights must satisfy 0 <= alpha <= C")
        if self.support_indices is None:
            object.__setattr__(self, "support_indices", np.arange(sv.shape[0]))

    @property
    def n_features(self) -> int:
        return int(self.support_vectors.shape[1])

    @property
    def w(self) -> np.ndarray:
        """Primal weights; meaningful for the linear kernel only."""
        return (self.alphas * self.sv_labels) @ self.support_vectors


def _svm_margins(G: np.ndarray, y: np.ndarray, alpha: np.ndarray, C: float) -> Tuple[float, np.ndarray]:
    """(rho, y_t f(x_t) - 1 per training row) from the dual gradient."""
    yG = y * G
    at_upper = alpha >= C
    at_lower = alpha <= 0
    free = ~at_upper & ~at_lower
    if free.any():
        rho = float(yG[free].mean())
    else:
        ub_mask = (at_upper & (y < 0)) | (at_lower & (y > 0))
        lb_mask = (at_upper & (y > 0)) | (at_lower & (y < 0))
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2) if np.isfinite(ub) and np.isfinite(lb) else float(ub if np.isfinite(ub) else lb)
    return rho, G - y * rho


def _kkt_violations(margin: np.ndarray, alpha: np.ndarray, C: float, tol: float) -> int:
    at_lower = alpha <= 0
    at_upper = alpha >= C
    free = ~at_lower & ~at_upper
    bad = (at_lower & (margin < -tol)) | (at_upper & (margin > tol)) | (free & (np.abs(margin) > tol))
    return int(bad.sum())


def train_svm(X: np.ndarray, y: np.ndarray, p: SvmParams) -> SvmModel:
    X = np.asarray(X, dtype=float)
    labels = _as_labels(y)
    _check_both_classes(labels, "train_svm")
    ys = np.where(labels == 1, 1.0, -1.0)
    n = X.shape[0]
    C = float(p.C)
    gamma = p.resolve_gamma(X)

    @lru_cache(maxsize=p.cache_rows)
    def k_row(t: int) -> np.ndarray:
        return kernel_matrix(p.kernel, gamma, X[t : t + 1], X)[0]

    diag = np.ones(n) if p.kernel == "rbf" else np.einsum("ij,ij->i", X, X)
    alpha = np.zeros(n)
    G = -np.ones(n)

    max_iter = p.iteration_cap(n)
    best_gap = np.inf
    sweep_gap = np.inf
    stale_sweeps = 0
    it = 0
    while True:
        v = -ys * G
        up = ((ys > 0) & (alpha < C)) | ((ys < 0) & (alpha > 0))
        low = ((ys > 0) & (alpha > 0)) | ((ys < 0) & (alpha < C))
        if not up.any() or not low.any():
            break
        i = int(np.flatnonzero(up)[np.argmax(v[up])])
        j = int(np.flatnonzero(low)[np.argmin(v[low])])
        gap = float(v[i] - v[j])
        if gap <= p.tol:
            break
        sweep_gap = min(sweep_gap, gap)
        if it >= max_iter:
            _, margin = _svm_margins(G, ys, alpha, C)
            raise ConvergenceError(
                "SMO hit the iteration cap",
                iterations=it,
                violations=_kkt_violations(margin, alpha, C, p.tol),
            )
        it += 1

        Ki, Kj = k_row(i), k_row(j)
        Qi, Qj = ys[i] * ys * Ki, ys[j] * ys * Kj
        ai_old, aj_old = alpha[i], alpha[j]
        if ys[i] != ys[j]:
            quad = diag[i] + diag[j] + 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (-G[i] - G[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j], alpha[i] = 0.0, diff
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, C - diff
            elif alpha[j] > C:
                alpha[j], alpha[i] = C, C + diff
        else:
            quad = diag[i] + diag[j] - 2.0 * Qi[j]
            quad = quad if quad > 0 else TAU
            delta = (G[i] - G[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i], alpha[j] = C, total - C
            elif alpha[j] < 0:
                alpha[j], alpha[i] = 0.0, total
            if total > C:
                if alpha[j] > C:
                    alpha[j], alpha[i] = C, total - C
            elif alpha[i] < 0:
                alpha[i], alpha[j] = 0.0, total
        G += Qi * (alpha[i] - ai_old) + Qj * (alpha[j] - aj_old)

        # stagnation: smallest violating-pair gap of a sweep of n updates must keep shrinking
        if it % n == 0:
            if sweep_gap < best_gap:
                best_gap, stale_sweeps = sweep_gap, 0
            else:
                stale_sweeps += 1
                if stale_sweeps >= p.max_passes:
                    _, margin = _svm_margins(G, ys, alpha, C)
                    violations = _kkt_violations(margin, alpha, C, p.tol)
                    raise ConvergenceError(
                        f"SMO made no progress for {p.max_passes} sweeps",
                        iterations=it,
                        violations=violations,
                    )
            sweep_gap = np.inf

    rho, _ = _svm_margins(G, ys, alpha, C)
    support = np.flatnonzero(alpha > 0)
    _logger.debug("SMO: %d iterations, %d support vectors of %d", it, support.size, n)
    return SvmModel(
        support_vectors=X[support].copy(),
        alphas=alpha[support].copy(),
        sv_labels=ys[support].copy(),
        b=-rho,
        kernel=p.kernel,
        gamma=gamma,
        C=C,
        support_indices=support,
        iterations=it,
    )


def decision_function(m: SvmModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[1] != m.n_features:
        raise ValueError(f"expected {m.n_features} features, got {X.shape[1]}")
    K = kernel_matrix(m.kernel, m.gamma, X, m.support_vectors)
    return K @ (m.alphas * m.sv_labels) + m.b


def predict_svm(m: SvmModel, X: np.ndarray) -> np.ndarray:
    # zero decision -> +1 -> label 1
    return (decision_function(m, X) >= 0).astype(np.int64)


# =============================================================================
# Shared contract
# =============================================================================

Model = Union[ForestModel, LinearModel, SvmModel]
Params = Union[RfParams, LrParams, SvmParams]

DEFAULT_PARAMS: Dict[str, Dict[str, Any]] = {
    "rf": {"n_estimators": 100, "max_depth": None, "min_samples_split": 2, "min_samples_leaf": 1},
    "lr": {"C": 1.0, "penalty": "l2"},
    "svm": {"C": 1.0, "kernel": "rbf", "gamma": "scale"},
}


def _check_kind(kind: str) -> str:
    kind = str(kind).lower()
    if kind not in MODEL_KINDS:
        raise ValueError(f"unknown model {kind!r}; expected one of {', '.join(MODEL_KINDS)}")
    return kind


def build_params(kind: str, point: Optional[Mapping[str, Any]] = None, seed: int = 0) -> Params:
    """Concrete parameter object from defaults overlaid with ``point``."""
    kind = _check_kind(kind)
    merged = {**DEFAULT_PARAMS[kind], **dict(point or {})}
    if kind == "rf":
        # interval domains yield floats for integer fields
        for name in ("n_estimators", "max_depth", "min_samples_split", "min_samples_leaf"):
            if isinstance(merged.get(name), float):
                merged[name] = int(round(merged[name]))
        return RfParams(seed=seed, **merged)
    if kind == "lr":
        return LrParams(**merged)
    return SvmParams(**merged)


def train(kind: str, X: np.ndarray, y: np.ndarray, point: Optional[Mapping[str, Any]] = None, seed: int = 0) -> Model:
    params = build_params(kind, point, seed)
    if isinstance(params, RfParams):
        return train_rf(X, y, params)
    if isinstance(params, LrParams):
        return train_lr(X, y, params)
    return train_svm(X, y, params)


def predict(model: Model, X: np.ndarray) -> np.ndarray:
    if isinstance(model, ForestModel):
        return predict_rf(model, X)
    if isinstance(model, LinearModel):
        return predict_lr(model, X)
    if isinstance(model, SvmModel):
        return predict_svm(model, X)
    raise TypeError(f"not a faultforge model: {type(model).__name__}")


# ----------------------------
# Persistence
# ----------------------------

def _tree_to_dict(t: DecisionTree) -> Dict[str, Any]:
    return {
        "feature": t.feature.tolist(),
        "threshold": t.threshold.tolist(),
        "left": t.left.tolist(),
        "right": t.right.tolist(),
        "counts": t.counts.tolist(),
        "n_oob": t.n_oob,
    }


def model_to_dict(model: Model) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"format": MODEL_FORMAT, "version": MODEL_FORMAT_VERSION, "kind": model.kind}
    if isinstance(model, ForestModel):
        doc.update(
            n_features=model.n_features,
            feature_importances=model.feature_importances.tolist(),
            params={k: v for k, v in model.params.__dict__.items()},
            trees=[_tree_to_dict(t) for t in model.trees],
        )
    elif isinstance(model, LinearModel):
        doc.update(beta0=model.beta0, beta=model.beta.tolist(), iterations=model.iterations, objective=model.objective)
    elif isinstance(model, SvmModel):
        doc.update(
            support_vectors=model.support_vectors.tolist(),
            alphas=model.alphas.tolist(),
            sv_labels=model.sv_labels.tolist(),
            b=model.b,
            kernel=model.kernel,
            gamma=model.gamma,
            C=model.C,
            support_indices=np.asarray(model.support_indices).tolist(),
            iterations=model.iterations,
        )
    else:
        raise TypeError(f"not a faultforge model: {type(model).__name__}")
    return doc


def model_from_dict(doc: Mapping[str, Any]) -> Model:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError("not a faultforge model document")
    if int(doc.get("version", 0)) != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {doc.get('version')}")
    kind = _check_kind(doc["kind"])
    if kind == "rf":
        trees = tuple(
            DecisionTree(
                feature=np.array(t["feature"], dtype=np.int64),
                threshold=np.array(t["threshold"], dtype=float),
                left=np.array(t["left"], dtype=np.int64),
                right=np.array(t["right"], dtype=np.int64),
                counts=np.array(t["counts"], dtype=np.int64).reshape(-1, 2),
                n_oob=int(t.get("n_oob", 0)),
            )
            for t in doc["trees"]
        )
        return ForestModel(
            trees=trees,
            n_features=int(doc["n_features"]),
            feature_importances=np.array(doc["feature_importances"], dtype=float),
            params=RfParams(**doc["params"]),
        )
    if kind == "lr":
        return LinearModel(
            beta0=float(doc["beta0"]),
            beta=np.array(doc["beta"], dtype=float),
            iterations=int(doc.get("iterations", 0)),
            objective=float(doc.get("objective", float("nan"))),
        )
    return SvmModel(
        support_vectors=np.array(doc["support_vectors"], dtype=float),
        alphas=np.array(doc["alphas"], dtype=float),
        sv_labels=np.array(doc["sv_labels"], dtype=float),
        b=float(doc["b"]),
        kernel=str(doc["kernel"]),
        gamma=float(doc["gamma"]),
        C=float(doc["C"]),
        support_indices=np.array(doc["support_indices"], dtype=np.int64),
        iterations=int(doc.get("iterations", 0)),
    )


def save_model(model: Model, path: str | Path) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(model_to_dict(model), indent=1), encoding="utf-8")
    return out


def load_model(path: str | Path) -> Model:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Model file not found: {p}")
    return model_from_dict(json.loads(p.read_text(encoding="utf-8")))
