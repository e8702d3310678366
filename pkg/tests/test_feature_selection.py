from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from faultforge.errors import ConfigError, EmptySelectionError
from faultforge.feature_selection import (
    FeatureSubset,
    SelectorConfig,
    cfs_merit,
    equal_frequency_bins,
    mi_scores,
    mutual_information,
    select,
    select_cfs,
    select_l1,
    select_mi,
    select_rfe,
)

from .conftest import separable_problem


def _noisy_problem(n=120, p=4, seed=0, flip=0.1):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, p))
    y = (X[:, 0] > 0.5).astype(int)
    flips = rng.random(n) < flip
    y[flips] = 1 - y[flips]
    return X, y


# ----------------------------
# RFE
# ----------------------------

def test_rfe_drops_noise_before_signal():
    X, y = _noisy_problem(p=2)
    sub = select_rfe(X, y, SelectorConfig(target_count=1))
    assert sub.indices == (0,)
    assert sub.method == "rfe"


def test_rfe_tie_drops_higher_index():
    X, y = _noisy_problem(p=1)
    X = np.column_stack([X, np.zeros(len(y)), np.zeros(len(y))])
    sub = select_rfe(X, y, SelectorConfig(target_count=2))
    assert sub.indices == (0, 1)


def test_rfe_target_equal_to_p_keeps_everything():
    X, y = _noisy_problem(p=3)
    assert select_rfe(X, y, SelectorConfig(target_count=3)).indices == (0, 1, 2)


def test_rfe_target_above_p_is_config_error():
    X, y = _noisy_problem(p=3)
    with pytest.raises(ConfigError):
        select_rfe(X, y, SelectorConfig(target_count=4))


# ----------------------------
# L1
# ----------------------------

def test_l1_keeps_informative_feature():
    X, y = _noisy_problem(p=4)
    sub = select_l1(X, y, SelectorConfig(l1_strength=100.0))
    assert 0 in sub.indices


def test_l1_with_tiny_c_selects_nothing():
    X, y = _noisy_problem(p=4)
    with pytest.raises(EmptySelectionError, match="larger C"):
        select_l1(X, y, SelectorConfig(l1_strength=1e-6))


# ----------------------------
# Mutual information
# ----------------------------

def test_mi_of_feature_equal_to_balanced_label_is_log_two():
    y = np.array([0, 1] * 50)
    scores = mi_scores(y[:, None].astype(float), y, bins=10)
    assert scores[0] == pytest.approx(math.log(2))


@pytest.mark.parametrize("minority", [5, 8, 2])
def test_mi_of_feature_equal_to_skewed_label_is_label_entropy(minority):
    y = np.array([0] * minority + [1] * (100 - minority))
    p = minority / 100
    entropy = -(p * math.log(p) + (1 - p) * math.log(1 - p))
    scores = mi_scores(y[:, None].astype(float), y, bins=10)
    assert scores[0] == pytest.approx(entropy)


def test_few_distinct_values_get_one_bin_each():
    x = np.array([0.0] * 3 + [0.5] * 90 + [1.0] * 7)
    bins = equal_frequency_bins(x, 10)
    assert sorted(set(bins.tolist())) == [0, 1, 2]
    assert (bins[:3] == 0).all() and (bins[-7:] == 2).all()


def test_many_distinct_values_fill_every_bin_in_order():
    # 4 equal low values, then 96 distinct ones
    x = np.concatenate([np.zeros(4), np.arange(1, 97, dtype=float)])
    bins = equal_frequency_bins(x, 10)
    assert bins.min() == 0 and bins.max() == 9
    assert len(set(bins[:4].tolist())) == 1
    assert np.all(np.diff(bins) >= 0)


def test_mi_is_exactly_zero_under_independence():
    a = np.array([0, 0, 1, 1] * 5)
    b = np.array([0, 1, 0, 1] * 5)
    assert mutual_information(a, b) == 0.0


def test_mi_invariant_under_increasing_transform():
    X, y = _noisy_problem(n=200, p=3, seed=4)
    np.testing.assert_array_equal(mi_scores(X, y, 10), mi_scores(np.exp(3 * X) + 7, y, 10))


def test_equal_frequency_bins_share_bin_on_ties():
    bins = equal_frequency_bins(np.array([1.0, 1.0, 1.0, 2.0, 3.0, 4.0]), 3)
    assert bins[0] == bins[1] == bins[2]
    assert bins.max() < 3


def test_select_mi_ranks_informative_first():
    X, y = _noisy_problem(n=200, p=5, seed=5)
    sub = select_mi(X, y, SelectorConfig(target_count=2))
    assert sub.indices[0] == 0
    assert len(sub) == 2


# ----------------------------
# CFS
# ----------------------------

def test_single_feature_merit_is_abs_correlation():
    X, y = _noisy_problem(p=2, seed=6)
    r = abs(np.corrcoef(X[:, 0], y)[0, 1])
    assert cfs_merit(X, y, [0]) == pytest.approx(r)


def test_cfs_keeps_one_of_duplicated_features():
    rng = np.random.default_rng(7)
    y = np.array([0, 1] * 60)
    f = y + 0.1 * rng.normal(size=y.size)
    X = np.column_stack([f, f, rng.normal(size=y.size)])
    sub = select_cfs(X, y, SelectorConfig())
    assert not {0, 1} <= set(sub.indices)
    assert 0 in sub.indices


def test_cfs_excludes_constant_features_with_warning():
    X, y = _noisy_problem(p=2, seed=8)
    X = np.column_stack([X, np.full(len(y), 3.0)])
    sub = select_cfs(X, y, SelectorConfig())
    assert 2 not in sub.indices
    assert any("constant" in w for w in sub.warnings)


def test_cfs_greedy_close_to_exhaustive_optimum():
    close = 0
    trials = 25
    for seed in range(trials):
        rng = np.random.default_rng(100 + seed)
        p = int(rng.integers(3, 9))
        n = 80
        X = rng.normal(size=(n, p))
        w = np.zeros(p)
        informative = rng.choice(p, size=min(p, 3), replace=False)
        w[informative] = rng.uniform(0.5, 2.0, size=informative.size)
        y = (X @ w + rng.normal(scale=1.0, size=n) > 0).astype(int)

        sub = select_cfs(X, y, SelectorConfig(cfs_patience=p))
        greedy = cfs_merit(X, y, sub.indices)
        best = max(
            cfs_merit(X, y, s)
            for k in range(1, p + 1)
            for s in itertools.combinations(range(p), k)
        )
        assert best >= greedy - 1e-12
        if greedy >= 0.9 * best:
            close += 1
    assert close >= 0.8 * trials


# ----------------------------
# Subset / dispatch
# ----------------------------

def test_empty_subset_is_rejected():
    with pytest.raises(EmptySelectionError):
        FeatureSubset(indices=(), scores=(), method="mi")


def test_subset_apply_and_names():
    sub = FeatureSubset(indices=(2, 0), scores=(0.5, 0.1), method="mi")
    X = np.arange(12.0).reshape(3, 4)
    np.testing.assert_array_equal(sub.apply(X), X[:, [2, 0]])
    assert sub.names(["a", "b", "c", "d"]) == ["c", "a"]


def test_none_keeps_all_features():
    X, y = separable_problem(p=5)
    assert select("none", X, y, SelectorConfig()).indices == (0, 1, 2, 3, 4)


def test_unknown_selector():
    X, y = separable_problem()
    with pytest.raises(ValueError, match="unknown selector"):
        select("pca", X, y, SelectorConfig())


def test_selector_config_validation():
    with pytest.raises(ConfigError):
        SelectorConfig(target_count=0)
    with pytest.raises(ConfigError):
        SelectorConfig(l1_strength=0.0)
