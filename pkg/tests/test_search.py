from __future__ import annotations

import logging

import numpy as np
import pytest

from faultforge.errors import ConfigError, GridInfeasibleError
from faultforge.search import (
    Choice,
    GaConfig,
    LogUniform,
    ParamSpace,
    cross_validated_fitness,
    default_space,
    ga_search,
    grid_search,
    parse_assignment,
    parse_domain,
    parse_value,
    random_search,
    tune,
)

from .conftest import separable_problem


class CountingFitness:
    def __init__(self, fn):
        self.fn = fn
        self.calls = 0

    def __call__(self, point):
        self.calls += 1
        return self.fn(point)


def _cube(n=5):
    values = tuple(range(n))
    return ParamSpace((("a", Choice(values)), ("b", Choice(values)), ("c", Choice(values))))


def _smooth(target=(3, 1, 4)):
    def fitness(p):
        d = abs(p["a"] - target[0]) + abs(p["b"] - target[1]) + abs(p["c"] - target[2])
        return 1.0 - d / 20.0, 0.0

    return fitness


def test_singleton_space():
    space = ParamSpace((("C", Choice((1.0,))),))
    fit = CountingFitness(lambda p: (0.7, 0.3))
    result = grid_search(space, fit)
    assert result.point == {"C": 1.0}
    assert result.fitness == (0.7, 0.3)
    assert fit.calls == result.evals == 1


def test_grid_evaluates_every_point_once():
    space = ParamSpace((("x", Choice((1, 2, 3))), ("y", Choice(("u", "v")))))
    fit = CountingFitness(lambda p: (p["x"] / 10, 0.0))
    point, fitness, evals = grid_search(space, fit)
    assert evals == 6 and fit.calls == 6
    assert point["x"] == 3
    assert fitness == (0.3, 0.0)


def test_grid_finds_a_spike():
    spike = {"a": 2, "b": 4, "c": 0}
    space = _cube()
    result = grid_search(space, lambda p: (1.0 if p == spike else 0.0, 0.0))
    assert result.point == spike


def test_earliest_point_wins_ties():
    space = ParamSpace((("x", Choice((5, 6, 7))),))
    result = grid_search(space, lambda p: (0.5, 0.5))
    assert result.point == {"x": 5}


def test_f1_breaks_accuracy_ties():
    space = ParamSpace((("x", Choice((1, 2))),))
    result = grid_search(space, lambda p: (0.5, 0.1 * p["x"]))
    assert result.point == {"x": 2}


def test_svm_linear_points_share_one_evaluation():
    fit = CountingFitness(lambda p: (0.5, 0.5))
    result = grid_search(default_space("svm"), fit)
    # 4 values of C x (1 linear + 4 rbf gammas)
    assert result.evals == fit.calls == 20


def test_rf_leaf_is_capped_at_split():
    space = default_space("rf")
    p = space.canonical({"n_estimators": 50, "max_depth": None, "min_samples_split": 2, "min_samples_leaf": 4})
    assert p["min_samples_leaf"] == 2


def test_grid_rejects_intervals():
    space = ParamSpace((("C", LogUniform(0.1, 10.0)),))
    with pytest.raises(GridInfeasibleError) as exc:
        grid_search(space, lambda p: (0.0, 0.0))
    assert exc.value.dims == ["C"]


def test_random_search_is_deterministic_and_memoised():
    space = ParamSpace((("x", Choice((1, 2, 3))), ("y", Choice(("u", "v")))))
    fit = CountingFitness(lambda p: (p["x"] / 10, 0.0))
    a = random_search(space, fit, n_samples=30, seed=5)
    b = random_search(space, lambda p: (p["x"] / 10, 0.0), n_samples=30, seed=5)
    assert a.point == b.point and a.evals == b.evals
    assert a.evals <= 6
    assert fit.calls == a.evals


def test_random_search_hit_rate_on_spike():
    spike = {"a": 1, "b": 1, "c": 1}
    space = _cube()
    hits = sum(
        random_search(space, lambda p: (1.0 if p == spike else 0.0, 0.0), n_samples=30, seed=s).point == spike
        for s in range(200)
    )
    # 1 - (124/125)^30 is about 0.21
    assert 15 <= hits <= 75


def test_random_search_samples_intervals_within_bounds():
    space = ParamSpace((("C", LogUniform(0.01, 100.0)),))
    seen = []

    def record(p):
        seen.append(p["C"])
        return 0.0, 0.0

    random_search(space, record, n_samples=50, seed=1)
    assert all(0.01 <= c <= 100.0 for c in seen)
    assert min(seen) < 1.0 < max(seen)


def test_ga_history_never_decreases():
    result = ga_search(_cube(), _smooth(), GaConfig(population=10, generations=12, seed=3))
    assert len(result.history) == 13
    assert all(b >= a for a, b in zip(result.history, result.history[1:]))
    assert result.history[-1] == result.fitness[0]


def test_ga_matches_grid_optimum_on_most_seeds():
    space = _cube()
    fit = _smooth()
    optimum = grid_search(space, fit).point
    found = sum(
        ga_search(space, fit, GaConfig(population=30, generations=25, seed=s)).point == optimum
        for s in range(100)
    )
    assert found >= 95


def test_ga_config_validation():
    with pytest.raises(ConfigError):
        GaConfig(population=1)
    with pytest.raises(ConfigError):
        GaConfig(population=5, elitism=5)
    with pytest.raises(ConfigError):
        GaConfig(mutation_rate=1.5)


def test_tune_dispatch():
    space = ParamSpace((("x", Choice((1, 2))),))
    fit = lambda p: (p["x"] / 2, 0.0)  # noqa: E731
    assert tune("grid", space, fit).strategy == "grid"
    assert tune("random", space, fit, budget=4).strategy == "random"
    ga = tune("ga", space, fit, ga=GaConfig(population=4, generations=2))
    assert ga.strategy == "ga" and ga.evals <= 2
    with pytest.raises(ValueError, match="unknown tuner"):
        tune("bayes", space, fit)


def test_cross_validated_fitness_scores_a_point():
    X, y = separable_problem(n=60, seed=9)
    fit = cross_validated_fitness("lr", X, y, seed=0)
    acc, f1 = fit({"C": 10.0, "penalty": "l2"})
    assert acc >= 0.9 and f1 >= 0.9


def test_inner_folds_do_not_warn_about_undefined_precision(caplog):
    rng = np.random.default_rng(3)
    X = rng.normal(size=(80, 3))
    y = np.zeros(80, dtype=int)
    y[:8] = 1
    fit = cross_validated_fitness("lr", X, y, seed=0)
    with caplog.at_level(logging.DEBUG, logger="faultforge.evaluation"):
        _, f1 = fit({"C": 1e-4, "penalty": "l2"})
    assert f1 == 0.0
    assert caplog.records
    assert not [r for r in caplog.records if r.levelno >= logging.WARNING]


def test_parse_domain_and_values():
    assert parse_domain("50,100,200") == Choice((50, 100, 200))
    assert parse_domain("none,5") == Choice((None, 5))
    assert parse_domain("log:0.1:10") == LogUniform(0.1, 10.0)
    assert parse_value("rbf") == "rbf"
    assert parse_value("0.5") == 0.5
    with pytest.raises(ConfigError):
        parse_domain("log:1")
    with pytest.raises(ConfigError):
        parse_domain("log:10:1")


def test_parse_assignment():
    assert parse_assignment("C=log:0.1:10") == ("C", "log:0.1:10")
    with pytest.raises(ConfigError):
        parse_assignment("C")


def test_space_size_and_overrides():
    space = default_space("lr")
    assert space.size == 10
    wide = space.with_overrides({"C": LogUniform(0.1, 10.0)})
    assert wide.size is None
    assert wide.interval_dims() == ["C"]
    assert wide.describe()["C"] == "log:0.1:10"
