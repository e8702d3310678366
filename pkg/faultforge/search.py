"""search.py

Hyperparameter search over declarative parameter spaces.

A ParamSpace is an ordered list of (name, domain) with domain one of
  Choice(values)        finite set (categorical or numeric)
  LogUniform(lo, hi)    interval, sampled log-uniformly

Strategies
  grid_search    full Cartesian product (finite domains only)
  random_search  n_samples independent draws
  ga_search      elitist GA: tournament selection, uniform crossover, per-gene mutation

Fitness is (mean accuracy, mean F1) and is compared as a tuple; remaining
ties go to the earliest evaluated point. Every strategy memoises fitness on the
canonical point, so ``evals`` counts distinct fitness calls.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from joblib import Parallel, delayed

from .classifiers import predict, train
from .crossval import stratified_folds
from .errors import ConfigError, ConvergenceError, GridInfeasibleError
from .evaluation import confusion, metrics

_logger = logging.getLogger(__name__)

TUNERS = ("none", "grid", "random", "ga")
DEFAULT_RANDOM_SAMPLES = 30
INNER_FOLDS = 3

Fitness = Tuple[float, float]
Point = Dict[str, Any]
FitnessFn = Callable[[Mapping[str, Any]], Fitness]
FAILED_FITNESS: Fitness = (0.0, 0.0)


# ----------------------------
# Domains and spaces
# ----------------------------

@dataclass(frozen=True)
class Choice:
    values: Tuple[Any, ...]

    def __post_init__(self) -> None:
        vals = tuple(self.values)
        if not vals:
            raise ConfigError("a finite domain needs at least one value")
        if len(set(map(_hashable, vals))) != len(vals):
            raise ConfigError(f"duplicate values in domain {vals}")
        object.__setattr__(self, "values", vals)

    finite = True

    def contains(self, v: Any) -> bool:
        return any(_same(v, x) for x in self.values)

    def sample(self, rng: np.random.Generator) -> Any:
        return self.values[int(rng.integers(len(self.values)))]


@dataclass(frozen=True)
class LogUniform:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (self.lo > 0 and self.lo < self.hi):
            raise ConfigError(f"log-uniform interval needs 0 < lo < hi, got [{self.lo}, {self.hi}]")

    finite = False

    def contains(self, v: Any) -> bool:
        return isinstance(v, (int, float)) and not isinstance(v, bool) and self.lo <= v <= self.hi

    def sample(self, rng: np.random.Generator) -> float:
        return float(math.exp(rng.uniform(math.log(self.lo), math.log(self.hi))))

    def clip(self, v: float) -> float:
        return float(min(max(v, self.lo), self.hi))


Domain = Union[Choice, LogUniform]
Canonicalizer = Callable[[Point, "ParamSpace"], Point]


def _hashable(v: Any) -> Any:
    # 1 and 1.0 and True are distinct domain values
    return (type(v).__name__, v)


def _same(a: Any, b: Any) -> bool:
    return _hashable(a) == _hashable(b)


@dataclass(frozen=True)
class ParamSpace:
    dims: Tuple[Tuple[str, Domain], ...]
    canonicalizer: Optional[Canonicalizer] = None

    def __post_init__(self) -> None:
        dims = tuple((str(n), d) for n, d in self.dims)
        names = [n for n, _ in dims]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate dimension names: {names}")
        object.__setattr__(self, "dims", dims)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.dims)

    def domain(self, name: str) -> Domain:
        for n, d in self.dims:
            if n == name:
                return d
        raise KeyError(name)

    def interval_dims(self) -> List[str]:
        return [n for n, d in self.dims if not d.finite]

    @property
    def size(self) -> Optional[int]:
        """Number of raw grid points, or None when any domain is an interval."""
        if self.interval_dims():
            return None
        return math.prod(len(d.values) for _, d in self.dims)  # type: ignore[union-attr]

    def contains(self, point: Mapping[str, Any]) -> bool:
        return set(point) == set(self.names) and all(d.contains(point[n]) for n, d in self.dims)

    def canonical(self, point: Mapping[str, Any]) -> Point:
        p = {n: point[n] for n in self.names}
        return self.canonicalizer(p, self) if self.canonicalizer else p

    def key(self, point: Mapping[str, Any]) -> Tuple[Any, ...]:
        return tuple(_hashable(point[n]) for n in self.names)

    def sample(self, rng: np.random.Generator) -> Point:
        return {n: d.sample(rng) for n, d in self.dims}

    def grid(self) -> Iterator[Point]:
        bad = self.interval_dims()
        if bad:
            raise GridInfeasibleError(bad)
        for combo in itertools.product(*(d.values for _, d in self.dims)):  # type: ignore[union-attr]
            yield dict(zip(self.names, combo))

    def with_overrides(self, overrides: Mapping[str, Domain]) -> "ParamSpace":
        dims = [(n, overrides.get(n, d)) for n, d in self.dims]
        dims += [(n, d) for n, d in overrides.items() if n not in self.names]
        return ParamSpace(tuple(dims), self.canonicalizer)

    def describe(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {}
        for n, d in self.dims:
            out[n] = list(d.values) if isinstance(d, Choice) else f"log:{d.lo:g}:{d.hi:g}"
        return out


# ----------------------------
# Canonicalisers for the model spaces
# ----------------------------

def cap_leaf_at_split(point: Point, space: ParamSpace) -> Point:
    """Lower min_samples_leaf to the largest domain value not above min_samples_split."""
    leaf, split = point.get("min_samples_leaf"), point.get("min_samples_split")
    if leaf is None or split is None or leaf <= split:
        return point
    dom = space.domain("min_samples_leaf")
    if isinstance(dom, Choice):
        allowed = [v for v in dom.values if v <= split]
        point["min_samples_leaf"] = max(allowed) if allowed else min(dom.values)
    else:
        point["min_samples_leaf"] = dom.clip(split)
    return point


def drop_gamma_for_linear(point: Point, space: ParamSpace) -> Point:
    """Linear kernels ignore gamma; pin it so equivalent points share one memo entry."""
    if point.get("kernel") != "linear" or "gamma" not in point:
        return point
    dom = space.domain("gamma")
    if isinstance(dom, Choice):
        point["gamma"] = "scale" if dom.contains("scale") else dom.values[0]
    else:
        point["gamma"] = dom.lo
    return point


def _rf_space() -> ParamSpace:
    return ParamSpace(
        (
            ("n_estimators", Choice((50, 100, 200))),
            ("max_depth", Choice((None, 5, 10, 20))),
            ("min_samples_split", Choice((2, 5, 10))),
            ("min_samples_leaf", Choice((1, 2, 4))),
        ),
        canonicalizer=cap_leaf_at_split,
    )


def _lr_space() -> ParamSpace:
    return ParamSpace((("C", Choice((0.01, 0.1, 1.0, 10.0, 100.0))), ("penalty", Choice(("l1", "l2")))))


def _svm_space() -> ParamSpace:
    return ParamSpace(
        (
            ("C", Choice((0.1, 1.0, 10.0, 100.0))),
            ("kernel", Choice(("linear", "rbf"))),
            ("gamma", Choice(("scale", 0.01, 0.1, 1.0))),
        ),
        canonicalizer=drop_gamma_for_linear,
    )


_DEFAULT_SPACES: Dict[str, Callable[[], ParamSpace]] = {"rf": _rf_space, "lr": _lr_space, "svm": _svm_space}


def default_space(kind: str) -> ParamSpace:
    try:
        return _DEFAULT_SPACES[kind]()
    except KeyError:
        raise ValueError(f"no default space for model {kind!r}") from None


# ----------------------------
# CLI value parsing
# ----------------------------

def parse_value(text: str) -> Any:
    t = text.strip()
    if t.lower() in ("none", "null", "unlimited"):
        return None
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            pass
    return t


def parse_domain(text: str) -> Domain:
    """'v1,v2,...' -> Choice; 'log:lo:hi' -> LogUniform."""
    t = text.strip()
    if t.startswith("log:"):
        parts = t.split(":")
        if len(parts) != 3:
            raise ConfigError(f"interval domain must look like log:lo:hi, got {text!r}")
        try:
            lo, hi = float(parts[1]), float(parts[2])
        except ValueError:
            raise ConfigError(f"interval bounds must be numbers: {text!r}") from None
        return LogUniform(lo, hi)
    values = tuple(parse_value(v) for v in t.split(",") if v.strip())
    return Choice(values)


def parse_assignment(text: str) -> Tuple[str, str]:
    name, sep, value = text.partition("=")
    if not sep or not name.strip():
        raise ConfigError(f"expected NAME=VALUE, got {text!r}")
    return name.strip(), value.strip()


# ----------------------------
# Memoised fitness
# ----------------------------

def _safe_fitness(fit: FitnessFn, point: Point) -> Fitness:
    try:
        acc, f1 = fit(point)
        return float(acc), float(f1)
    except ConvergenceError as e:
        _logger.warning("fitness failed for %s: %s; scored 0", point, e)
        return FAILED_FITNESS


class _Memo:
    def __init__(self, space: ParamSpace, fit: FitnessFn, n_jobs: int = 1):
        self.space = space
        self.fit = fit
        self.n_jobs = n_jobs
        self.cache: Dict[Tuple[Any, ...], Fitness] = {}

    @property
    def evals(self) -> int:
        return len(self.cache)

    def many(self, points: Sequence[Point]) -> List[Tuple[Point, Fitness]]:
        canon = [self.space.canonical(p) for p in points]
        misses: Dict[Tuple[Any, ...], Point] = {}
        for c in canon:
            k = self.space.key(c)
            if k not in self.cache and k not in misses:
                misses[k] = c
        if misses:
            if self.n_jobs == 1 or len(misses) == 1:
                scores = [_safe_fitness(self.fit, p) for p in misses.values()]
            else:
                scores = Parallel(n_jobs=self.n_jobs)(
                    delayed(_safe_fitness)(self.fit, p) for p in misses.values()
                )
            self.cache.update(zip(misses.keys(), scores))
        return [(c, self.cache[self.space.key(c)]) for c in canon]


def _argbest(scored: Sequence[Tuple[Point, Fitness]]) -> Tuple[Point, Fitness]:
    best_point, best_fit = scored[0]
    for point, fit in scored[1:]:
        if fit > best_fit:
            best_point, best_fit = point, fit
    return best_point, best_fit


@dataclass(frozen=True)
class SearchResult:
    point: Point
    fitness: Fitness
    evals: int
    strategy: str
    history: Tuple[float, ...] = field(default_factory=tuple)

    def __iter__(self):
        yield self.point
        yield self.fitness
        yield self.evals


# ----------------------------
# Strategies
# ----------------------------

def grid_search(space: ParamSpace, fit: FitnessFn, n_jobs: int = 1) -> SearchResult:
    points = list(space.grid())
    memo = _Memo(space, fit, n_jobs)
    point, best = _argbest(memo.many(points))
    _logger.debug("grid: %d points, %d evals, best %s -> %s", len(points), memo.evals, point, best)
    return SearchResult(point=point, fitness=best, evals=memo.evals, strategy="grid")


def random_search(
    space: ParamSpace,
    fit: FitnessFn,
    n_samples: int = DEFAULT_RANDOM_SAMPLES,
    seed: int = 0,
    n_jobs: int = 1,
) -> SearchResult:
    if n_samples < 1:
        raise ConfigError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    points = [space.sample(rng) for _ in range(n_samples)]
    memo = _Memo(space, fit, n_jobs)
    point, best = _argbest(memo.many(points))
    return SearchResult(point=point, fitness=best, evals=memo.evals, strategy="random")


@dataclass(frozen=True)
class GaConfig:
    population: int = 20
    generations: int = 15
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float = 0.1
    elitism: int = 1
    seed: int = 0
    mutation_sigma: float = 0.5

    def __post_init__(self) -> None:
        if self.population < 2:
            raise ConfigError(f"population must be >= 2, got {self.population}")
        if self.generations < 0 or self.tournament_size < 1:
            raise ConfigError("generations must be >= 0 and tournament_size >= 1")
        if not (0.0 <= self.crossover_rate <= 1.0 and 0.0 <= self.mutation_rate <= 1.0):
            raise ConfigError("crossover_rate and mutation_rate must lie in [0, 1]")
        if not 0 <= self.elitism < self.population:
            raise ConfigError("elitism must satisfy 0 <= elitism < population")


def _tournament(
    scored: Sequence[Tuple[Point, Fitness]], size: int, rng: np.random.Generator
) -> Point:
    picks = rng.integers(0, len(scored), size=size)
    return _argbest([scored[int(i)] for i in picks])[0]


def _crossover(a: Point, b: Point, names: Sequence[str], rng: np.random.Generator) -> Point:
    mask = rng.random(len(names)) < 0.5
    return {n: (a[n] if take_a else b[n]) for n, take_a in zip(names, mask)}


def _mutate(child: Point, space: ParamSpace, cfg: GaConfig, rng: np.random.Generator) -> Point:
    out = dict(child)
    for name, dom in space.dims:
        if rng.random() >= cfg.mutation_rate:
            continue
        if isinstance(dom, Choice):
            out[name] = dom.sample(rng)
        else:
            out[name] = dom.clip(out[name] * math.exp(rng.normal(0.0, cfg.mutation_sigma)))
    return out


def ga_search(space: ParamSpace, fit: FitnessFn, cfg: GaConfig = GaConfig(), n_jobs: int = 1) -> SearchResult:
    rng = np.random.default_rng(cfg.seed)
    memo = _Memo(space, fit, n_jobs)
    names = space.names

    scored = memo.many([space.sample(rng) for _ in range(cfg.population)])
    best_point, best_fit = _argbest(scored)
    history = [best_fit[0]]

    for gen in range(1, cfg.generations + 1):
        # stable ranking: ties keep population order
        ranked = sorted(range(len(scored)), key=lambda i: scored[i][1], reverse=True)
        children = [scored[i][0] for i in ranked[: cfg.elitism]]
        while len(children) < cfg.population:
            a = _tournament(scored, cfg.tournament_size, rng)
            b = _tournament(scored, cfg.tournament_size, rng)
            child = _crossover(a, b, names, rng) if rng.random() < cfg.crossover_rate else dict(a)
            children.append(_mutate(child, space, cfg, rng))
        scored = memo.many(children)
        gen_point, gen_fit = _argbest(scored)
        history.append(gen_fit[0])
        if gen_fit > best_fit:
            best_point, best_fit = gen_point, gen_fit
        _logger.debug("ga: generation %d best %s (evals so far %d)", gen, gen_fit, memo.evals)

    return SearchResult(
        point=best_point, fitness=best_fit, evals=memo.evals, strategy="ga", history=tuple(history)
    )


# ----------------------------
# Cross-validated fitness
# ----------------------------

def cross_validated_fitness(
    kind: str, X: np.ndarray, y: np.ndarray, seed: int, k: int = INNER_FOLDS
) -> FitnessFn:
    """FitnessFn scoring a point by stratified k-fold CV on (X, y)."""
    plan = stratified_folds(y, k, seed)

    def fitness(point: Mapping[str, Any]) -> Fitness:
        accs, f1s = [], []
        for tr, te in plan:
            model = train(kind, X[tr], y[tr], point, seed=seed)
            m = metrics(confusion(y[te], predict(model, X[te])), warn=False)
            accs.append(m.accuracy)
            f1s.append(m.f1)
        return float(np.mean(accs)), float(np.mean(f1s))

    return fitness


def tune(
    tuner: str,
    space: ParamSpace,
    fit: FitnessFn,
    *,
    budget: int = DEFAULT_RANDOM_SAMPLES,
    ga: GaConfig = GaConfig(),
    seed: int = 0,
    n_jobs: int = 1,
) -> SearchResult:
    if tuner == "grid":
        return grid_search(space, fit, n_jobs=n_jobs)
    if tuner == "random":
        return random_search(space, fit, n_samples=budget, seed=seed, n_jobs=n_jobs)
    if tuner == "ga":
        return ga_search(space, fit, GaConfig(**{**ga.__dict__, "seed": seed}), n_jobs=n_jobs)
    raise ValueError(f"unknown tuner {tuner!r}; expected one of {', '.join(TUNERS[1:])}")
