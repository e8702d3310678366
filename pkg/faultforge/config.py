"""config.py

Experiment configuration: dataclass defaults, environment, YAML file.

Precedence (lowest first): built-in defaults < environment (.env honoured) <
YAML config file < command-line flags. The CLI applies the last layer with
``dataclasses.replace``.

YAML keys mirror ExperimentConfig:

    datasets: [data/ant-1.7.csv, data/camel-1.6.csv]
    pool: true
    k_folds: 10
    selectors: [rfe, l1, mi, cfs]
    models: [rf, lr, svm]
    tuners: [grid, random, ga]
    selector: {target_count: 10, l1_strength: 1.0, mi_bins: 10, cfs_patience: 5}
    adasyn: {k_neighbors: 5, balance_target: 1.0}
    ga: {population: 20, generations: 15}
    tuner_budget: 30
    params: {rf: {n_estimators: 100}}
    space: {svm: {C: [0.1, 1, 10], gamma: "log:0.001:1"}}
    schema: [wmc, dit, noc, cbo, rfc, lcom, ca, ce, npm, lcom3, loc, dam, moa, mfa, cam, ic, cbm, amc, max_cc, avg_cc]
    seed: 42
"""

from __future__ import annotations

import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml
from dotenv import load_dotenv

from .classifiers import DEFAULT_PARAMS, MODEL_KINDS
from .corpus import FeatureSchema
from .crossval import DEFAULT_FOLDS
from .errors import ConfigError, SchemaError
from .feature_selection import SELECTORS, SelectorConfig
from .preprocess import DEFAULT_IMPUTER_K
from .resample import AdasynConfig
from .search import DEFAULT_RANDOM_SAMPLES, TUNERS, Choice, Domain, GaConfig, ParamSpace, default_space, parse_domain

_logger = logging.getLogger(__name__)

# =============================================================================
# CONFIGURATION
# =============================================================================

load_dotenv()
DEFAULT_OUT = os.getenv("FAULTFORGE_OUT", "faultforge-out")
DEFAULT_SEED = int(os.getenv("FAULTFORGE_SEED", "42"))
DEFAULT_JOBS = int(os.getenv("FAULTFORGE_JOBS", "0")) or (os.cpu_count() or 1)

DEFAULT_SELECTORS = ("rfe", "l1", "mi", "cfs")
DEFAULT_MODELS = MODEL_KINDS
DEFAULT_TUNERS = ("grid", "random", "ga")


def _tuple(v: Any) -> Tuple[str, ...]:
    if isinstance(v, str):
        v = [s for s in v.split(",") if s.strip()]
    return tuple(str(s).strip().lower() for s in v)


def _tuple_names(v: Any) -> Tuple[str, ...]:
    if isinstance(v, str):
        v = v.split(",")
    return tuple(str(s).strip() for s in v if str(s).strip())


@dataclass(frozen=True)
class ExperimentConfig:
    datasets: Tuple[str, ...] = ()
    pool: bool = True
    k_folds: int = DEFAULT_FOLDS
    selectors: Tuple[str, ...] = DEFAULT_SELECTORS
    models: Tuple[str, ...] = DEFAULT_MODELS
    tuners: Tuple[str, ...] = DEFAULT_TUNERS
    selector: SelectorConfig = field(default_factory=SelectorConfig)
    adasyn: AdasynConfig = field(default_factory=AdasynConfig)
    ga: GaConfig = field(default_factory=GaConfig)
    tuner_budget: int = DEFAULT_RANDOM_SAMPLES
    params: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    space: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    imputer_k: int = DEFAULT_IMPUTER_K
    dedup: bool = False
    global_resample: bool = False
    baseline: bool = False
    seed: int = DEFAULT_SEED
    jobs: int = DEFAULT_JOBS
    out: str = DEFAULT_OUT
    schema: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "datasets", tuple(str(d) for d in self.datasets))
        object.__setattr__(self, "schema", _tuple_names(self.schema))
        try:
            self.feature_schema()
        except SchemaError as e:
            raise ConfigError(f"schema: {e}") from e
        for name, allowed in (("selectors", SELECTORS), ("models", MODEL_KINDS), ("tuners", TUNERS)):
            values = _tuple(getattr(self, name))
            if not values:
                raise ConfigError(f"{name} must not be empty")
            bad = [v for v in values if v not in allowed]
            if bad:
                raise ConfigError(f"unknown {name}: {', '.join(bad)} (allowed: {', '.join(allowed)})")
            object.__setattr__(self, name, values)
        if self.k_folds < 2:
            raise ConfigError(f"k_folds must be >= 2, got {self.k_folds}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs}")
        if self.tuner_budget < 1:
            raise ConfigError(f"tuner_budget must be >= 1, got {self.tuner_budget}")
        if self.imputer_k < 1:
            raise ConfigError(f"imputer_k must be >= 1, got {self.imputer_k}")
        for block in ("params", "space"):
            unknown = [m for m in getattr(self, block) if m not in MODEL_KINDS]
            if unknown:
                raise ConfigError(f"{block}: unknown model(s) {', '.join(unknown)}")
        for kind, overrides in self.space.items():
            self.space_for(kind)  # parse errors surface here
            extra = set(overrides) - set(default_space(kind).names)
            if extra:
                raise ConfigError(f"space.{kind}: unknown parameter(s) {', '.join(sorted(extra))}")
        for kind, values in self.params.items():
            extra = set(values) - set(DEFAULT_PARAMS[kind])
            if extra:
                raise ConfigError(f"params.{kind}: unknown parameter(s) {', '.join(sorted(extra))}")

    def feature_schema(self) -> FeatureSchema:
        """Configured metric columns; empty means the default CK list."""
        return FeatureSchema(self.schema) if self.schema else FeatureSchema()

    # ------------------------------------------------------------------
    def space_for(self, kind: str) -> ParamSpace:
        overrides: Dict[str, Domain] = {}
        for name, value in self.space.get(kind, {}).items():
            if isinstance(value, (list, tuple)):
                overrides[name] = Choice(tuple(value))
            else:
                overrides[name] = parse_domain(str(value))
        return default_space(kind).with_overrides(overrides)

    def fixed_point(self, kind: str) -> Dict[str, Any]:
        return {**DEFAULT_PARAMS[kind], **self.params.get(kind, {})}

    def to_dict(self) -> Dict[str, Any]:
        d = asdict(self)
        for key in ("datasets", "selectors", "models", "tuners", "schema"):
            d[key] = list(d[key])
        return d


# ----------------------------
# YAML loading
# ----------------------------

_BLOCKS = {"selector": SelectorConfig, "adasyn": AdasynConfig, "ga": GaConfig}


def load_yaml(path: str | Path) -> Dict[str, Any]:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"File not found: {p}")
    data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"{p}: top level must be a mapping")
    return data


def _resolve_file_path(filename: str, config_dir: Path) -> str:
    for candidate in (Path(filename), config_dir / filename):
        if candidate.exists():
            return str(candidate)
    return filename


def _block(cls: type, current: Any, values: Any, where: str) -> Any:
    if not isinstance(values, Mapping):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
    try:
        return replace(current, **values)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{where}: {e}") from e


def config_from_mapping(
    data: Mapping[str, Any], base: Optional[ExperimentConfig] = None, config_dir: Optional[Path] = None
) -> ExperimentConfig:
    base = base or ExperimentConfig()
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    updates: Dict[str, Any] = {}
    for key, value in data.items():
        if key in _BLOCKS:
            updates[key] = _block(_BLOCKS[key], getattr(base, key), value, key)
        elif key == "datasets":
            paths: List[str] = [value] if isinstance(value, str) else list(value)
            updates[key] = tuple(_resolve_file_path(p, config_dir or Path(".")) for p in paths)
        else:
            updates[key] = value
    try:
        return replace(base, **updates)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_config(path: str | Path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    p = Path(path)
    cfg = config_from_mapping(load_yaml(p), base=base, config_dir=p.parent)
    _logger.info("loaded config %s", p)
    return cfg
