"""pipeline.py

One fold, one cell, the full matrix.

Per fold, on the training partition only:
  impute -> scale -> select features -> ADASYN -> tune (inner 3-fold CV) -> final fit
and on the test partition:
  apply imputer -> apply scaler -> apply subset -> predict

Every row access goes through ``Dataset.take`` with an AccessLog, and each fit
step (imputer, scaler, selector, ADASYN, tuner, model) records the dataset rows
behind the matrix it is handed. A fold whose fit steps touched a row outside
the plan's training partition fails with LeakageError.

A cell is (selector, model, tuner, project). Cells and folds are scheduled
together on a joblib pool; failures are isolated per cell and the ledger is
reduced in canonical key order.

Seeds
  fold plan   derive_seed(master, "folds", project)  shared by every cell of a project
  fold step   derive_seed(master, cell.label, "fold", i, purpose)
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from .classifiers import ForestModel, predict, train
from .config import ExperimentConfig
from .corpus import AccessLog, Dataset, deduplicate, load_csv, pool
from .crossval import FoldPlan, fold_split, stratified_folds
from .errors import FaultForgeError, FoldError, LeakageError
from .evaluation import EvaluationReport, FoldMetrics, aggregate, confusion, metrics
from .feature_selection import select
from .preprocess import apply_imputer, apply_scaler, fit_imputer, fit_scaler
from .resample import adasyn
from .search import cross_validated_fitness, tune
from .seeds import derive_seed

_logger = logging.getLogger(__name__)

POOLED = "pooled"
SYNTHETIC_TAG = "synthetic"


@dataclass(frozen=True, order=True)
class CellKey:
    selector: str
    model: str
    tuner: str
    project: str = POOLED

    @property
    def label(self) -> str:
        return f"{self.selector}|{self.model}|{self.tuner}|{self.project}"

    def as_dict(self) -> Dict[str, str]:
        return {"selector": self.selector, "model": self.model, "tuner": self.tuner, "project": self.project}


@dataclass(frozen=True)
class FoldResult:
    fold: int
    metrics: Optional[FoldMetrics] = None
    point: Dict[str, Any] = field(default_factory=dict)
    features: Tuple[str, ...] = ()
    importances: Optional[Tuple[float, ...]] = None
    n_synthetic: int = 0
    evals: int = 0
    fit_rows: Tuple[int, ...] = ()
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass(frozen=True)
class CellResult:
    key: CellKey
    folds: Tuple[FoldResult, ...]
    report: Optional[EvaluationReport] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def mean_importances(self, feature_names: Sequence[str]) -> Optional[Dict[str, float]]:
        rows = [f.importances for f in self.folds if f.importances is not None]
        if not rows:
            return None
        mean = np.mean(np.array(rows, dtype=float), axis=0)
        return {name: float(v) for name, v in zip(feature_names, mean)}

    def to_record(self, feature_names: Sequence[str] = ()) -> Dict[str, Any]:
        rec: Dict[str, Any] = {**self.key.as_dict(), "status": "ok" if self.ok else "failed"}
        if self.error:
            rec["error"] = self.error
        if self.report is not None:
            rec.update(
                mean=self.report.mean,
                std=self.report.std,
                total_seconds=self.report.total_seconds,
                flags=list(self.report.flags),
                fingerprint=self.report.fingerprint,
            )
        rec["folds"] = [
            {
                "fold": f.fold,
                "point": f.point,
                "features": list(f.features),
                "n_synthetic": f.n_synthetic,
                "evals": f.evals,
                **({"error": f.error} if f.error else {}),
            }
            for f in self.folds
        ]
        imp = self.mean_importances(feature_names) if feature_names else None
        if imp is not None:
            rec["feature_importances"] = imp
        return rec


@dataclass
class RunLedger:
    cells: Dict[CellKey, CellResult] = field(default_factory=dict)
    feature_names: Tuple[str, ...] = ()
    config: Dict[str, Any] = field(default_factory=dict)

    def add(self, result: CellResult) -> None:
        if result.key in self.cells:
            raise ValueError(f"cell {result.key.label} already in the ledger")
        self.cells[result.key] = result

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[CellResult]:
        for key in sorted(self.cells):
            yield self.cells[key]

    def __getitem__(self, key: CellKey) -> CellResult:
        return self.cells[key]

    def ok(self) -> List[CellResult]:
        return [c for c in self if c.ok]

    def failed(self) -> List[CellResult]:
        return [c for c in self if not c.ok]


# ----------------------------
# Data preparation
# ----------------------------

def load_projects(cfg: ExperimentConfig) -> Dict[str, Dataset]:
    """Datasets keyed by project tag: one "pooled" entry, or one per file."""
    if not cfg.datasets:
        raise FaultForgeError("no datasets given")
    loaded: Dict[str, Dataset] = {}
    for path in cfg.datasets:
        d = load_csv(path, cfg.feature_schema())
        if cfg.dedup:
            d = deduplicate(d)
        tags = set(d.provenance.tolist())
        tag = tags.pop() if len(tags) == 1 else Path(path).stem
        if tag in loaded:
            raise FaultForgeError(f"project {tag!r} given twice")
        loaded[tag] = d
    if cfg.pool:
        return {POOLED: pool(list(loaded.values()))}
    return loaded


def resample_globally(d: Dataset, cfg: ExperimentConfig, project: str) -> Dataset:
    """Impute, scale and oversample the whole dataset before CV (leaky ablation)."""
    X = apply_imputer(fit_imputer(d.X, cfg.imputer_k), d.X)
    X = apply_scaler(fit_scaler(X), X)
    res = adasyn(X, d.y, replace(cfg.adasyn, seed=derive_seed(cfg.seed, "global-adasyn", project)))
    _logger.warning("global resampling: %d synthetic rows added before CV (test folds see them)", res.n_synthetic)
    n_syn = res.n_synthetic
    return Dataset(
        schema=d.schema,
        X=res.X,
        y=res.y,
        provenance=np.concatenate([d.provenance, np.array([SYNTHETIC_TAG] * n_syn, dtype=object)]),
        class_names=np.concatenate([d.class_names, np.array([""] * n_syn, dtype=object)]),
        bug_counts=np.concatenate([d.bug_counts, res.y[d.n :]]),
    )


def plan_folds(cfg: ExperimentConfig, d: Dataset, project: str) -> FoldPlan:
    return stratified_folds(d.y, cfg.k_folds, derive_seed(cfg.seed, "folds", project))


def check_leakage(log: AccessLog, train_idx: np.ndarray) -> Tuple[int, ...]:
    """Fit rows of every step (phases "fit" and "fit:<step>") must lie in ``train_idx``."""
    allowed = set(int(i) for i in train_idx)
    leaked: set = set()
    for phase in log.phases():
        if phase == "fit" or phase.startswith("fit:"):
            leaked |= log.rows(phase) - allowed
    if leaked:
        raise LeakageError(leaked)
    return tuple(sorted(log.rows("fit")))


def _observe(log: AccessLog, step: str, rows: np.ndarray) -> None:
    # dataset rows behind the matrix handed to a fit step; synthetic rows are -1
    real = rows[rows >= 0]
    log.record("fit", real)
    log.record(f"fit:{step}", real)


# ----------------------------
# One fold
# ----------------------------

def run_fold(
    cfg: ExperimentConfig,
    data: Dataset,
    plan: FoldPlan,
    fold: int,
    cell: CellKey,
    *,
    resample: bool = True,
) -> FoldResult:
    """Run one outer fold of ``cell``; any failure is raised as FoldError."""
    try:
        return _run_fold(cfg, data, plan, fold, cell, resample)
    except FoldError:
        raise
    except Exception as e:
        raise FoldError(fold, e) from e


def _run_fold(
    cfg: ExperimentConfig, data: Dataset, plan: FoldPlan, fold: int, cell: CellKey, resample: bool
) -> FoldResult:
    train_idx, test_idx = fold_split(plan, fold)
    allowed = np.flatnonzero(plan.assignments != fold)

    def seed(purpose: str) -> int:
        return derive_seed(cfg.seed, cell.label, "fold", fold, purpose)

    log = AccessLog()
    X_raw, y_train = data.take(train_idx, log, "fit")
    rows = np.asarray(train_idx, dtype=np.int64)
    _observe(log, "imputer", rows)
    imputer = fit_imputer(X_raw, cfg.imputer_k)
    X_train = apply_imputer(imputer, X_raw)
    _observe(log, "scaler", rows)
    scaler = fit_scaler(X_train)
    X_train = apply_scaler(scaler, X_train)

    _observe(log, "selector", rows)
    subset = select(cell.selector, X_train, y_train, replace(cfg.selector, seed=seed("selector")))
    X_train = subset.apply(X_train)

    n_synthetic = 0
    X_fit, y_fit, fit_rows_all = X_train, y_train, rows
    if resample:
        _observe(log, "adasyn", rows)
        res = adasyn(X_train, y_train, replace(cfg.adasyn, seed=seed("adasyn")))
        X_fit, y_fit, n_synthetic = res.X, res.y, res.n_synthetic
        fit_rows_all = np.concatenate([rows, np.full(n_synthetic, -1, dtype=np.int64)])

    tune_seconds, evals = 0.0, 0
    if cell.tuner == "none":
        point = cfg.fixed_point(cell.model)
    else:
        _observe(log, "tuner", fit_rows_all)
        fitness = cross_validated_fitness(cell.model, X_fit, y_fit, seed("inner"))
        t0 = time.perf_counter()
        found = tune(
            cell.tuner,
            cfg.space_for(cell.model),
            fitness,
            budget=cfg.tuner_budget,
            ga=cfg.ga,
            seed=seed("tuner"),
        )
        tune_seconds = time.perf_counter() - t0
        point, evals = dict(found.point), found.evals

    _observe(log, "model", fit_rows_all)
    t0 = time.perf_counter()
    model = train(cell.model, X_fit, y_fit, point, seed=seed("model"))
    train_seconds = time.perf_counter() - t0
    train_accuracy = float(np.mean(predict(model, X_train) == y_train))

    X_test, y_test = data.take(test_idx, log, "apply")
    X_test = subset.apply(apply_scaler(scaler, apply_imputer(imputer, X_test)))
    t0 = time.perf_counter()
    y_pred = predict(model, X_test)
    test_seconds = time.perf_counter() - t0

    fit_rows = check_leakage(log, allowed)

    importances = None
    if isinstance(model, ForestModel):
        full = np.zeros(data.p)
        full[list(subset.indices)] = model.feature_importances
        importances = tuple(float(v) for v in full)

    m = metrics(
        confusion(y_test, y_pred),
        train_seconds=train_seconds,
        test_seconds=test_seconds,
        tune_seconds=tune_seconds,
        train_accuracy=train_accuracy,
    )
    _logger.debug("%s fold %d: acc=%.4f f1=%.4f", cell.label, fold, m.accuracy, m.f1)
    return FoldResult(
        fold=fold,
        metrics=m,
        point=point,
        features=tuple(subset.names(data.schema.names)),
        importances=importances,
        n_synthetic=n_synthetic,
        evals=evals,
        fit_rows=fit_rows,
    )


def _fold_task(
    cfg: ExperimentConfig, data: Dataset, plan: FoldPlan, fold: int, cell: CellKey, resample: bool
) -> Tuple[CellKey, FoldResult]:
    try:
        return cell, run_fold(cfg, data, plan, fold, cell, resample=resample)
    except FoldError as e:
        _logger.error("%s: %s", cell.label, e)
        return cell, FoldResult(fold=fold, error=str(e))


# ----------------------------
# Matrix
# ----------------------------

def matrix_cells(cfg: ExperimentConfig, projects: Sequence[str]) -> List[CellKey]:
    cells: List[CellKey] = []
    for project in projects:
        for selector in cfg.selectors:
            for model in cfg.models:
                for tuner in cfg.tuners:
                    cells.append(CellKey(selector, model, tuner, project))
        if cfg.baseline:
            for model in cfg.models:
                key = CellKey("none", model, "none", project)
                if key not in cells:
                    cells.append(key)
    return cells


def _cell_config(cfg: ExperimentConfig, cell: CellKey, plan: FoldPlan, folds: Sequence[FoldResult]) -> Dict[str, Any]:
    return {
        **cell.as_dict(),
        "seed": cfg.seed,
        "k_folds": plan.k,
        "fold_seed": plan.seed,
        "selector_config": cfg.selector.__dict__,
        "adasyn": cfg.adasyn.__dict__,
        "ga": cfg.ga.__dict__ if cell.tuner == "ga" else None,
        "tuner_budget": cfg.tuner_budget if cell.tuner == "random" else None,
        "global_resample": cfg.global_resample,
        "points": [f.point for f in folds],
        "features": [list(f.features) for f in folds],
    }


def reduce_cell(cfg: ExperimentConfig, cell: CellKey, plan: FoldPlan, folds: Sequence[FoldResult]) -> CellResult:
    folds = tuple(sorted(folds, key=lambda f: f.fold))
    failed = [f for f in folds if not f.ok]
    if failed:
        return CellResult(key=cell, folds=folds, error=failed[0].error)
    report = aggregate([f.metrics for f in folds], config=_cell_config(cfg, cell, plan, folds), k=plan.k)
    return CellResult(key=cell, folds=folds, report=report)


def run_matrix(
    cfg: ExperimentConfig,
    projects: Optional[Mapping[str, Dataset]] = None,
    cells: Optional[Sequence[CellKey]] = None,
) -> RunLedger:
    projects = dict(projects) if projects is not None else load_projects(cfg)
    if cfg.global_resample:
        projects = {tag: resample_globally(d, cfg, tag) for tag, d in projects.items()}
    plans = {tag: plan_folds(cfg, d, tag) for tag, d in projects.items()}
    cells = list(cells) if cells is not None else matrix_cells(cfg, list(projects))

    tasks = [(cell, fold) for cell in cells for fold in range(plans[cell.project].k)]
    _logger.info("matrix: %d cell(s), %d fold task(s), %d job(s)", len(cells), len(tasks), cfg.jobs)
    results = Parallel(n_jobs=cfg.jobs)(
        delayed(_fold_task)(
            cfg, projects[cell.project], plans[cell.project], fold, cell, not cfg.global_resample
        )
        for cell, fold in tasks
    )

    by_cell: Dict[CellKey, List[FoldResult]] = {cell: [] for cell in cells}
    for cell, result in results:
        by_cell[cell].append(result)

    first = next(iter(projects.values()))
    ledger = RunLedger(feature_names=first.schema.names, config=cfg.to_dict())
    for cell in sorted(by_cell):
        result = reduce_cell(cfg, cell, plans[cell.project], by_cell[cell])
        ledger.add(result)
        if result.ok:
            _logger.info("%s: accuracy %.4f", cell.label, result.report.mean["accuracy"])
        else:
            _logger.warning("%s: FAILED %s", cell.label, result.error)
    return ledger


def run_cell(
    cfg: ExperimentConfig, selector: str, model: str, tuner: str, projects: Optional[Mapping[str, Dataset]] = None
) -> RunLedger:
    """Single (selector, model, tuner) cell over every project."""
    cfg = replace(cfg, selectors=(selector,), models=(model,), tuners=(tuner,), baseline=False)
    return run_matrix(cfg, projects)
