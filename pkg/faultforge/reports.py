"""reports.py

Report tree for a RunLedger:

  <out>/tables/folds.csv               one row per (cell, fold)
  <out>/tables/summary_<selector>.csv  one row per (model, tuner[, project])
  <out>/tables/tuning_comparison.csv   accuracy without tuning vs GS / RS / GA
  <out>/tables/overfitting.csv         train vs test accuracy per model
  <out>/figures/f1_by_selector.svg
  <out>/figures/accuracy_by_tuner.svg
  <out>/figures/train_vs_test_accuracy.svg
  <out>/ledger.jsonl                   one cell per line

Floats are written with a fixed format so equal runs give identical tables
(timing columns aside). Every bar in the SVG figures carries the id
``bar:<group>:<series>``.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from .pipeline import CellResult, RunLedger  # noqa: E402

_logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.6f"
TUNER_COLUMNS = {"none": "No-Tune", "grid": "GS", "random": "RS", "ga": "GA"}
FOLD_COLUMNS = [
    "model", "selector", "tuner", "fold", "accuracy", "precision", "recall", "f1",
    "train_s", "test_s", "tune_s", "train_accuracy", "project",
]

plt.rcParams["svg.hashsalt"] = "faultforge"


# ----------------------------
# Tables
# ----------------------------

def folds_frame(ledger: RunLedger) -> pd.DataFrame:
    rows = []
    for cell in ledger.ok():
        for f in cell.folds:
            m = f.metrics
            rows.append(
                [
                    cell.key.model, cell.key.selector, cell.key.tuner, f.fold,
                    m.accuracy, m.precision, m.recall, m.f1,
                    m.train_seconds, m.test_seconds, m.tune_seconds, m.train_accuracy,
                    cell.key.project,
                ]
            )
    return pd.DataFrame(rows, columns=FOLD_COLUMNS)


def _cell_row(cell: CellResult) -> Dict[str, Any]:
    row: Dict[str, Any] = {"model": cell.key.model, "tuner": cell.key.tuner, "project": cell.key.project}
    if cell.ok:
        mean, std, total = cell.report.mean, cell.report.std, cell.report.total_seconds
        row.update(
            accuracy=mean["accuracy"], precision=mean["precision"], recall=mean["recall"], f1=mean["f1"],
            accuracy_std=std["accuracy"],
            train_s=total["train_seconds"], test_s=total["test_seconds"], tune_s=total["tune_seconds"],
            status="ok",
        )
    else:
        row["status"] = "failed"
    return row


def summary_frames(ledger: RunLedger) -> Dict[str, pd.DataFrame]:
    cols = [
        "model", "tuner", "accuracy", "precision", "recall", "f1", "accuracy_std",
        "train_s", "test_s", "tune_s", "project", "status",
    ]
    out: Dict[str, List[Dict[str, Any]]] = {}
    for cell in ledger:
        out.setdefault(cell.key.selector, []).append(_cell_row(cell))
    return {sel: pd.DataFrame(rows).reindex(columns=cols) for sel, rows in out.items()}


def _mean_metric(cells: Sequence[CellResult], metric: str) -> float:
    values = [c.report.mean[metric] for c in cells if c.ok]
    return float(np.mean(values)) if values else float("nan")


def tuning_frame(ledger: RunLedger) -> pd.DataFrame:
    cells = list(ledger)
    baseline = {(c.key.model, c.key.project): c for c in cells if c.key.selector == "none" and c.key.tuner == "none"}
    groups: Dict[Tuple[str, str, str], Dict[str, CellResult]] = {}
    for c in cells:
        if c.key.selector == "none":
            continue
        groups.setdefault((c.key.model, c.key.selector, c.key.project), {})[c.key.tuner] = c
    rows = []
    for (model, selector, project), by_tuner in groups.items():
        row: Dict[str, Any] = {"model": model, "selector": selector, "project": project}
        no_tune = by_tuner.get("none") or baseline.get((model, project))
        row["No-Tune"] = _mean_metric([no_tune], "accuracy") if no_tune else float("nan")
        for tuner in ("grid", "random", "ga"):
            c = by_tuner.get(tuner)
            row[TUNER_COLUMNS[tuner]] = _mean_metric([c], "accuracy") if c else float("nan")
        rows.append(row)
    return pd.DataFrame(rows, columns=["model", "selector", "No-Tune", "GS", "RS", "GA", "project"])


def overfitting_frame(ledger: RunLedger) -> pd.DataFrame:
    rows = []
    models = sorted({c.key.model for c in ledger})
    for model in models:
        mine = [c for c in ledger.ok() if c.key.model == model]
        base = [c for c in mine if c.key.selector == "none" and c.key.tuner == "none"]
        source = "baseline" if base else "all-cells"
        chosen = base or mine
        train_acc = _mean_metric(chosen, "train_accuracy")
        test_acc = _mean_metric(chosen, "accuracy")
        rows.append(
            {"model": model, "train_accuracy": train_acc, "test_accuracy": test_acc,
             "gap": train_acc - test_acc, "source": source}
        )
    return pd.DataFrame(rows, columns=["model", "train_accuracy", "test_accuracy", "gap", "source"])


# ----------------------------
# Figures
# ----------------------------

def grouped_bar_svg(
    path: Path,
    groups: Sequence[str],
    series: Sequence[str],
    values: Mapping[Tuple[str, str], float],
    *,
    title: str,
    ylabel: str,
) -> Path:
    """Grouped bars; missing or NaN values are drawn as zero-height bars."""
    fig, ax = plt.subplots(figsize=(max(4.0, 1.6 * len(groups) + 2), 4.0))
    width = 0.8 / max(1, len(series))
    x = np.arange(len(groups))
    for s_i, s in enumerate(series):
        heights = [values.get((g, s), float("nan")) for g in groups]
        heights = [0.0 if not np.isfinite(h) else h for h in heights]
        bars = ax.bar(x + (s_i - (len(series) - 1) / 2) * width, heights, width, label=s)
        for g, patch in zip(groups, bars.patches):
            patch.set_gid(f"bar:{g}:{s}")
    ax.set_xticks(x)
    ax.set_xticklabels(groups)
    ax.set_ylim(0.0, 1.0)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _is_baseline(c: CellResult) -> bool:
    return c.key.selector == "none" and c.key.tuner == "none"


def _by(ledger: RunLedger, group_attr: str, series_attr: str, metric: str):
    cells = ledger.ok()
    # baseline cells only feed these charts when nothing else succeeded
    if any(not _is_baseline(c) for c in cells):
        cells = [c for c in cells if not _is_baseline(c)]
    buckets: Dict[Tuple[str, str], List[CellResult]] = {}
    for c in cells:
        buckets.setdefault((getattr(c.key, group_attr), getattr(c.key, series_attr)), []).append(c)
    values = {k: _mean_metric(v, metric) for k, v in buckets.items()}
    groups = list(dict.fromkeys(k[0] for k in buckets))
    series = list(dict.fromkeys(k[1] for k in buckets))
    return groups, series, values


def write_figures(ledger: RunLedger, out: Path) -> List[Path]:
    fig_dir = out / "figures"
    paths = []
    groups, series, values = _by(ledger, "selector", "model", "f1")
    paths.append(grouped_bar_svg(fig_dir / "f1_by_selector.svg", groups, series, values,
                                 title="F1 by feature selector", ylabel="mean F1"))
    groups, series, values = _by(ledger, "tuner", "model", "accuracy")
    paths.append(grouped_bar_svg(fig_dir / "accuracy_by_tuner.svg", groups, series, values,
                                 title="Accuracy by tuner", ylabel="mean accuracy"))
    over = overfitting_frame(ledger)
    tv = {}
    for _, row in over.iterrows():
        tv[(row["model"], "train")] = row["train_accuracy"]
        tv[(row["model"], "test")] = row["test_accuracy"]
    paths.append(grouped_bar_svg(fig_dir / "train_vs_test_accuracy.svg", list(over["model"]), ["train", "test"], tv,
                                 title="Train vs test accuracy", ylabel="accuracy"))
    return paths


# ----------------------------
# Ledger
# ----------------------------

def write_ledger(ledger: RunLedger, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        for cell in ledger:
            f.write(json.dumps(cell.to_record(ledger.feature_names), ensure_ascii=False, sort_keys=True) + "\n")
    return path


def read_ledger(path: str | Path) -> List[Dict[str, Any]]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line:
            records.append(json.loads(line))
    return records


# ----------------------------
# Entry point
# ----------------------------

def emit_reports(ledger: RunLedger, out: str | Path) -> List[Path]:
    if len(ledger) == 0:
        raise ValueError("cannot report an empty ledger")
    out = Path(out)
    tables = out / "tables"
    try:
        tables.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise OSError(f"cannot create report directory {tables}: {e}") from e

    written: List[Path] = []

    def save(frame: pd.DataFrame, name: str) -> None:
        p = tables / name
        frame.to_csv(p, index=False, float_format=FLOAT_FORMAT, na_rep="")
        written.append(p)

    save(folds_frame(ledger), "folds.csv")
    for selector, frame in summary_frames(ledger).items():
        save(frame, f"summary_{selector}.csv")
    save(tuning_frame(ledger), "tuning_comparison.csv")
    save(overfitting_frame(ledger), "overfitting.csv")
    written.extend(write_figures(ledger, out))
    written.append(write_ledger(ledger, out / "ledger.jsonl"))
    _logger.info("wrote %d report file(s) under %s", len(written), out)
    return written
