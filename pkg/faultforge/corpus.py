"""corpus.py

PROMISE-style CK-metric datasets: loading, validation, binarisation,
deduplication and the per-project summary (instances / defective / rate).

CSV layout
  name,version,name,wmc,dit,...,avg_cc,bug
  ant,1.7,org.apache.tools.ant.Main,12,3,...,1.25,2

  - up to three leading identifier columns, read right-to-left as
    class name, version, project (PROMISE exports carry all three)
  - then exactly the schema's metric columns, in schema order
  - final column: integer bug count (bug / bugs / defects / bug_count)
  - missing cells: "" or "?"

When the project/version columns are absent they are taken from the file
name, e.g. ``ant-1.7.csv`` -> project ``ant``, version ``1.7``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import yaml

from .errors import CorpusParseError, SchemaError

_logger = logging.getLogger(__name__)

DEFAULT_FEATURES: Tuple[str, ...] = (
    "wmc", "dit", "noc", "cbo", "rfc", "lcom", "ca", "ce", "npm", "lcom3",
    "loc", "dam", "moa", "mfa", "cam", "ic", "cbm", "amc", "max_cc", "avg_cc",
)

DEFECT_COLUMNS = ("bug", "bugs", "defects", "defect", "bug_count")
MISSING_TOKENS = ("", "?")
MAX_ID_COLUMNS = 3

REFERENCE_PATH = Path(__file__).with_name("data") / "promise_reference.yaml"


# ----------------------------
# Types
# ----------------------------

@dataclass(frozen=True)
class FeatureSchema:
    names: Tuple[str, ...] = DEFAULT_FEATURES

    def __post_init__(self) -> None:
        names = tuple(str(n).strip() for n in self.names)
        if not names:
            raise SchemaError("feature schema is empty")
        if any(not n for n in names):
            raise SchemaError("feature names must be non-empty")
        lowered = [n.lower() for n in names]
        if len(set(lowered)) != len(lowered):
            dupes = sorted({n for n in lowered if lowered.count(n) > 1})
            raise SchemaError(f"duplicate feature names: {', '.join(dupes)}")
        object.__setattr__(self, "names", names)

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return [n.lower() for n in self.names].index(name.lower())


@dataclass(frozen=True)
class MetricRow:
    project_id: str
    version: str
    class_name: str
    metrics: Tuple[float, ...]
    bug_count: int

    def __post_init__(self) -> None:
        if self.bug_count < 0:
            raise ValueError(f"bug_count must be >= 0, got {self.bug_count}")

    @property
    def tag(self) -> str:
        return f"{self.project_id}-{self.version}" if self.version else self.project_id


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable feature matrix + binary fault labels + provenance.

    ``X`` may hold NaN for missing cells. ``provenance`` holds one
    ``project-version`` tag per row.
    """

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray
    provenance: np.ndarray
    class_names: np.ndarray = field(default=None)  # type: ignore[assignment]
    bug_counts: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        X = np.array(self.X, dtype=float, copy=True).reshape(-1, len(self.schema))
        y = np.array(self.y, dtype=np.int64, copy=True).reshape(-1)
        n = X.shape[0]
        if y.shape[0] != n:
            raise ValueError(f"X has {n} rows but y has {y.shape[0]} labels")
        if n and not np.isin(y, (0, 1)).all():
            raise ValueError("labels must be 0 (non-faulty) or 1 (faulty)")
        prov = np.array(self.provenance, dtype=object).reshape(-1)
        if prov.shape[0] != n:
            raise ValueError("provenance length must equal row count")
        names = self.class_names
        names = np.array([""] * n, dtype=object) if names is None else np.array(names, dtype=object)
        bugs = self.bug_counts
        bugs = y.copy() if bugs is None else np.array(bugs, dtype=np.int64).reshape(-1)
        for arr in (X, y, prov, names, bugs):
            arr.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "provenance", prov)
        object.__setattr__(self, "class_names", names)
        object.__setattr__(self, "bug_counts", bugs)

    @property
    def n(self) -> int:
        return int(self.X.shape[0])

    @property
    def p(self) -> int:
        return int(self.X.shape[1])

    @classmethod
    def from_rows(cls, rows: Iterable[MetricRow], schema: Optional[FeatureSchema] = None) -> "Dataset":
        schema = schema or FeatureSchema()
        rows = list(rows)
        for r in rows:
            if len(r.metrics) != len(schema):
                raise SchemaError(
                    f"row {r.class_name!r} has {len(r.metrics)} metrics, schema expects {len(schema)}"
                )
        X = np.array([r.metrics for r in rows], dtype=float).reshape(len(rows), len(schema))
        bugs = np.array([r.bug_count for r in rows], dtype=np.int64)
        return cls(
            schema=schema,
            X=X,
            y=(bugs > 0).astype(np.int64),
            provenance=np.array([r.tag for r in rows], dtype=object),
            class_names=np.array([r.class_name for r in rows], dtype=object),
            bug_counts=bugs,
        )

    def subset(self, indices: Sequence[int]) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset(
            schema=self.schema,
            X=self.X[idx],
            y=self.y[idx],
            provenance=self.provenance[idx],
            class_names=self.class_names[idx],
            bug_counts=self.bug_counts[idx],
        )

    def take(
        self,
        indices: Sequence[int],
        log: Optional["AccessLog"] = None,
        phase: str = "fit",
    ) -> Tuple[np.ndarray, np.ndarray]:
        """Copy out rows ``indices`` as (X, y), recording the access in ``log``."""
        idx = np.asarray(indices, dtype=np.int64)
        if log is not None:
            log.record(phase, idx)
        return self.X[idx].copy(), self.y[idx].copy()


class AccessLog:
    """Row indices touched per phase ("fit" / "apply")."""

    def __init__(self) -> None:
        self._rows: Dict[str, set] = {}

    def record(self, phase: str, indices: np.ndarray) -> None:
        self._rows.setdefault(phase, set()).update(int(i) for i in indices)

    def rows(self, phase: str) -> set:
        return set(self._rows.get(phase, set()))

    def phases(self) -> Tuple[str, ...]:
        return tuple(self._rows)


@dataclass(frozen=True)
class ProjectSummary:
    project: str
    instances: int
    defective: int
    rate: float

    def line(self) -> str:
        return f"{self.project} {self.instances} {self.defective} {self.rate:.3f}"


# ----------------------------
# Loading
# ----------------------------

def _split_tag(stem: str) -> Tuple[str, str]:
    project, sep, version = stem.rpartition("-")
    if not sep or not project:
        return stem, ""
    return project, version


def _validate_header(header: List[str], schema: FeatureSchema, path: str) -> int:
    """Return the number of leading identifier columns."""
    p = len(schema)
    if len(header) < p + 1:
        raise SchemaError(
            f"{path}: header has {len(header)} columns, expected at least {p + 1} "
            f"({p} metrics + defect column)"
        )
    defect = header[-1].strip().lower()
    if defect not in DEFECT_COLUMNS:
        raise SchemaError(
            f"{path}: last column '{header[-1]}' is not a defect column "
            f"(expected one of: {', '.join(DEFECT_COLUMNS)})"
        )
    metric_cols = [h.strip().lower() for h in header[-(p + 1):-1]]
    expected = [n.lower() for n in schema.names]
    if metric_cols != expected:
        mismatch = next(i for i, (a, b) in enumerate(zip(metric_cols, expected)) if a != b)
        raise SchemaError(
            f"{path}: metric column {mismatch + 1} is '{metric_cols[mismatch]}', "
            f"schema expects '{expected[mismatch]}'"
        )
    n_ids = len(header) - (p + 1)
    if n_ids > MAX_ID_COLUMNS:
        raise SchemaError(f"{path}: {n_ids} identifier columns before the metrics (max {MAX_ID_COLUMNS})")
    return n_ids


def load_csv(path: str | Path, schema: Optional[FeatureSchema] = None) -> Dataset:
    schema = schema or FeatureSchema()
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"Dataset file not found: {p}")
    try:
        raw = pd.read_csv(
            p,
            header=None,
            dtype=str,
            keep_default_na=False,
            encoding="utf-8",
            skip_blank_lines=True,
        )
    except pd.errors.EmptyDataError:
        raise SchemaError(f"{p}: file is empty (no header row)") from None
    except pd.errors.ParserError as e:
        raise SchemaError(f"{p}: {e}") from None

    header = [str(h) for h in raw.iloc[0].tolist()]
    n_ids = _validate_header(header, schema, str(p))
    body = raw.iloc[1:]
    n = len(body)

    file_project, file_version = _split_tag(p.stem)
    ids = body.iloc[:, :n_ids]
    class_col = ids.iloc[:, -1].str.strip() if n_ids >= 1 else pd.Series([""] * n)
    version_col = ids.iloc[:, -2].str.strip() if n_ids >= 2 else pd.Series([file_version] * n)
    project_col = ids.iloc[:, -3].str.strip() if n_ids >= 3 else pd.Series([file_project] * n)

    X = np.empty((n, len(schema)), dtype=float)
    for j in range(len(schema)):
        col_idx = n_ids + j
        cells = body.iloc[:, col_idx].str.strip()
        missing = cells.isin(MISSING_TOKENS)
        values = pd.to_numeric(cells.where(~missing), errors="coerce")
        bad = ~missing & ~np.isfinite(values.to_numpy(dtype=float, na_value=np.nan))
        if bad.any():
            first = bad.to_numpy().nonzero()[0][0]
            raise CorpusParseError(
                str(p), int(body.index[first]) + 1, header[col_idx], cells.iloc[first]
            )
        X[:, j] = values.to_numpy(dtype=float, na_value=np.nan)

    bug_cells = body.iloc[:, -1].str.strip()
    bugs = pd.to_numeric(bug_cells, errors="coerce").to_numpy(dtype=float, na_value=np.nan)
    bad = ~np.isfinite(bugs) | (bugs < 0) | (np.floor(bugs) != bugs)
    if bad.any():
        first = bad.nonzero()[0][0]
        raise CorpusParseError(
            str(p), int(body.index[first]) + 1, header[-1], bug_cells.iloc[first],
            reason="bug count must be a non-negative integer",
        )
    bugs_int = bugs.astype(np.int64)

    tags = [
        f"{proj}-{ver}" if ver else proj
        for proj, ver in zip(project_col.tolist(), version_col.tolist())
    ]
    d = Dataset(
        schema=schema,
        X=X,
        y=(bugs_int > 0).astype(np.int64),
        provenance=np.array(tags, dtype=object),
        class_names=np.array(class_col.tolist(), dtype=object),
        bug_counts=bugs_int,
    )
    _logger.debug("loaded %s: %d rows, %d defective", p.name, d.n, int(d.y.sum()))
    return d


def to_csv(d: Dataset, path: str | Path) -> Path:
    """Write ``d`` back in the PROMISE layout (missing cells as empty strings)."""
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    projects, versions = zip(*(_split_tag(t) for t in d.provenance)) if d.n else ((), ())
    frame = pd.DataFrame({"name": list(projects), "version": list(versions)})
    frame.insert(2, "class", list(d.class_names))
    for j, name in enumerate(d.schema.names):
        frame[name] = d.X[:, j]
    frame["bug"] = d.bug_counts
    frame = frame.rename(columns={"class": "name"})
    frame.to_csv(out, index=False, na_rep="", encoding="utf-8")
    return out


def pool(datasets: Sequence[Dataset]) -> Dataset:
    if not datasets:
        raise ValueError("nothing to pool")
    schema = datasets[0].schema
    for d in datasets[1:]:
        if d.schema.names != schema.names:
            raise SchemaError("cannot pool datasets with different feature schemas")
    return Dataset(
        schema=schema,
        X=np.vstack([d.X for d in datasets]),
        y=np.concatenate([d.y for d in datasets]),
        provenance=np.concatenate([d.provenance for d in datasets]),
        class_names=np.concatenate([d.class_names for d in datasets]),
        bug_counts=np.concatenate([d.bug_counts for d in datasets]),
    )


# ----------------------------
# Cleaning / summary
# ----------------------------

def deduplicate(d: Dataset) -> Dataset:
    """Collapse rows equal on every metric AND the label to their first occurrence."""
    if d.n == 0:
        return d
    frame = pd.DataFrame(d.X)
    frame["__label"] = d.y
    keep = ~frame.duplicated(keep="first").to_numpy()
    dropped = int((~keep).sum())
    if dropped:
        _logger.info("deduplicate: removed %d duplicate row(s) of %d", dropped, d.n)
    return d.subset(np.flatnonzero(keep))


def summarize(d: Dataset) -> List[ProjectSummary]:
    if d.n == 0:
        return []
    frame = pd.DataFrame({"project": d.provenance, "label": d.y})
    grouped = frame.groupby("project", sort=False)["label"].agg(["size", "sum"])
    return [
        ProjectSummary(
            project=str(project),
            instances=int(row["size"]),
            defective=int(row["sum"]),
            rate=round(int(row["sum"]) / int(row["size"]), 3),
        )
        for project, row in grouped.iterrows()
    ]


def summary_frame(summaries: Sequence[ProjectSummary]) -> pd.DataFrame:
    return pd.DataFrame(
        [(s.project, s.instances, s.defective, s.rate) for s in summaries],
        columns=["project", "instances", "defective", "rate"],
    )


# ----------------------------
# Reference counts
# ----------------------------

def load_reference(path: str | Path = REFERENCE_PATH) -> Dict[str, Dict[str, Any]]:
    """Reference per-project counts of the 19 PROMISE releases."""
    data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    return {str(k): v for k, v in (data.get("projects") or {}).items()}


def check_reference(
    summaries: Sequence[ProjectSummary],
    reference: Optional[Dict[str, Dict[str, Any]]] = None,
) -> List[Tuple[str, bool, str]]:
    """Compare loaded projects with the reference counts.

    Returns (project, ok, note) for every summary whose project is known.
    """
    reference = load_reference() if reference is None else reference
    out: List[Tuple[str, bool, str]] = []
    for s in summaries:
        ref = reference.get(s.project)
        if ref is None:
            continue
        want = (int(ref["instances"]), int(ref["defective"]))
        got = (s.instances, s.defective)
        if got == want:
            out.append((s.project, True, f"{got[0]} / {got[1]}"))
        else:
            out.append((s.project, False, f"expected {want[0]} / {want[1]}, got {got[0]} / {got[1]}"))
    return out
