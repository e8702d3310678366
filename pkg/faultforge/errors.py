"""errors.py

Exception hierarchy for faultforge.

Every error derives from FaultForgeError and from the builtin it refines, so
callers may catch either ``FaultForgeError`` or e.g. ``ValueError``.
"""

from __future__ import annotations

from typing import Optional, Sequence


class FaultForgeError(Exception):
    """Base class of every faultforge error."""


# ----------------------------
# Input / configuration
# ----------------------------

class ConfigError(FaultForgeError, ValueError):
    pass


class SchemaError(FaultForgeError, ValueError):
    pass


class CorpusParseError(FaultForgeError, ValueError):
    def __init__(self, path: str, row: int, column: str, value: str, reason: str = "not a number"):
        self.path = path
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"{path}: row {row}, column '{column}': {reason} ({value!r})")


# ----------------------------
# Numerical
# ----------------------------

class UnimputableFeatureError(FaultForgeError, ValueError):
    def __init__(self, feature: int):
        self.feature = feature
        super().__init__(f"feature {feature} is missing in every training row; cannot impute")


class StratificationError(FaultForgeError, ValueError):
    def __init__(self, label: int, count: int, k: int):
        self.label = label
        self.count = count
        self.k = k
        super().__init__(
            f"stratification infeasible: class {label} has {count} members, fewer than k={k}"
        )


class ConvergenceError(FaultForgeError, RuntimeError):
    def __init__(
        self,
        message: str,
        *,
        iterations: int,
        objective: Optional[float] = None,
        violations: Optional[int] = None,
    ):
        self.iterations = iterations
        self.objective = objective
        self.violations = violations
        detail = [f"iterations={iterations}"]
        if objective is not None:
            detail.append(f"objective={objective:.6g}")
        if violations is not None:
            detail.append(f"violations={violations}")
        super().__init__(f"{message} ({', '.join(detail)})")


class EmptySelectionError(FaultForgeError, ValueError):
    def __init__(self, method: str, advice: str):
        self.method = method
        super().__init__(f"{method} selected no features; {advice}")


class GridInfeasibleError(FaultForgeError, ValueError):
    def __init__(self, dims: Sequence[str]):
        self.dims = list(dims)
        super().__init__(
            "grid search needs finite domains; interval dimension(s): " + ", ".join(self.dims)
        )


# ----------------------------
# Pipeline
# ----------------------------

class LeakageError(FaultForgeError, RuntimeError):
    def __init__(self, rows: Sequence[int]):
        self.rows = sorted(int(r) for r in rows)
        shown = ", ".join(str(r) for r in self.rows[:10])
        super().__init__(f"fit phase touched {len(self.rows)} test row(s): {shown}")


class FoldError(FaultForgeError, RuntimeError):
    def __init__(self, fold: int, cause: BaseException):
        self.fold = fold
        self.cause = cause
        super().__init__(f"fold {fold}: {type(cause).__name__}: {cause}")
