"""Regression evaluation: MSE, SSE, SST, R-squared, and Pearson R."""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DataError, UndefinedMetricError

__all__ = [
    "EvalReport",
    "mse",
    "sse",
    "sst",
    "r_squared",
    "r_value",
    "evaluate",
]


def _pair(yhat, y):
    yhat = np.asarray(yhat, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if yhat.size == 0 or y.size == 0:
        raise DataError("empty prediction/target arrays")
    if yhat.shape != y.shape:
        raise DataError(f"length mismatch: {yhat.size} predictions vs {y.size} targets")
    if not (np.isfinite(yhat).all() and np.isfinite(y).all()):
        raise DataError("non-finite values in predictions or targets")
    return yhat, y


def sse(yhat, y) -> float:
    """Sum of squared errors sum((yhat_i - y_i)^2)."""
    yhat, y = _pair(yhat, y)
    return float(np.sum((yhat - y) ** 2))


def sst(y) -> float:
    """Total sum of squares sum((mean(y) - y_i)^2)."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size == 0:
        raise DataError("empty target array")
    return float(np.sum((y - y.mean()) ** 2))


def mse(yhat, y) -> float:
    """Mean squared error (1/n) sum((yhat_i - y_i)^2)."""
    yhat, y = _pair(yhat, y)
    return sse(yhat, y) / y.size


def r_squared(yhat, y) -> float:
    """Coefficient of determination 1 - SSE/SST; negative when worse than the mean."""
    yhat, y = _pair(yhat, y)
    if y.size < 2:
        raise UndefinedMetricError("a single sample has zero variance; R^2 undefined")
    total = sst(y)
    if total == 0.0:
        raise UndefinedMetricError("targets have zero variance; R^2 undefined")
    return 1.0 - sse(yhat, y) / total


def r_value(yhat, y) -> float:
    """Pearson correlation between predictions and targets."""
    yhat, y = _pair(yhat, y)
    if y.size < 2:
        raise UndefinedMetricError("a single sample has zero variance; R undefined")
    dy = yhat - yhat.mean()
    dt = y - y.mean()
    denom = np.linalg.norm(dy) * np.linalg.norm(dt)
    if denom == 0.0:
        raise UndefinedMetricError("zero variance in predictions or targets; R undefined")
    return float(np.clip(dy @ dt / denom, -1.0, 1.0))


@dataclass
class EvalReport:
    """One evaluation on one scale ("normalized" targets or "usd" prices)."""

    mse: float
    sse: float
    sst: float
    r_squared: float | None
    r_value: float | None
    n: int
    scale: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def evaluate(yhat, y, scale: str = "normalized") -> EvalReport:
    """Full report; correlation fields are None when the target is degenerate."""
    if scale not in ("normalized", "usd"):
        raise DataError(f"unknown scale tag {scale!r}")
    yhat, y = _pair(yhat, y)
    try:
        r2 = r_squared(yhat, y)
    except UndefinedMetricError:
        r2 = None
    try:
        r = r_value(yhat, y)
    except UndefinedMetricError:
        r = None
    return EvalReport(
        mse=mse(yhat, y),
        sse=sse(yhat, y),
        sst=sst(y),
        r_squared=r2,
        r_value=r,
        n=int(y.size),
        scale=scale,
    )
