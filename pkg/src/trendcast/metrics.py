"""Forecast accuracy metrics and their aggregation report.

All series arguments are (N, >=T) arrays (or nested sequences): N paired
actual/predicted weekly series, evaluated on the first T weeks, pooled
across products (micro-averaged).

Sign convention for the tracking signal: positive means the model
underestimates (actuals exceed forecasts), negative means it
overestimates; absolute values of 3.75 or more are flagged as
consistently biased.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, UndefinedMetricError, ValidationError

BIAS_THRESHOLD = 3.75


def _paired(actual, predicted, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    y = np.atleast_2d(np.asarray(actual, dtype=np.float64))
    yhat = np.atleast_2d(np.asarray(predicted, dtype=np.float64))
    if y.shape[0] != yhat.shape[0]:
        raise DimensionError(
            f"series sets differ in size: {y.shape[0]} actual vs {yhat.shape[0]} predicted")
    if horizon < 1:
        raise ValidationError(f"horizon must be >= 1, got {horizon}")
    if y.shape[1] < horizon or yhat.shape[1] < horizon:
        raise DimensionError(
            f"series shorter than horizon {horizon}: actual has {y.shape[1]} weeks, "
            f"predicted has {yhat.shape[1]}")
    return y[:, :horizon], yhat[:, :horizon]


def wape(actual, predicted, horizon: int) -> float:
    """Sum of absolute errors over the sum of actuals, pooled."""
    y, yhat = _paired(actual, predicted, horizon)
    denom = float(y.sum())
    if denom <= 0.0:
        raise UndefinedMetricError(
            "WAPE undefined: ground-truth total over the horizon is zero")
    return float(np.abs(y - yhat).sum() / denom)


def mae(actual, predicted, horizon: int) -> float:
    """Mean absolute error pooled over products and weeks."""
    y, yhat = _paired(actual, predicted, horizon)
    return float(np.abs(y - yhat).mean())


def tracking_signal(actual, predicted, horizon: int) -> float:
    """Signed error total divided by the MAE; 0 for a perfect forecast."""
    y, yhat = _paired(actual, predicted, horizon)
    denom = mae(actual, predicted, horizon)
    if denom == 0.0:
        return 0.0
    return float((y - yhat).sum() / denom)


def default_erp_epsilon(actual, horizon: int) -> np.ndarray:
    """Per-product threshold: half the product's mean weekly sales."""
    y = np.atleast_2d(np.asarray(actual, dtype=np.float64))[:, :horizon]
    return 0.5 * y.mean(axis=1)


def erp(actual, predicted, horizon: int, epsilon=None,
        normalized: bool = True) -> float:
    """Error-rate penalty: fraction of weeks missed by at least epsilon.

    A week counts as wrong when |y - yhat| >= epsilon. ``epsilon`` may be
    a scalar or a per-product array; by default it is half of each
    product's mean weekly sales. ``normalized=False`` returns the raw
    mean per-product sum of indicators instead of the [0,1] rate.
    """
    y, yhat = _paired(actual, predicted, horizon)
    if epsilon is None:
        eps = default_erp_epsilon(actual, horizon)
    else:
        eps = np.broadcast_to(np.asarray(epsilon, dtype=np.float64), (y.shape[0],))
    if np.any(eps <= 0.0):
        raise ValidationError("erp epsilon must be positive")
    wrong = (np.abs(y - yhat) >= eps[:, None]).sum(axis=1)
    per_product = wrong / horizon if normalized else wrong.astype(np.float64)
    return float(per_product.mean())


@dataclass(frozen=True)
class MetricsReport:
    """Dataset-level metric quartet with a per-category breakdown."""

    wape: float
    mae: float
    ts: float
    erp: float
    horizon: int
    per_category: dict[str, dict[str, float]]

    @property
    def biased(self) -> bool:
        return abs(self.ts) >= BIAS_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "horizon": self.horizon,
            "wape": self.wape, "mae": self.mae, "ts": self.ts, "erp": self.erp,
            "biased": self.biased,
            "per_category": self.per_category,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write(self, out_dir) -> dict[str, Path]:
        """Serialize as metrics.json plus a per-category metrics.csv."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        jpath = out / "metrics.json"
        jpath.write_text(self.to_json() + "\n", encoding="utf-8")
        cpath = out / "metrics.csv"
        with open(cpath, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["category", "wape", "mae", "ts", "erp"])
            w.writerow(["ALL", repr(self.wape), repr(self.mae),
                        repr(self.ts), repr(self.erp)])
            for cat in sorted(self.per_category):
                row = self.per_category[cat]
                w.writerow([cat, repr(row["wape"]), repr(row["mae"]),
                            repr(row["ts"]), repr(row["erp"])])
        return {"json": jpath, "csv": cpath}


def evaluate(actual, predicted, horizon: int, categories=None,
             epsilon=None) -> MetricsReport:
    """Compute the full quartet, optionally broken down by category."""
    y, yhat = _paired(actual, predicted, horizon)
    per_category: dict[str, dict[str, float]] = {}
    if categories is not None:
        categories = list(categories)
        if len(categories) != y.shape[0]:
            raise DimensionError(
                f"{len(categories)} categories for {y.shape[0]} series")
        eps = None if epsilon is None else np.broadcast_to(
            np.asarray(epsilon, dtype=np.float64), (y.shape[0],))
        for cat in sorted(set(categories)):
            idx = [i for i, c in enumerate(categories) if c == cat]
            per_category[cat] = {
                "wape": wape(y[idx], yhat[idx], horizon),
                "mae": mae(y[idx], yhat[idx], horizon),
                "ts": tracking_signal(y[idx], yhat[idx], horizon),
                "erp": erp(y[idx], yhat[idx], horizon,
                           None if eps is None else eps[idx]),
            }
    return MetricsReport(
        wape=wape(y, yhat, horizon),
        mae=mae(y, yhat, horizon),
        ts=tracking_signal(y, yhat, horizon),
        erp=erp(y, yhat, horizon, epsilon),
        horizon=horizon,
        per_category=per_category,
    )
