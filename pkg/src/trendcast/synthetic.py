"""Synthetic catalog generator with a planted trend-to-sales lag.

Sales follow category-dependent launch curves that peak one to two weeks
after release. Each product's category trend contains a 12-week window,
starting at a per-product lag drawn from ``planted_lag_range``, whose
values are a noisy increasing linear transform of that product's weekly
sales; the rest of every trend is a seasonal background. Lag analysis
pipelines run on this data should recover the planted window.

Lag convention: trend index i covers the week (i - 52) relative to
release, so a window starting at lag L occupies indices 52+L .. 52+L+11.
"""

from __future__ import annotations

from datetime import date, timedelta

import numpy as np

from .data import Dataset, Product, TrendSeries, SALES_WEEKS, TREND_WEEKS
from .errors import ContractError, ValidationError

CATEGORIES = ("tee", "dress", "shirt", "skirt", "jacket")
COLORS = ("black", "white", "red", "blue", "green", "yellow")
FABRICS = ("cotton", "wool", "silk", "linen", "denim", "acrylic")

# launch-curve shape (a, b): peak of (t+1)^a * exp(-b (t+1)) sits at t = a/b - 1
_CURVE = {
    "tee": (2.0, 1.0),
    "dress": (3.0, 1.0),
    "shirt": (2.4, 1.2),
    "skirt": (2.75, 1.1),
    "jacket": (3.6, 1.2),
}


def _launch_curve(category: str, floor: float) -> np.ndarray:
    # launch spike decaying to a persistent plateau, not to zero
    a, b = _CURVE[category]
    t = np.arange(1, SALES_WEEKS + 1, dtype=np.float64)
    curve = t ** a * np.exp(-b * t)
    return (1.0 - floor) * curve / curve.max() + floor


def _background(rng: np.random.Generator, phase: float) -> np.ndarray:
    # per-series amplitude: seasonal swing unrelated to the launch outcome,
    # so averaging over the whole series is not a shortcut to the signal
    i = np.arange(TREND_WEEKS, dtype=np.float64)
    amp = rng.uniform(0.04, 0.22)
    wave = 0.35 + amp * np.sin(2.0 * np.pi * (i + phase) / 26.0)
    noisy = wave + rng.normal(0.0, 0.05, size=TREND_WEEKS)
    return np.clip(noisy, 0.02, 0.98)


def _category_band(lo: int, hi: int, cat_index: int) -> tuple[int, int]:
    """Contiguous sub-range of [lo, hi) owned by one category.

    Search-to-purchase anticipation differs by product type, so each
    category gets its own slice of the lag range; a balanced catalog still
    covers the full range uniformly. Ranges narrower than the category
    count fall back to the full range.
    """
    width = hi - lo
    n = len(CATEGORIES)
    if width < n:
        return lo, hi
    a = lo + (cat_index * width) // n
    b = lo + ((cat_index + 1) * width) // n
    return a, b


def generate_synthetic(n_products: int, seed: int,
                       planted_lag_range: tuple[int, int] = (-42, -32)) -> Dataset:
    """Deterministic synthetic dataset of ``n_products`` items.

    Per-product start lags are drawn uniformly from the category's band
    of the half-open integer range [lo, hi) and recorded in
    ``dataset.metadata['planted_lags']``.
    """
    if n_products < 1:
        raise ContractError(f"n_products must be >= 1, got {n_products}")
    lo, hi = planted_lag_range
    if lo >= hi:
        raise ValidationError(f"planted_lag_range {planted_lag_range} is empty")
    if lo < -TREND_WEEKS or hi > -SALES_WEEKS + 1:
        raise ValidationError(
            f"planted_lag_range {planted_lag_range} does not fit a "
            f"{SALES_WEEKS}-week window inside the {TREND_WEEKS}-week trend")

    rng = np.random.default_rng(seed)
    epoch = date(2018, 1, 1)
    products = []
    planted: dict[str, int] = {}

    for i in range(n_products):
        pid = f"P{i:04d}"
        cat_index = int(rng.integers(len(CATEGORIES)))
        category = CATEGORIES[cat_index]
        color = COLORS[int(rng.integers(len(COLORS)))]
        fabric = FABRICS[int(rng.integers(len(FABRICS)))]
        release = epoch + timedelta(weeks=int(rng.integers(0, 104)))
        season = ("SS" if 3 <= release.month <= 8 else "AW") + f"{release.year % 100:02d}"

        scale = float(rng.lognormal(mean=np.log(30.0), sigma=0.4))
        slope = float(rng.uniform(-0.2, 0.2))
        plateau = float(rng.uniform(0.18, 0.32))
        tilt = 1.0 + slope * (np.arange(SALES_WEEKS) - 5.5) / SALES_WEEKS
        noise = rng.lognormal(mean=0.0, sigma=0.12, size=SALES_WEEKS)
        sales = scale * _launch_curve(category, plateau) * tilt * noise
        sales = np.maximum(sales, 0.0)

        band_lo, band_hi = _category_band(lo, hi, cat_index)
        lag = int(rng.integers(band_lo, band_hi))
        start = TREND_WEEKS + lag
        sales_norm = sales / sales.max()
        # the swing of pre-release interest tracks demand volume, so the
        # window height above the floor is the catalog's best scale signal
        z = float(np.clip((np.log(scale) - np.log(30.0)) / 0.4, -2.0, 2.0))
        gain = 0.48 + 0.16 * z + float(rng.uniform(-0.03, 0.03))
        floor_level = float(rng.uniform(0.13, 0.17))

        # interest in a product lifts all three of its attribute queries at
        # the same lag; category carries the full swing, the others half
        series = []
        for attr, strength in (("category", 1.0), ("color", 0.5), ("fabric", 0.5)):
            values = _background(rng, phase=float(rng.uniform(0.0, 26.0)))
            window = (floor_level + strength * gain * sales_norm
                      + rng.normal(0.0, 0.015, size=SALES_WEEKS))
            values[start:start + SALES_WEEKS] = window
            series.append(TrendSeries(
                attribute=attr,
                values=tuple(np.clip(values, 0.0, 1.0).tolist())))

        planted[pid] = lag
        products.append(Product(
            id=pid, category=category, color=color, fabric=fabric,
            release_date=release, season=season,
            sales=tuple(sales.tolist()), trends=tuple(series)))

    return Dataset(
        products=tuple(products),
        metadata={"seed": seed, "planted_lag_range": (lo, hi),
                  "planted_lags": planted})
