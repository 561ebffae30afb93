"""Stationarity testing, lagged rank correlation, and attention-lag reports.

Lag convention used throughout: a trend of length T covers the T weeks
before release, so trend index i corresponds to lag i - T (index T-1 is
the week immediately before release, lag -1). A sliding window is named
by the lag of its first element.

Lags are histogrammed into five fixed ranges; the first four are
half-open [lo, hi) and the last is closed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import stdtr

from .data import Dataset, SALES_WEEKS, TREND_WEEKS
from .errors import (ConfigurationError, ContractError, DegenerateSeriesError,
                     DimensionError, NumericalError, UndefinedCorrelationError)

# published 5% critical point of the level-stationarity variant of the test
KPSS_CRITICAL_5PCT_LEVEL = 0.463

# default Newey-West style bandwidth: floor(mult * (n/100)^(1/4)).
# The textbook multiplier 12 leaves the test nearly powerless against a
# random walk at n ~ 52 (the long-run variance absorbs the drift), so the
# default multiplier here is 2, which keeps both error rates acceptable
# at desk-scale series lengths; pass bandwidth_multiplier=12.0 for the
# textbook rule.
DEFAULT_BANDWIDTH_MULTIPLIER = 2.0

WINDOW = SALES_WEEKS            # sliding window length, 12 weeks
SIGNIFICANCE_ALPHA = 0.05
STRONG_RHO_RANGE = (0.75, 1.0)

LAG_BUCKETS = ((-52, -42), (-42, -32), (-32, -22), (-22, -12), (-12, 0))

_TINY = np.finfo(np.float64).tiny


def kpss_test(series, regression: str = "level", lags: int | None = None,
              bandwidth_multiplier: float = DEFAULT_BANDWIDTH_MULTIPLIER,
              ) -> tuple[float, bool]:
    """Level-stationarity statistic and its 5% verdict.

    The statistic is the scaled sum of squared partial sums of the
    demeaned series, normalized by a Bartlett-window long-run variance
    with ``lags`` autocovariance terms (bandwidth rule above when not
    given). Returns (statistic, stationary_at_5pct); the flag is True
    when the statistic stays below the 5% critical value.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"kpss_test expects a 1-d series, got shape {x.shape}")
    n = x.size
    if n < 12:
        raise ContractError(f"kpss_test needs >= 12 observations, got {n}")
    if regression != "level":
        raise ConfigurationError(f"only level regression is supported, got {regression!r}")
    if np.all(x == x[0]):
        raise DegenerateSeriesError("kpss_test: series is constant")

    e = x - x.mean()
    partial = np.cumsum(e)
    if lags is None:
        lags = int(np.floor(bandwidth_multiplier * (n / 100.0) ** 0.25))
    lags = max(0, min(int(lags), n - 1))

    lrv = float(e @ e) / n
    for j in range(1, lags + 1):
        w = 1.0 - j / (lags + 1.0)
        lrv += 2.0 * w * float(e[j:] @ e[:-j]) / n
    if lrv <= 0.0:
        raise NumericalError("kpss_test: long-run variance is not positive")
    stat = float(partial @ partial) / (n * n * lrv)
    return stat, stat < KPSS_CRITICAL_5PCT_LEVEL


def average_ranks(values) -> np.ndarray:
    """1-based ranks; ties share the average of their positions."""
    v = np.asarray(values, dtype=np.float64)
    order = np.argsort(v, kind="stable")
    ranks = np.empty(v.size, dtype=np.float64)
    sorted_v = v[order]
    i = 0
    while i < v.size:
        j = i
        while j + 1 < v.size and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x, y) -> tuple[float, float]:
    """Tie-aware rank correlation with a two-sided t-approximation p-value.

    Perfectly monotone pairs report the smallest positive float instead
    of an exact zero p-value.
    """
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise DimensionError(f"spearman needs equal-length 1-d series, got "
                             f"{xa.shape} and {ya.shape}")
    n = xa.size
    if n < 3:
        raise ContractError(f"spearman needs >= 3 observations, got {n}")
    rx, ry = average_ranks(xa), average_ranks(ya)
    dx, dy = rx - rx.mean(), ry - ry.mean()
    sx, sy = float(dx @ dx), float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError(
            "spearman undefined: an argument has constant ranks")
    rho = float(np.clip((dx @ dy) / np.sqrt(sx * sy), -1.0, 1.0))
    if abs(rho) == 1.0:
        return rho, _TINY
    t = rho * np.sqrt((n - 2) / (1.0 - rho * rho))
    p = 2.0 * float(stdtr(n - 2, -abs(t)))
    return rho, float(min(max(p, _TINY), 1.0))


@dataclass(frozen=True)
class CorrelationRecord:
    """One sliding-window comparison of a trend window against sales.

    ``lag`` is the window's start position relative to release (weeks,
    negative). Undefined windows (constant ranks) carry None rho/p.
    """

    product_id: str
    attribute: str
    lag: int
    rho: float | None
    p_value: float | None
    significant: bool

    @property
    def undefined(self) -> bool:
        return self.rho is None


def sliding_correlation(sales, trend, product_id: str = "",
                        attribute: str = "", alpha: float = SIGNIFICANCE_ALPHA,
                        ) -> list[CorrelationRecord]:
    """Rank-correlate every 12-week trend window against the sales series.

    A length-T trend yields T - 11 records, one per window start, at lags
    start - T. Callers gate inputs on sales stationarity; this function
    does not re-test.
    """
    s = np.asarray(sales, dtype=np.float64)
    t = np.asarray(trend, dtype=np.float64)
    if s.shape != (WINDOW,):
        raise DimensionError(f"sales must be a {WINDOW}-week series, got {s.shape}")
    if t.ndim != 1 or t.size < WINDOW:
        raise DimensionError(f"trend must be 1-d with >= {WINDOW} weeks, got {t.shape}")
    records = []
    for start in range(t.size - WINDOW + 1):
        lag = start - t.size
        window = t[start:start + WINDOW]
        try:
            rho, p = spearman(window, s)
            records.append(CorrelationRecord(
                product_id=product_id, attribute=attribute, lag=lag,
                rho=rho, p_value=p, significant=p < alpha))
        except UndefinedCorrelationError:
            records.append(CorrelationRecord(
                product_id=product_id, attribute=attribute, lag=lag,
                rho=None, p_value=None, significant=False))
    return records


# ---------------------------------------------------------------------------
# lag bucketing


def bucket_label(lo: int, hi: int, closed: bool) -> str:
    return f"[{lo},{hi}{']' if closed else ')'}"


def bucket_of(lag: int) -> int:
    """Index into LAG_BUCKETS; the final bucket includes its upper edge."""
    for i, (lo, hi) in enumerate(LAG_BUCKETS):
        last = i == len(LAG_BUCKETS) - 1
        if lo <= lag < hi or (last and lag == hi):
            return i
    raise ContractError(f"lag {lag} outside [{LAG_BUCKETS[0][0]}, {LAG_BUCKETS[-1][1]}]")


@dataclass(frozen=True)
class LagBucketReport:
    """Histogram of per-product peak-attention lags over the five ranges."""

    counts: tuple[int, int, int, int, int]
    total: int

    def __post_init__(self) -> None:
        if sum(self.counts) != self.total:
            raise ContractError(
                f"bucket counts {self.counts} sum to {sum(self.counts)}, "
                f"expected {self.total}")

    @property
    def labels(self) -> tuple[str, ...]:
        last = len(LAG_BUCKETS) - 1
        return tuple(bucket_label(lo, hi, i == last)
                     for i, (lo, hi) in enumerate(LAG_BUCKETS))

    @property
    def modal_bucket(self) -> str:
        return self.labels[int(np.argmax(self.counts))]

    def to_dict(self) -> dict:
        return {"total": self.total, "modal_bucket": self.modal_bucket,
                "counts": dict(zip(self.labels, self.counts))}


def peak_attention_lag(cross_attention: np.ndarray) -> int:
    """Lag of the highest attention weight for one product.

    ``cross_attention`` is (heads, sources, T). The peak is the maximum
    over heads and sources; among timesteps tied at the maximum, the
    earliest wins.
    """
    w = np.asarray(cross_attention, dtype=np.float64)
    if w.ndim != 3:
        raise DimensionError(f"cross_attention must be (heads, sources, T), "
                             f"got shape {w.shape}")
    T = w.shape[-1]
    peak = w.max()
    earliest = int(np.flatnonzero((w == peak).any(axis=(0, 1)))[0])
    return earliest - T


def attention_lag_report(results) -> LagBucketReport:
    """Histogram peak-attention lags over every product in ``results``.

    Accepts forecast results (or raw arrays) whose cross-attention is
    (B, heads, sources, T); items may be batched differently.
    """
    counts = [0] * len(LAG_BUCKETS)
    total = 0
    for item in results:
        attn = item if isinstance(item, np.ndarray) else item.cross_attention
        if attn is None:
            raise ContractError("attention_lag_report needs cross-attention "
                                "weights; a result was produced without the encoder")
        attn = np.asarray(attn, dtype=np.float64)
        if attn.ndim == 3:
            attn = attn[None]
        for b in range(attn.shape[0]):
            counts[bucket_of(peak_attention_lag(attn[b]))] += 1
            total += 1
    return LagBucketReport(counts=tuple(counts), total=total)


# ---------------------------------------------------------------------------
# dataset pipeline


@dataclass(frozen=True)
class CorrelationAnalysis:
    """Correlation records for stationary products plus summary aggregates."""

    records: tuple[CorrelationRecord, ...]
    products_total: int
    products_nonstationary: int
    products_degenerate: int
    best_lag_histogram: tuple[int, int, int, int, int]
    summary: dict = field(compare=False)


def correlation_analysis(dataset: Dataset, alpha: float = SIGNIFICANCE_ALPHA,
                         ) -> CorrelationAnalysis:
    """Run the stationarity gate and sliding correlation over a dataset.

    Products whose sales fail the level-stationarity test (or are
    constant) are excluded from correlation, mirroring a protocol that
    analyzes stationary sales only. For each remaining (product,
    attribute) pair the records cover all 41 window lags; the histogram
    buckets the lag of the strongest |rho| per pair.
    """
    if len(dataset) == 0:
        raise ContractError("correlation_analysis needs a non-empty dataset")
    records: list[CorrelationRecord] = []
    nonstationary = degenerate = 0
    hist = [0] * len(LAG_BUCKETS)
    for p in dataset:
        try:
            _, stationary = kpss_test(np.asarray(p.sales))
        except DegenerateSeriesError:
            degenerate += 1
            continue
        if not stationary:
            nonstationary += 1
            continue
        for series in p.trends:
            recs = sliding_correlation(p.sales, series.values,
                                       product_id=p.id,
                                       attribute=series.attribute, alpha=alpha)
            records.extend(recs)
            defined = [r for r in recs if not r.undefined]
            if defined:
                best = max(defined, key=lambda r: abs(r.rho))
                hist[bucket_of(best.lag)] += 1

    defined = [r for r in records if not r.undefined]
    n_def = len(defined)
    significant = sum(1 for r in defined if r.significant)
    strong = sum(1 for r in defined
                 if STRONG_RHO_RANGE[0] <= abs(r.rho) <= STRONG_RHO_RANGE[1])
    last = len(LAG_BUCKETS) - 1
    labels = [bucket_label(lo, hi, i == last)
              for i, (lo, hi) in enumerate(LAG_BUCKETS)]
    summary = {
        "products_total": len(dataset),
        "products_nonstationary": nonstationary,
        "products_degenerate": degenerate,
        "fraction_nonstationary": nonstationary / len(dataset),
        "records_total": len(records),
        "records_defined": n_def,
        "fraction_significant": (significant / n_def) if n_def else 0.0,
        "fraction_strong_rho": (strong / n_def) if n_def else 0.0,
        "best_lag_histogram": dict(zip(labels, hist)),
        "modal_lag_bucket": labels[int(np.argmax(hist))] if sum(hist) else None,
        "alpha": alpha,
    }
    return CorrelationAnalysis(
        records=tuple(records), products_total=len(dataset),
        products_nonstationary=nonstationary, products_degenerate=degenerate,
        best_lag_histogram=tuple(hist), summary=summary)
