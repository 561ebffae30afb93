"""Batch downloader for weekly search-interest series.

Fetches each query several times (the service's sampling is noisy),
validates every sample, and writes trends.csv rows that the forecasting
package ingests and averages. This is the only component that would
ever touch the network; the bundled transport is an offline mock.
"""

from .emit import emit_csv
from .errors import (QuotaError, SchemaError, TransportError, TrendfetchError,
                     ValidationError)
from .fetcher import FetchFailure, FetchResult, SampleRow, fetch, fetch_many
from .jobs import ATTRIBUTES, WEEKS, FetchJob, RetryPolicy, week_start
from .transport import MockTransport, RateLimiter, Transport

__all__ = [
    "ATTRIBUTES", "WEEKS",
    "FetchFailure", "FetchJob", "FetchResult", "MockTransport", "QuotaError",
    "RateLimiter", "RetryPolicy", "SampleRow", "SchemaError", "Transport",
    "TransportError", "TrendfetchError", "ValidationError",
    "emit_csv", "fetch", "fetch_many", "week_start",
]
