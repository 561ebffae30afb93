"""Multi-sample fetching with retries, rate limiting, and a bounded pool.

Samples within one job run sequentially so the per-request rate limit
is respected; distinct jobs may run in parallel up to ``pool_size``
workers sharing the same limiter. A sample either arrives complete (52
validated values) or is recorded as a failure; a short or out-of-range
response is never padded, truncated, or silently dropped. Output order
is the input job order regardless of scheduling.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .errors import SchemaError, TransportError, ValidationError
from .jobs import WEEKS, FetchJob
from .transport import RateLimiter, Transport


@dataclass(frozen=True)
class SampleRow:
    """One fetched weekly value in dataset-schema terms."""

    product_id: str
    attribute: str
    week_index: int
    value: float
    sample_index: int


@dataclass(frozen=True)
class FetchFailure:
    """One sample that could not be fetched, for the failure manifest."""

    product_id: str
    attribute: str
    term: str
    sample_index: int
    attempts: int
    error: str

    def to_dict(self) -> dict:
        return {"product_id": self.product_id, "attribute": self.attribute,
                "term": self.term, "sample_index": self.sample_index,
                "attempts": self.attempts, "error": self.error}


@dataclass
class FetchResult:
    rows: list[SampleRow]
    failures: list[FetchFailure]

    @property
    def complete(self) -> bool:
        return not self.failures


def _checked(job: FetchJob, values) -> list[float]:
    values = list(values)
    if len(values) != WEEKS:
        raise SchemaError(
            f"{job.product_id}/{job.attribute}: response has {len(values)} "
            f"weeks, expected {WEEKS}")
    out = [float(v) for v in values]
    for week, v in enumerate(out):
        if not 0.0 <= v <= 100.0:
            raise SchemaError(
                f"{job.product_id}/{job.attribute}: week {week} value {v!r} "
                f"outside [0, 100]")
    return out


def _one_series(job: FetchJob, sample: int, transport: Transport,
                limiter: RateLimiter | None, sleep) -> list[float]:
    delays = list(job.retry.delays())
    for attempt in range(job.retry.attempts):
        if limiter is not None:
            limiter.wait()
        try:
            values = transport.series(job.term, job.geography,
                                      job.start, job.end, sample)
        except TransportError:
            if attempt < len(delays):
                sleep(delays[attempt])
                continue
            raise
        # malformed responses are protocol violations, not transient: no retry
        return _checked(job, values)
    raise AssertionError("unreachable")


def fetch(job: FetchJob, transport: Transport,
          limiter: RateLimiter | None = None, sleep=None) -> FetchResult:
    """Fetch every sample of one job; failures become manifest entries."""
    sleep = time.sleep if sleep is None else sleep
    rows: list[SampleRow] = []
    failures: list[FetchFailure] = []
    for sample in range(job.samples):
        try:
            values = _one_series(job, sample, transport, limiter, sleep)
        except (TransportError, SchemaError) as exc:
            attempts = job.retry.attempts if isinstance(exc, TransportError) else 1
            failures.append(FetchFailure(
                product_id=job.product_id, attribute=job.attribute,
                term=job.term, sample_index=sample, attempts=attempts,
                error=str(exc)))
            continue
        rows.extend(SampleRow(job.product_id, job.attribute, week, value, sample)
                    for week, value in enumerate(values))
    return FetchResult(rows=rows, failures=failures)


def fetch_many(jobs, transport: Transport, limiter: RateLimiter | None = None,
               pool_size: int = 1, sleep=None) -> FetchResult:
    """Fetch a batch of jobs, at most ``pool_size`` in flight at once."""
    jobs = list(jobs)
    if pool_size < 1:
        raise ValidationError(f"pool_size must be >= 1, got {pool_size}")
    if pool_size == 1 or len(jobs) <= 1:
        results = [fetch(job, transport, limiter, sleep) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=pool_size) as pool:
            futures = [pool.submit(fetch, job, transport, limiter, sleep)
                       for job in jobs]
            results = [f.result() for f in futures]
    merged = FetchResult(rows=[], failures=[])
    for result in results:
        merged.rows.extend(result.rows)
        merged.failures.extend(result.failures)
    return merged
