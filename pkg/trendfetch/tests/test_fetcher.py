"""Fetch behavior: sampling, retries, rate limiting, pooled batches."""

from datetime import date

import pytest

from trendfetch import (FetchJob, MockTransport, QuotaError, RateLimiter,
                        RetryPolicy, fetch, fetch_many)
from trendfetch.errors import TransportError


def job(**kw):
    base = dict(product_id="P1", attribute="category", term="long sleeve",
                release=date(2019, 10, 7), samples=3,
                retry=RetryPolicy(attempts=3, base_delay=0.5))
    base.update(kw)
    return FetchJob(**base)


def test_rows_reproduce_the_transport_series_exactly():
    transport = MockTransport(seed=4)
    j = job()
    result = fetch(j, transport)
    assert result.complete
    assert len(result.rows) == 3 * 52
    for sample in range(3):
        want = transport.series(j.term, None, j.start, j.end, sample)
        got = [r.value for r in result.rows if r.sample_index == sample]
        assert got == [float(v) for v in want]
    weeks = [r.week_index for r in result.rows if r.sample_index == 0]
    assert weeks == list(range(52))
    assert all(0.0 <= r.value <= 100.0 for r in result.rows)


def test_single_sample_uses_index_zero():
    result = fetch(job(samples=1), MockTransport())
    assert {r.sample_index for r in result.rows} == {0}


def test_transient_failures_are_retried_with_backoff():
    transport = MockTransport(seed=1)
    transport.fail("long sleeve", times=2, error=QuotaError)
    slept = []
    result = fetch(job(samples=1), transport, sleep=slept.append)
    assert result.complete
    assert slept == [0.5, 1.0]
    assert len(transport.calls) == 3


def test_exhausted_retries_become_a_manifest_entry_not_an_exception():
    transport = MockTransport(seed=1)
    transport.fail("long sleeve", times=99)
    result = fetch(job(samples=2), transport, sleep=lambda s: None)
    assert not result.complete
    assert result.rows == []
    assert len(result.failures) == 2
    first = result.failures[0]
    assert first.sample_index == 0 and first.attempts == 3
    assert "injected" in first.error


def test_partial_output_keeps_complete_samples():
    transport = MockTransport(seed=2)
    transport.fail("long sleeve", times=3)  # exactly kills sample 0
    result = fetch(job(samples=3), transport, sleep=lambda s: None)
    assert {r.sample_index for r in result.rows} == {1, 2}
    assert [f.sample_index for f in result.failures] == [0]


def test_short_series_is_rejected_never_padded():
    class Truncating:
        def series(self, term, geography, start, end, sample):
            return [50] * 51

    result = fetch(job(samples=1), Truncating(), sleep=lambda s: None)
    assert result.rows == []
    assert len(result.failures) == 1
    assert "51 weeks" in result.failures[0].error


def test_out_of_range_value_is_rejected():
    class Overflowing:
        def series(self, term, geography, start, end, sample):
            return [50] * 51 + [101]

    result = fetch(job(samples=1), Overflowing(), sleep=lambda s: None)
    assert result.rows == []
    assert "outside [0, 100]" in result.failures[0].error


def test_rate_limiter_spaces_every_request():
    now = [0.0]
    naps = []

    def clock():
        return now[0]

    def nap(seconds):
        naps.append(seconds)
        now[0] += seconds

    limiter = RateLimiter(2.0, clock=clock, sleep=nap)
    fetch(job(samples=4), MockTransport(), limiter=limiter)
    # first request free, each later one waits out the full interval
    assert naps == [2.0, 2.0, 2.0]


def test_pooled_batch_preserves_job_order_and_all_rows():
    jobs = [job(product_id=f"P{i}", term=f"term {i}", samples=2)
            for i in range(5)]
    transport = MockTransport(seed=9)
    pooled = fetch_many(jobs, transport, pool_size=3)
    sequential = fetch_many(jobs, MockTransport(seed=9), pool_size=1)
    assert pooled.complete and sequential.complete
    assert pooled.rows == sequential.rows
    assert [r.product_id for r in pooled.rows[::104]] == [j.product_id for j in jobs]


def test_geography_is_passed_through_verbatim_or_not_at_all():
    transport = MockTransport()
    fetch(job(samples=1), transport)
    fetch(job(samples=1, geography="IT"), transport)
    assert transport.calls[0][1] is None
    assert transport.calls[1][1] == "IT"


def test_mock_failure_injection_raises_transport_error_subclass():
    transport = MockTransport()
    transport.fail("long sleeve", times=1)
    with pytest.raises(TransportError):
        transport.series("long sleeve", None, date(2018, 1, 1),
                         date(2018, 12, 24), 0)
