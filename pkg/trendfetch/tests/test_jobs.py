"""Job construction and window arithmetic."""

from datetime import date, timedelta

import pytest

from trendfetch import FetchJob, RetryPolicy, ValidationError, week_start


def job(**kw):
    base = dict(product_id="P1", attribute="category", term="long sleeve",
                release=date(2019, 10, 9))
    base.update(kw)
    return FetchJob(**base)


def test_window_is_52_iso_weeks_strictly_before_release_week():
    j = job()  # 2019-10-09 is a Wednesday; its week starts Monday 10-07
    weeks = j.week_starts
    assert len(weeks) == 52
    assert all(w.weekday() == 0 for w in weeks)
    assert weeks[-1] == date(2019, 9, 30)
    assert weeks[0] == date(2019, 9, 30) - timedelta(weeks=51)
    assert weeks[-1] < week_start(j.release)
    # consecutive weeks, no gaps
    assert all((b - a).days == 7 for a, b in zip(weeks, weeks[1:]))
    assert j.start == weeks[0] and j.end == weeks[-1]


def test_release_on_a_monday_excludes_its_own_week():
    j = job(release=date(2019, 10, 7))
    assert j.end == date(2019, 9, 30)


def test_field_validation():
    with pytest.raises(ValidationError):
        job(term="   ")
    with pytest.raises(ValidationError):
        job(product_id="")
    with pytest.raises(ValidationError):
        job(attribute="material")
    with pytest.raises(ValidationError):
        job(samples=0)


def test_geography_defaults_to_absent():
    assert job().geography is None
    assert job(geography="IT").geography == "IT"


def test_retry_policy_delays_grow_and_cap():
    policy = RetryPolicy(attempts=5, base_delay=1.0, multiplier=3.0, max_delay=10.0)
    assert list(policy.delays()) == [1.0, 3.0, 9.0, 10.0]
    assert list(RetryPolicy(attempts=1).delays()) == []
    with pytest.raises(ValidationError):
        RetryPolicy(attempts=0)
    with pytest.raises(ValidationError):
        RetryPolicy(multiplier=0.5)
