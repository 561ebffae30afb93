"""Fetch jobs: one attribute query covering the 52 weeks before a release.

A job identifies the product and attribute the series belongs to, the
query term sent to the service (the attribute value itself, e.g. the
category name), and the release date anchoring the window. The window
is always the 52 ISO weeks strictly before the release's week, matching
the week indexing of the downstream dataset schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import date, timedelta

from .errors import ValidationError

ATTRIBUTES = ("category", "color", "fabric")
WEEKS = 52


def week_start(day: date) -> date:
    """Monday of the ISO week containing ``day``."""
    return day - timedelta(days=day.weekday())


@dataclass(frozen=True)
class RetryPolicy:
    """Exponential backoff: up to ``attempts`` tries per request."""

    attempts: int = 4
    base_delay: float = 0.5
    multiplier: float = 2.0
    max_delay: float = 30.0

    def __post_init__(self) -> None:
        if self.attempts < 1:
            raise ValidationError(f"attempts must be >= 1, got {self.attempts}")
        if self.base_delay < 0.0 or self.max_delay < 0.0:
            raise ValidationError("delays must be nonnegative")
        if self.multiplier < 1.0:
            raise ValidationError("multiplier must be >= 1 so delays never shrink")

    def delays(self):
        """Sleep lengths between consecutive tries, longest capped."""
        for i in range(self.attempts - 1):
            yield min(self.base_delay * self.multiplier ** i, self.max_delay)


@dataclass(frozen=True)
class FetchJob:
    """One (product, attribute) series to download ``samples`` times.

    ``geography`` is passed through verbatim when given; no locale is
    assumed or sent when it is None.
    """

    product_id: str
    attribute: str
    term: str
    release: date
    geography: str | None = None
    samples: int = 10
    retry: RetryPolicy = field(default_factory=RetryPolicy)

    def __post_init__(self) -> None:
        if not self.product_id.strip():
            raise ValidationError("product id is empty")
        if self.attribute not in ATTRIBUTES:
            raise ValidationError(
                f"attribute must be one of {ATTRIBUTES}, got {self.attribute!r}")
        if not self.term.strip():
            raise ValidationError(
                f"{self.product_id}/{self.attribute}: empty query term")
        if self.samples < 1:
            raise ValidationError(f"samples must be >= 1, got {self.samples}")

    @property
    def week_starts(self) -> tuple[date, ...]:
        """The 52 ISO week Mondays strictly before the release's week."""
        anchor = week_start(self.release)
        return tuple(anchor - timedelta(weeks=WEEKS - k) for k in range(WEEKS))

    @property
    def start(self) -> date:
        return self.week_starts[0]

    @property
    def end(self) -> date:
        return self.week_starts[-1]
