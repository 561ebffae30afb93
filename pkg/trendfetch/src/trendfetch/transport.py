"""Transport abstraction, rate limiting, and the bundled mock.

A Transport returns one sampled weekly series per call. The only
implementation shipped here is deterministic and in-memory; it is the
integration point where a live client would plug in. Everything above
the transport (retries, rate limiting, sampling, emission) is exercised
against the mock.
"""

from __future__ import annotations

import hashlib
import random
import threading
import time
from datetime import date
from typing import Protocol

from .errors import TransportError, ValidationError
from .jobs import WEEKS


class Transport(Protocol):
    def series(self, term: str, geography: str | None, start: date,
               end: date, sample: int) -> list[int]:
        """One sampled series: a 0-100 value per week of [start, end]."""
        ...


class RateLimiter:
    """Enforces a minimum interval between consecutive requests.

    Shared across worker threads; the clock and sleep are injectable so
    tests can assert spacing without waiting.
    """

    def __init__(self, min_interval: float,
                 clock=time.monotonic, sleep=time.sleep):
        if min_interval < 0.0:
            raise ValidationError("min_interval must be nonnegative")
        self.min_interval = min_interval
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next_free = None

    def wait(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next_free is not None and now < self._next_free:
                self._sleep(self._next_free - now)
                now = self._next_free
            self._next_free = now + self.min_interval


class MockTransport:
    """Deterministic stand-in service.

    Series are integer-valued, peak-normalized to 100, and fixed by
    (seed, term, geography, window, sample). ``fail`` arms transient
    errors for a term so retry handling can be tested; every call is
    recorded in ``calls``.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.calls: list[tuple] = []
        self._failures: dict[str, list] = {}
        self._lock = threading.Lock()

    def fail(self, term: str, times: int,
             error: type[TransportError] = TransportError) -> None:
        """Make the next ``times`` requests for ``term`` raise ``error``."""
        with self._lock:
            self._failures[term] = [times, error]

    def series(self, term, geography, start, end, sample):
        with self._lock:
            self.calls.append((term, geography, start, end, sample))
            pending = self._failures.get(term)
            if pending and pending[0] > 0:
                pending[0] -= 1
                raise pending[1](f"injected failure for {term!r}")

        key = f"{self.seed}|{term}|{geography or ''}|{start}|{end}|{sample}"
        digest = hashlib.sha256(key.encode("utf-8")).digest()
        rng = random.Random(int.from_bytes(digest[:8], "big"))
        # random walk shaped like real interest data, peak pinned at 100
        level = rng.uniform(20.0, 70.0)
        walk = []
        for _ in range(WEEKS):
            level = min(max(level + rng.uniform(-9.0, 9.0), 1.0), 100.0)
            walk.append(level)
        peak = max(walk)
        return [round(100.0 * v / peak) for v in walk]
