"""Command line: read a query list, fetch every series, write trends.csv.

The query list is a CSV with header ``id,attribute,term,release_date``,
one row per (product, attribute) series. Exit codes: 0 all samples
fetched; 1 partial output (a failure manifest sits next to the output
file); 2 bad usage, bad query file, or schema violations.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from datetime import date
from pathlib import Path

from .emit import emit_csv
from .errors import TrendfetchError, ValidationError
from .fetcher import fetch_many
from .jobs import FetchJob, RetryPolicy
from .transport import MockTransport, RateLimiter

QUERIES_HEADER = ["id", "attribute", "term", "release_date"]


def read_jobs(path, geography, samples, retry: RetryPolicy) -> list[FetchJob]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"query list not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != QUERIES_HEADER:
            raise ValidationError(
                f"{path}: header must be {','.join(QUERIES_HEADER)}")
        jobs = []
        for number, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(QUERIES_HEADER):
                raise ValidationError(
                    f"{path} row {number}: expected {len(QUERIES_HEADER)} "
                    f"fields, got {len(row)}")
            pid, attribute, term, release_raw = row
            try:
                release = date.fromisoformat(release_raw)
            except ValueError as exc:
                raise ValidationError(f"{path} row {number}: {exc}") from None
            jobs.append(FetchJob(product_id=pid, attribute=attribute, term=term,
                                 release=release, geography=geography,
                                 samples=samples, retry=retry))
    if not jobs:
        raise ValidationError(f"{path}: no query rows")
    return jobs


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendfetch",
        description="Download weekly search-interest series for attribute "
                    "queries and write them in the trends.csv schema.")
    parser.add_argument("--queries", required=True,
                        help="CSV of id,attribute,term,release_date rows")
    parser.add_argument("--out", required=True, help="trends.csv output path")
    parser.add_argument("--geography", default=None,
                        help="region code passed through to the service; "
                             "omitted entirely when not given")
    parser.add_argument("--samples", type=int, default=10,
                        help="independent downloads to average downstream "
                             "(default: 10)")
    parser.add_argument("--pool", type=int, default=1,
                        help="max queries in flight at once (default: 1)")
    parser.add_argument("--min-interval", dest="min_interval", type=float,
                        default=0.0,
                        help="minimum seconds between requests (default: 0)")
    parser.add_argument("--retries", type=int, default=4,
                        help="attempts per request (default: 4)")
    parser.add_argument("--transport", choices=["mock"], default="mock",
                        help="service backend; only the deterministic mock "
                             "is bundled")
    parser.add_argument("--mock-seed", dest="mock_seed", type=int, default=0,
                        help="seed for the mock backend (default: 0)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        retry = RetryPolicy(attempts=args.retries)
        jobs = read_jobs(args.queries, args.geography, args.samples, retry)
        transport = MockTransport(seed=args.mock_seed)
        limiter = RateLimiter(args.min_interval) if args.min_interval > 0 else None
        result = fetch_many(jobs, transport, limiter=limiter,
                            pool_size=args.pool)
        out = emit_csv(result.rows, args.out)
    except TrendfetchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    print(f"wrote {len(result.rows)} rows to {out}")
    if result.failures:
        manifest = out.parent / "fetch_failures.json"
        with open(manifest, "w", encoding="utf-8") as fh:
            json.dump([f.to_dict() for f in result.failures], fh,
                      indent=2, sort_keys=True)
            fh.write("\n")
        print(f"{len(result.failures)} samples failed; manifest: {manifest}",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
