"""Data model, CSV ingestion and emission, feature providers, and splits.

On-disk layout is three delimited files:

- ``products.csv``: id, category, color, fabric, release_date (ISO-8601), season
- ``sales.csv``: id, week_index (0-11), quantity (nonnegative real)
- ``trends.csv``: id, attribute (category|color|fabric), week_index (0-51),
  value (0-100), sample_index

Trend values are stored in memory rescaled to [0,1]. Multiple
``sample_index`` rows per (id, attribute, week) are averaged at ingest.
The averaging and the /100 rescale run in exact rational arithmetic with
a single rounding to float64 at the end, and ``emit`` writes the exact
decimal expansion of 100*value, so ``ingest(emit(dataset))`` reproduces
every numeric field bit for bit.

Row numbers in diagnostics are 1-based physical line numbers (the header
is line 1).
"""

from __future__ import annotations

import csv
import difflib
import hashlib
from dataclasses import dataclass, field
from datetime import date
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CompatibilityError, ContractError, SchemaError, ValidationError

SALES_WEEKS = 12
TREND_WEEKS = 52
TREND_ATTRIBUTES = ("category", "color", "fabric")

PRODUCTS_HEADER = ["id", "category", "color", "fabric", "release_date", "season"]
SALES_HEADER = ["id", "week_index", "quantity"]
TRENDS_HEADER = ["id", "attribute", "week_index", "value", "sample_index"]


# ---------------------------------------------------------------------------
# exact numeric round-trip helpers


def parse_trend_value(text: str) -> Fraction:
    """Parse a decimal trend value from the 0-100 file domain, exactly."""
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValidationError(f"not a decimal number: {text!r}") from None
    if not 0 <= v <= 100:
        raise ValidationError(f"trend value {text} outside [0, 100]")
    return v


def format_trend_value(value: float) -> str:
    """Exact decimal expansion of 100*value for the 0-100 file domain.

    ``value`` is a float in [0,1], hence a dyadic rational; 100*value has
    a finite decimal expansion, written here with integer arithmetic so
    no rounding occurs anywhere on the emit path.
    """
    f = Fraction(value) * 100
    num, den = f.numerator, f.denominator
    # den is a power of two after reduction, so den divides 10**k
    k = 0
    d = den
    while d % 2 == 0:
        d //= 2
        k += 1
    while d % 5 == 0:
        d //= 5
        k += 1
    if d != 1:
        raise ContractError(f"value {value!r} has no finite decimal form")
    scaled = num * (10 ** k) // den
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(k + 1, "0")
    if k == 0:
        return sign + digits
    head, tail = digits[:-k], digits[-k:]
    tail = tail.rstrip("0")
    return sign + head + ("." + tail if tail else "")


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class TrendSeries:
    """One attribute's 52-week search-interest series, rescaled to [0,1]."""

    attribute: str
    values: tuple[float, ...]
    source_samples: int = 1

    def __post_init__(self) -> None:
        if self.attribute not in TREND_ATTRIBUTES:
            raise ValidationError(f"unknown trend attribute {self.attribute!r}")
        if len(self.values) != TREND_WEEKS:
            raise ValidationError(
                f"trend series has {len(self.values)} weeks, expected {TREND_WEEKS}")
        if any(not (0.0 <= v <= 1.0) for v in self.values):
            raise ValidationError("trend values outside [0, 1]")

    def view(self, trend_len: int) -> tuple[float, ...]:
        """Last ``trend_len`` weeks; 28-week inputs are a suffix of the 52."""
        if trend_len == TREND_WEEKS:
            return self.values
        if trend_len < 1 or trend_len > TREND_WEEKS:
            raise ValidationError(f"trend_len {trend_len} outside [1, {TREND_WEEKS}]")
        return self.values[TREND_WEEKS - trend_len:]


@dataclass(frozen=True)
class Product:
    """One catalog item with its 12-week sales and 52-week trend context."""

    id: str
    category: str
    color: str
    fabric: str
    release_date: date
    season: str
    sales: tuple[float, ...]
    trends: tuple[TrendSeries, TrendSeries, TrendSeries]
    image_features: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.sales) != SALES_WEEKS:
            raise ValidationError(
                f"product {self.id}: {len(self.sales)} sales weeks, expected {SALES_WEEKS}")
        if any(s < 0 for s in self.sales):
            raise ValidationError(f"product {self.id}: negative sales")
        kinds = tuple(t.attribute for t in self.trends)
        if kinds != TREND_ATTRIBUTES:
            raise ValidationError(
                f"product {self.id}: trend series must be {TREND_ATTRIBUTES}, got {kinds}")

    def trend_for(self, attribute: str) -> TrendSeries:
        return self.trends[TREND_ATTRIBUTES.index(attribute)]


@dataclass(frozen=True)
class Vocabulary:
    """Closed attribute-value sets; ingest rejects values outside them."""

    categories: frozenset[str]
    colors: frozenset[str]
    fabrics: frozenset[str]

    def check(self, kind: str, value: str) -> str | None:
        """None when valid, else a message with a nearest-match hint."""
        pool = {"category": self.categories, "color": self.colors,
                "fabric": self.fabrics}[kind]
        if value in pool:
            return None
        hint = difflib.get_close_matches(value, sorted(pool), n=1)
        suffix = f" (did you mean {hint[0]!r}?)" if hint else ""
        return f"unknown {kind} {value!r}{suffix}"


@dataclass(frozen=True)
class Dataset:
    """Immutable collection of fully validated products, in file order."""

    products: tuple[Product, ...]
    diagnostics: tuple[str, ...] = field(default=(), compare=False)
    metadata: Mapping | None = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.products)

    def __iter__(self):
        return iter(self.products)

    def by_id(self) -> dict[str, Product]:
        return {p.id: p for p in self.products}

    def vocabulary(self) -> Vocabulary:
        return Vocabulary(
            categories=frozenset(p.category for p in self.products),
            colors=frozenset(p.color for p in self.products),
            fabrics=frozenset(p.fabric for p in self.products),
        )

    def sales_matrix(self) -> np.ndarray:
        return np.array([p.sales for p in self.products], dtype=np.float64)

    def trend_tensor(self, trend_len: int = TREND_WEEKS) -> np.ndarray:
        return np.array(
            [[t.view(trend_len) for t in p.trends] for p in self.products],
            dtype=np.float64)


def temporal_fields(release: date) -> tuple[int, int, int, int]:
    """(day_of_week 0-6 Monday=0, ISO week_of_year 1-53, month 1-12, year)."""
    iso = release.isocalendar()
    return release.weekday(), iso[1], release.month, release.year


# ---------------------------------------------------------------------------
# feature providers


class FeatureProvider:
    """Deterministic map from a key (image bytes or attribute text) to R^dim."""

    name: str
    dim: int

    def vector(self, key: str | bytes) -> np.ndarray:
        raise NotImplementedError


class HashFeatureProvider(FeatureProvider):
    """Seeded hash of the key expanded to a pseudo-random unit-scale vector.

    Stands in for learned image/text encoders: same input gives the same
    vector, different inputs give (almost surely) different ones.
    """

    def __init__(self, dim: int, seed: int = 0, name: str = "hashed"):
        if dim < 1:
            raise ValidationError(f"provider dim must be positive, got {dim}")
        self.dim = dim
        self.seed = seed
        self.name = name

    def vector(self, key: str | bytes) -> np.ndarray:
        raw = key.encode("utf-8") if isinstance(key, str) else key
        digest = hashlib.sha256(raw).digest()
        entropy = int.from_bytes(digest[:8], "big")
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, entropy]))
        return rng.standard_normal(self.dim)


class DirectoryFeatureProvider(FeatureProvider):
    """Reads precomputed per-product vectors: raw little-endian float64 files
    named exactly by product id inside ``root``."""

    def __init__(self, root, dim: int, name: str = "files"):
        self.root = Path(root)
        self.dim = dim
        self.name = name

    def vector(self, key: str | bytes) -> np.ndarray:
        if isinstance(key, bytes):
            key = key.decode("utf-8")
        path = self.root / key
        if not path.is_file():
            raise SchemaError(f"no feature file for product {key!r} in {self.root}")
        vec = np.fromfile(path, dtype="<f8")
        if vec.size != self.dim:
            raise CompatibilityError(
                f"feature file {path.name}: {vec.size} values, provider expects {self.dim}")
        return vec.astype(np.float64)


# ---------------------------------------------------------------------------
# ingestion


def _read_rows(path: Path, header: list[str]) -> list[tuple[int, list[str]]]:
    """All data rows as (1-based line number, fields). Empty file -> []."""
    if not path.is_file():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        rows = [(i, row) for i, row in enumerate(reader, start=1) if row]
    if not rows:
        return []
    first_line, first = rows[0]
    if [c.strip() for c in first] != header:
        raise SchemaError(f"{path}: expected header {','.join(header)}, "
                          f"got {','.join(first)}")
    out = []
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise SchemaError(f"{path} row {line}: expected {len(header)} fields, "
                              f"got {len(row)}")
        out.append((line, row))
    return out


def _parse_int(text: str, lo: int, hi: int, what: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise ValidationError(f"{what} {text!r} is not an integer") from None
    if not lo <= v <= hi:
        raise ValidationError(f"{what} {v} outside [{lo}, {hi}]")
    return v


def average_trend_samples(samples: Sequence[Sequence[float]],
                          attribute: str = "category") -> TrendSeries:
    """Pointwise mean of 52-length series in the [0,100] domain, rescaled.

    Runs in exact rational arithmetic with one rounding to float64 per
    week, the same path ingest uses, so programmatic averaging and file
    averaging agree bit for bit.
    """
    rows = [list(s) for s in samples]
    if not rows:
        raise ContractError("average_trend_samples needs at least one sample")
    if any(len(r) != TREND_WEEKS for r in rows):
        lens = sorted({len(r) for r in rows})
        raise SchemaError(f"trend samples must all have {TREND_WEEKS} weeks, "
                          f"got lengths {lens}")
    fracs = [[Fraction(v) for v in r] for r in rows]
    n = len(fracs)
    values = tuple(
        float(sum(col[w] for col in fracs) / n / 100) for w in range(TREND_WEEKS))
    return TrendSeries(attribute=attribute, values=values, source_samples=n)


def ingest(products_csv, sales_csv, trends_csv, features_dir=None,
           vocab: Vocabulary | None = None, strict: bool = False) -> Dataset:
    """Load and validate the three-file dataset.

    Products that violate an invariant (missing sales weeks, missing
    trend weeks, out-of-range values, vocabulary misses) are rejected
    individually; each rejection produces a diagnostic carrying the file
    and row involved. With ``strict=True`` any diagnostic raises
    :class:`SchemaError` instead. File-level malformation (bad header,
    wrong field count, duplicate ids) always raises.
    """
    products_csv, sales_csv, trends_csv = (
        Path(products_csv), Path(sales_csv), Path(trends_csv))
    diagnostics: list[str] = []

    # products.csv
    rows = _read_rows(products_csv, PRODUCTS_HEADER)
    records: dict[str, dict] = {}
    order: list[str] = []
    for line, (pid, cat, color, fabric, rel, season) in rows:
        where = f"{products_csv.name} row {line}"
        if pid in records:
            raise SchemaError(f"{where}: duplicate product id {pid!r}")
        problems = []
        try:
            release = date.fromisoformat(rel)
        except ValueError:
            problems.append(f"release_date {rel!r} is not an ISO-8601 date")
            release = None
        if vocab is not None:
            for kind, value in (("category", cat), ("color", color),
                                ("fabric", fabric)):
                msg = vocab.check(kind, value)
                if msg:
                    problems.append(msg)
        if problems:
            diagnostics.extend(f"{where}: product {pid}: {p}" for p in problems)
            records[pid] = {"rejected": True}
            order.append(pid)
            continue
        records[pid] = {
            "rejected": False, "line": line, "category": cat, "color": color,
            "fabric": fabric, "release": release, "season": season,
            "sales": {}, "trends": {a: {} for a in TREND_ATTRIBUTES},
        }
        order.append(pid)

    # sales.csv
    for line, (pid, week, qty) in _read_rows(sales_csv, SALES_HEADER):
        where = f"{sales_csv.name} row {line}"
        rec = records.get(pid)
        if rec is None:
            diagnostics.append(f"{where}: sales row for unknown product {pid!r}")
            continue
        if rec["rejected"]:
            continue
        try:
            w = _parse_int(week, 0, SALES_WEEKS - 1, "week_index")
            q = float(qty)
            if not np.isfinite(q) or q < 0:
                raise ValidationError(f"quantity {qty} is not a finite nonnegative number")
        except ValidationError as exc:
            diagnostics.append(f"{where}: product {pid}: {exc}")
            rec["rejected"] = True
            continue
        if w in rec["sales"]:
            raise SchemaError(f"{where}: duplicate sales week {w} for product {pid!r}")
        rec["sales"][w] = q

    # trends.csv; collect exact per-sample values then average
    for line, (pid, attr, week, value, sample) in _read_rows(trends_csv, TRENDS_HEADER):
        where = f"{trends_csv.name} row {line}"
        rec = records.get(pid)
        if rec is None:
            diagnostics.append(f"{where}: trend row for unknown product {pid!r}")
            continue
        if rec["rejected"]:
            continue
        if attr not in TREND_ATTRIBUTES:
            diagnostics.append(f"{where}: product {pid}: unknown attribute {attr!r}")
            rec["rejected"] = True
            continue
        try:
            w = _parse_int(week, 0, TREND_WEEKS - 1, "week_index")
            s = _parse_int(sample, 0, 10_000, "sample_index")
            v = parse_trend_value(value)
        except ValidationError as exc:
            diagnostics.append(f"{where}: product {pid}: {exc}")
            rec["rejected"] = True
            continue
        cell = rec["trends"][attr].setdefault(s, {})
        if w in cell:
            raise SchemaError(f"{where}: duplicate trend week {w} for product {pid!r}, "
                              f"attribute {attr}, sample {s}")
        cell[w] = v

    feature_provider = None
    if features_dir is not None:
        feature_provider = Path(features_dir)

    products: list[Product] = []
    for pid in order:
        rec = records[pid]
        if rec["rejected"]:
            continue
        where = f"{products_csv.name} row {rec['line']}"
        missing_sales = [w for w in range(SALES_WEEKS) if w not in rec["sales"]]
        if missing_sales:
            diagnostics.append(f"{where}: product {pid}: missing sales weeks "
                               f"{missing_sales} ({len(rec['sales'])} of {SALES_WEEKS})")
            continue
        series: list[TrendSeries] = []
        bad = False
        for attr in TREND_ATTRIBUTES:
            by_sample = rec["trends"][attr]
            if not by_sample:
                diagnostics.append(f"{where}: product {pid}: no trend rows for "
                                   f"attribute {attr}")
                bad = True
                continue
            complete = []
            for s in sorted(by_sample):
                weeks = by_sample[s]
                gaps = [w for w in range(TREND_WEEKS) if w not in weeks]
                if gaps:
                    diagnostics.append(
                        f"{where}: product {pid}: trend {attr} sample {s} missing "
                        f"weeks {gaps[:6]}{'...' if len(gaps) > 6 else ''}")
                    bad = True
                else:
                    complete.append([weeks[w] for w in range(TREND_WEEKS)])
            if bad:
                continue
            n = len(complete)
            values = tuple(
                float(sum(sample[w] for sample in complete) / n / 100)
                for w in range(TREND_WEEKS))
            series.append(TrendSeries(attribute=attr, values=values, source_samples=n))
        if bad:
            continue
        image_features = None
        if feature_provider is not None:
            path = feature_provider / pid
            if path.is_file():
                image_features = tuple(np.fromfile(path, dtype="<f8").tolist())
            else:
                diagnostics.append(f"features: product {pid}: no file {path.name} "
                                   f"in {feature_provider}")
        products.append(Product(
            id=pid, category=rec["category"], color=rec["color"],
            fabric=rec["fabric"], release_date=rec["release"],
            season=rec["season"], sales=tuple(rec["sales"][w] for w in range(SALES_WEEKS)),
            trends=tuple(series), image_features=image_features))

    if strict and diagnostics:
        raise SchemaError("ingest found invalid rows:\n  " + "\n  ".join(diagnostics))
    return Dataset(products=tuple(products), diagnostics=tuple(diagnostics))


def emit(dataset: Dataset, out_dir) -> dict[str, Path]:
    """Write the dataset back to the three-file layout, bit-exactly.

    Trend values are written as the exact decimal expansion of 100*value
    with sample_index 0; sales as shortest round-tripping floats. When
    any product carries image features they are written as raw float64
    files under ``features/``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {name: out / f"{name}.csv" for name in ("products", "sales", "trends")}

    with open(paths["products"], "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(PRODUCTS_HEADER)
        for p in dataset:
            w.writerow([p.id, p.category, p.color, p.fabric,
                        p.release_date.isoformat(), p.season])

    with open(paths["sales"], "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(SALES_HEADER)
        for p in dataset:
            for week, qty in enumerate(p.sales):
                w.writerow([p.id, week, repr(float(qty))])

    with open(paths["trends"], "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRENDS_HEADER)
        for p in dataset:
            for series in p.trends:
                for week, value in enumerate(series.values):
                    w.writerow([p.id, series.attribute, week,
                                format_trend_value(value), 0])

    if any(p.image_features is not None for p in dataset):
        feat_dir = out / "features"
        feat_dir.mkdir(exist_ok=True)
        for p in dataset:
            if p.image_features is not None:
                np.asarray(p.image_features, dtype="<f8").tofile(feat_dir / p.id)
        paths["features"] = feat_dir
    return paths


# ---------------------------------------------------------------------------
# split and model input assembly


def split(dataset: Dataset, test_size: int) -> tuple[Dataset, Dataset]:
    """Hold out the ``test_size`` most recent products by release date.

    Ties on release date break by ascending id; the later id is the more
    recent. Train keeps the remainder in original order.
    """
    if test_size < 0:
        raise ContractError(f"test_size must be nonnegative, got {test_size}")
    if test_size and test_size >= len(dataset):
        raise ContractError(
            f"test_size {test_size} must be smaller than dataset size {len(dataset)}")
    ranked = sorted(dataset.products, key=lambda p: (p.release_date, p.id))
    test_ids = {p.id for p in ranked[len(ranked) - test_size:]} if test_size else set()
    train = tuple(p for p in dataset.products if p.id not in test_ids)
    test = tuple(p for p in dataset.products if p.id in test_ids)
    return Dataset(products=train), Dataset(products=test)


@dataclass(frozen=True)
class ModelInputs:
    """Dense arrays the model consumes, aligned by product row."""

    product_ids: tuple[str, ...]
    trends: np.ndarray        # (N, 3, trend_len)
    image_feats: np.ndarray   # (N, image_dim)
    text_feats: np.ndarray    # (N, 3, text_dim)
    temporal: np.ndarray      # (N, 4) ints: day_of_week, week_of_year, month, year
    targets: np.ndarray       # (N, horizon)

    def __len__(self) -> int:
        return len(self.product_ids)

    def take(self, indices) -> "ModelInputs":
        idx = np.asarray(indices, dtype=np.intp)
        return ModelInputs(
            product_ids=tuple(self.product_ids[i] for i in idx),
            trends=self.trends[idx], image_feats=self.image_feats[idx],
            text_feats=self.text_feats[idx], temporal=self.temporal[idx],
            targets=self.targets[idx])


def assemble_inputs(dataset: Dataset, image_provider: FeatureProvider,
                    text_provider: FeatureProvider, trend_len: int = TREND_WEEKS,
                    horizon: int = SALES_WEEKS) -> ModelInputs:
    """Build aligned model input arrays from a validated dataset.

    Image vectors come from per-product stored features when present,
    otherwise from ``image_provider`` keyed by product id; mixing the two
    sources is allowed only if their lengths agree.
    """
    if horizon < 1 or horizon > SALES_WEEKS:
        raise ValidationError(f"horizon {horizon} outside [1, {SALES_WEEKS}]")
    ids, trends, images, texts, temporal, targets = [], [], [], [], [], []
    for p in dataset:
        ids.append(p.id)
        trends.append([t.view(trend_len) for t in p.trends])
        if p.image_features is not None:
            vec = np.asarray(p.image_features, dtype=np.float64)
            if vec.size != image_provider.dim:
                raise CompatibilityError(
                    f"product {p.id}: stored image features have {vec.size} values, "
                    f"provider {image_provider.name!r} declares {image_provider.dim}")
            images.append(vec)
        else:
            images.append(image_provider.vector(p.id))
        texts.append([text_provider.vector(p.category),
                      text_provider.vector(p.color),
                      text_provider.vector(p.fabric)])
        temporal.append(temporal_fields(p.release_date))
        targets.append(p.sales[:horizon])
    n = len(ids)
    return ModelInputs(
        product_ids=tuple(ids),
        trends=np.asarray(trends, dtype=np.float64).reshape(n, 3, trend_len),
        image_feats=np.asarray(images, dtype=np.float64).reshape(n, image_provider.dim),
        text_feats=np.asarray(texts, dtype=np.float64).reshape(n, 3, text_provider.dim),
        temporal=np.asarray(temporal, dtype=np.int64).reshape(n, 4),
        targets=np.asarray(targets, dtype=np.float64).reshape(n, horizon))
