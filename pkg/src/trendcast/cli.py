"""Command-line surface tying the library together.

Commands: train, evaluate, forecast, analyze, first-order, synth, convert.
Every run writes its outputs under one run directory plus a manifest line
recording the command, config, seed, inputs, and artifact hashes.

Exit codes: 0 success, 2 usage or configuration, 3 data or compatibility,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path

import numpy as np

from .analysis import (LAG_BUCKETS, attention_lag_report, bucket_label,
                       correlation_analysis)
from .baselines import sixty_percent_policy
from .data import (SALES_WEEKS, TREND_ATTRIBUTES, TREND_WEEKS, Dataset,
                   HashFeatureProvider, Product, TrendSeries, assemble_inputs,
                   emit, ingest, parse_trend_value, split)
from .errors import (CompatibilityError, ConfigurationError, ContractError,
                     DimensionError, NumericalError, SchemaError,
                     TrendcastError, ValidationError)
from .first_order import DEFAULT_UNIT_COST, first_order_comparison
from .metrics import evaluate as evaluate_metrics
from .model import ModelConfig, TrendModel, load_model
from .synthetic import generate_synthetic
from .training import TrainConfig, train
from . import reporting

DATA_ROOT_ENV = "TRENDCAST_DATA_ROOT"

CONFIG_SECTIONS = ("dataset", "model", "train", "seed")
DATASET_KEYS = ("products", "sales", "trends", "features_dir")
MODEL_KEYS = tuple(f.name for f in dataclasses.fields(ModelConfig))
TRAIN_KEYS = tuple(f.name for f in dataclasses.fields(TrainConfig))


# ---------------------------------------------------------------------------
# run plumbing


@dataclass
class RunManifest:
    """One append-only record per command invocation."""

    command: str
    config: dict
    seed: int | None
    inputs: dict
    outputs: list
    wall_time_s: float
    artifact_hashes: dict
    started_at: str

    def append_to(self, run_dir) -> Path:
        path = Path(run_dir) / "manifest.jsonl"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(dataclasses.asdict(self), sort_keys=True))
            fh.write("\n")
        return path


def _data_root() -> Path:
    return Path(os.environ.get(DATA_ROOT_ENV, "."))


def _resolve(path) -> Path:
    p = Path(path)
    return p if p.is_absolute() else _data_root() / p


def _require_file(path, what: str) -> Path:
    p = _resolve(path)
    if not p.is_file():
        raise ConfigurationError(f"missing {what} path: {p}")
    return p


def _run_dir(args, seed) -> Path:
    if getattr(args, "out", None):
        run = _resolve(args.out)
    else:
        stamp = time.strftime("%Y%m%d-%H%M%S")
        run = _data_root() / "runs" / f"{stamp}-seed{seed}"
    run.mkdir(parents=True, exist_ok=True)
    return run


def _hash_artifacts(run_dir: Path) -> dict:
    hashes = {}
    for path in sorted(run_dir.rglob("*")):
        if path.is_file() and path.name != "manifest.jsonl":
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            hashes[path.relative_to(run_dir).as_posix()] = digest
    return hashes


def _finish_run(run_dir: Path, command: str, config: dict, seed,
                inputs: dict, t0: float, started: str) -> RunManifest:
    hashes = _hash_artifacts(run_dir)
    manifest = RunManifest(
        command=command, config=config, seed=seed,
        inputs={k: str(v) for k, v in inputs.items()},
        outputs=sorted(hashes), wall_time_s=time.monotonic() - t0,
        artifact_hashes=hashes, started_at=started)
    manifest.append_to(run_dir)
    return manifest


# ---------------------------------------------------------------------------
# config files


def _check_keys(section: str, given, allowed) -> None:
    for key in given:
        if key not in allowed:
            name = f"{section}.{key}" if section else key
            raise ConfigurationError(f"unknown config key: {name}")


def apply_override(config: dict, spec: str) -> None:
    """Apply one dotted command-line override, e.g. model.d_model=16."""
    key, sep, raw = spec.partition("=")
    if not sep or not key:
        raise ConfigurationError(f"override must look like section.key=value: {spec!r}")
    try:
        value = json.loads(raw)
    except ValueError:
        value = raw
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigurationError(f"cannot override through non-object key {part!r}")
    node[parts[-1]] = value


def load_config(path, overrides=()) -> dict:
    with open(_require_file(path, "config"), encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config is not valid JSON: {exc}") from None
    if not isinstance(config, dict):
        raise ConfigurationError("config must be a JSON object")
    for spec in overrides:
        apply_override(config, spec)
    _check_keys("", config, CONFIG_SECTIONS)
    _check_keys("dataset", config.get("dataset") or {}, DATASET_KEYS)
    _check_keys("model", config.get("model") or {}, MODEL_KEYS)
    _check_keys("train", config.get("train") or {}, TRAIN_KEYS)
    if "seed" in config and not isinstance(config["seed"], int):
        raise ConfigurationError("config seed must be an integer")
    return config


# ---------------------------------------------------------------------------
# shared dataset / checkpoint loading


def _ingest_from_args(args) -> tuple[Dataset, dict]:
    paths = {
        "products": _require_file(args.products, "dataset"),
        "sales": _require_file(args.sales, "dataset"),
        "trends": _require_file(args.trends, "dataset"),
    }
    features = getattr(args, "features_dir", None)
    if features:
        features = _resolve(features)
        if not features.is_dir():
            raise ConfigurationError(f"missing features directory: {features}")
        paths["features_dir"] = features
    dataset = ingest(paths["products"], paths["sales"], paths["trends"],
                     features_dir=features)
    for line in dataset.diagnostics:
        print(f"warning: {line}", file=sys.stderr)
    return dataset, paths


def _load_checkpoint(path) -> tuple[TrendModel, dict]:
    p = _resolve(path)
    if not p.is_dir():
        raise ConfigurationError(f"missing checkpoint path: {p}")
    return load_model(p)


def _assemble(dataset: Dataset, model: TrendModel, sidecar: dict):
    providers = sidecar.get("providers") or {}
    for kind, name in providers.items():
        if name not in ("hashed-image", "hashed-text"):
            raise CompatibilityError(
                f"checkpoint used a custom {kind} provider {name!r}; "
                "supply the matching features on disk to evaluate")
    c = model.config
    img = HashFeatureProvider(dim=c.image_dim, seed=0, name="hashed-image")
    txt = HashFeatureProvider(dim=c.text_dim, seed=1, name="hashed-text")
    return assemble_inputs(dataset, img, txt, trend_len=c.trend_len,
                           horizon=c.horizon)


# ---------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    t0, started = time.monotonic(), datetime.now().isoformat(timespec="seconds")
    config = load_config(args.config, args.set or ())
    seed = int(config.get("seed", 0))
    section = config.get("dataset") or {}
    for key in ("products", "sales", "trends"):
        if key not in section:
            raise ConfigurationError(f"config missing dataset.{key}")

    dataset, inputs = _ingest_from_args(argparse.Namespace(
        products=section["products"], sales=section["sales"],
        trends=section["trends"], features_dir=section.get("features_dir")))
    model = TrendModel(ModelConfig(**(config.get("model") or {})), seed=seed)
    train_section = dict(config.get("train") or {})
    train_section.setdefault("seed", seed)
    train_config = TrainConfig(**train_section)

    run_dir = _run_dir(args, seed)
    result = train(dataset, model, train_config, out_dir=run_dir)
    reporting.plot_loss_curve(result.loss_curve, run_dir / "loss_curve.svg")
    _finish_run(run_dir, "train", config, seed, inputs, t0, started)
    print(f"checkpoint: {run_dir}")
    print(f"products trained: {len(dataset)}")
    print(f"final epoch loss: {result.loss_curve[-1]!r}")
    return 0


def _parse_horizons(raw: str, model_horizon: int) -> list:
    items = [s for s in raw.split(",") if s.strip()]
    if not items:
        raise ConfigurationError("horizon list is empty")
    horizons = []
    for s in items:
        try:
            h = int(s)
        except ValueError:
            raise ConfigurationError(f"bad horizon {s!r}") from None
        if not 1 <= h <= model_horizon:
            raise ConfigurationError(
                f"horizon {h} outside 1..{model_horizon} for this checkpoint")
        horizons.append(h)
    return sorted(set(horizons))


def cmd_evaluate(args) -> int:
    t0, started = time.monotonic(), datetime.now().isoformat(timespec="seconds")
    model, sidecar = _load_checkpoint(args.checkpoint)
    dataset, inputs = _ingest_from_args(args)
    horizons = _parse_horizons(args.horizons, model.config.horizon)
    assembled = _assemble(dataset, model, sidecar)
    scale = float(sidecar.get("target_scale", 1.0))
    predictions = model.predict(assembled, target_scale=scale)
    categories = [p.category for p in dataset]

    run_dir = _run_dir(args, sidecar.get("train_config", {}).get("seed"))
    inputs["checkpoint"] = _resolve(args.checkpoint)
    wapes = []
    for h in horizons:
        report = evaluate_metrics(assembled.targets, predictions, horizon=h,
                                  categories=categories)
        report.write(run_dir / f"h{h:02d}")
        wapes.append(report.wape)
        print(f"h={h} wape={report.wape:.4f} mae={report.mae:.4f} "
              f"ts={report.ts:.3f} erp={report.erp:.4f}")
    if len(horizons) > 1:
        reporting.plot_wape_by_horizon(horizons, wapes,
                                       run_dir / "wape_by_horizon.svg")
    final = evaluate_metrics(assembled.targets, predictions,
                             horizon=horizons[-1], categories=categories)
    if final.per_category:
        reporting.plot_category_wape(
            {cat: row["wape"] for cat, row in final.per_category.items()},
            run_dir / "wape_by_category.svg")
    _finish_run(run_dir, "evaluate", {"horizons": horizons}, None, inputs,
                t0, started)
    print(f"reports: {run_dir}")
    return 0


FORECAST_HEADER = ["product_id"] + [f"week_{i + 1}" for i in range(12)]


def cmd_forecast(args) -> int:
    t0, started = time.monotonic(), datetime.now().isoformat(timespec="seconds")
    model, sidecar = _load_checkpoint(args.checkpoint)
    dataset, inputs = _ingest_from_args(args)
    assembled = _assemble(dataset, model, sidecar)
    scale = float(sidecar.get("target_scale", 1.0))
    predictions = model.predict(assembled, target_scale=scale)

    run_dir = _run_dir(args, sidecar.get("train_config", {}).get("seed"))
    inputs["checkpoint"] = _resolve(args.checkpoint)
    path = run_dir / "forecasts.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FORECAST_HEADER[:1 + predictions.shape[1]])
        for pid, row in zip(assembled.product_ids, predictions):
            writer.writerow([pid] + [repr(v) for v in row.tolist()])
    _finish_run(run_dir, "forecast", {}, None, inputs, t0, started)
    print(f"forecasts: {path}")
    return 0


def read_forecast_csv(path) -> dict:
    """Read a forecasts.csv into {product_id: [weekly values...]}."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][:1] != ["product_id"]:
        raise SchemaError(f"{path}: expected a product_id,week_1,... header")
    out = {}
    for number, row in enumerate(rows[1:], start=2):
        if len(row) != len(rows[0]):
            raise SchemaError(f"{path} row {number}: {len(row)} fields, "
                              f"expected {len(rows[0])}")
        if row[0] in out:
            raise SchemaError(f"{path} row {number}: duplicate product {row[0]!r}")
        try:
            out[row[0]] = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise SchemaError(f"{path} row {number}: {exc}") from None
    return out


def cmd_analyze(args) -> int:
    t0, started = time.monotonic(), datetime.now().isoformat(timespec="seconds")
    dataset, inputs = _ingest_from_args(args)
    run_dir = _run_dir(args, None)

    result = correlation_analysis(dataset, alpha=args.alpha)
    reporting.write_correlation_records(result.records,
                                        run_dir / "correlation_records.csv")
    reporting.write_json(result.summary, run_dir / "correlation_summary.json")
    labels = [bucket_label(lo, hi, closed=(i == len(LAG_BUCKETS) - 1))
              for i, (lo, hi) in enumerate(LAG_BUCKETS)]
    reporting.plot_lag_histogram(labels, result.best_lag_histogram,
                                 run_dir / "correlation_lags.svg",
                                 title="Best correlation lag by bucket")
    print(f"products analyzed: {result.summary['products_total']}, "
          f"nonstationary: {result.summary['products_nonstationary']}")
    print(f"modal correlation lag bucket: {result.summary['modal_lag_bucket']}")

    if args.checkpoint:
        model, sidecar = _load_checkpoint(args.checkpoint)
        if not model.config.use_encoder:
            raise ConfigurationError(
                "checkpoint was trained without the trend encoder; "
                "attention analysis needs an encoder-enabled model")
        assembled = _assemble(dataset, model, sidecar)
        forecast = model.forward(assembled)
        report = attention_lag_report([forecast.cross_attention])
        reporting.write_json(report.to_dict(), run_dir / "attention_lags.json")
        reporting.plot_lag_histogram(report.labels, report.counts,
                                     run_dir / "attention_lags.svg",
                                     title="Peak cross-attention lag by bucket")
        inputs["checkpoint"] = _resolve(args.checkpoint)
        print(f"modal attention lag bucket: {report.modal_bucket}")

    _finish_run(run_dir, "analyze", {"alpha": args.alpha}, None, inputs,
                t0, started)
    print(f"reports: {run_dir}")
    return 0


def cmd_first_order(args) -> int:
    t0, started = time.monotonic(), datetime.now().isoformat(timespec="seconds")
    dataset, inputs = _ingest_from_args(args)
    ids = [p.id for p in dataset]
    actuals = np.array([p.sales for p in dataset])

    weekly = {}
    for spec in args.forecast or []:
        name, sep, raw_path = spec.partition("=")
        if not sep or not name:
            raise ConfigurationError(
                f"forecast must look like name=path: {spec!r}")
        table = read_forecast_csv(_require_file(raw_path, "forecast"))
        missing = [pid for pid in ids if pid not in table]
        if missing:
            raise CompatibilityError(
                f"forecast {name!r} lacks {len(missing)} dataset products, "
                f"first missing: {missing[0]!r}")
        weekly[name] = [table[pid] for pid in ids]
        inputs[f"forecast:{name}"] = _resolve(raw_path)

    history = dataset
    if args.history_products:
        if not (args.history_sales and args.history_trends):
            raise ConfigurationError("--history-sales and --history-trends are "
                                     "required when --history-products is given")
        history, hist_paths = _ingest_from_args(argparse.Namespace(
            products=args.history_products, sales=args.history_sales,
            trends=args.history_trends, features_dir=None))
        inputs.update({f"history_{k}": v for k, v in hist_paths.items()})
    orders = [sixty_percent_policy(p, history) for p in dataset]

    report = first_order_comparison(
        actuals, weekly_forecasts=weekly,
        order_quantities={"policy-60pct": orders},
        horizon=args.weeks, unit_cost=args.unit_cost, product_ids=ids)
    run_dir = _run_dir(args, None)
    report.write(run_dir)
    reporting.plot_first_order_dollars(report, run_dir / "first_order.svg")
    for m in report.methods:
        print(f"{m.method}: mean unit error {m.mean_unit_error:.3f}, "
              f"total ${m.dollar_total(report.unit_cost):.2f}")
    _finish_run(run_dir, "first-order",
                {"weeks": args.weeks, "unit_cost": args.unit_cost},
                None, inputs, t0, started)
    print(f"reports: {run_dir}")
    return 0


def cmd_synth(args) -> int:
    t0, started = time.monotonic(), datetime.now().isoformat(timespec="seconds")
    dataset = generate_synthetic(args.products, seed=args.seed)
    run_dir = _run_dir(args, args.seed)
    if args.test_size:
        train_part, test_part = split(dataset, args.test_size)
        emit(train_part, run_dir / "train")
        emit(test_part, run_dir / "test")
        print(f"train products: {len(train_part)}, test products: {len(test_part)}")
    else:
        emit(dataset, run_dir)
        print(f"products: {len(dataset)}")
    reporting.write_json(dict(dataset.metadata), run_dir / "synth_metadata.json")
    _finish_run(run_dir, "synth",
                {"products": args.products, "test_size": args.test_size},
                args.seed, {}, t0, started)
    print(f"dataset: {run_dir}")
    return 0


# ---------------------------------------------------------------------------
# convert: wide export tables -> the package schema


def _read_table(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty table")
    return rows


def _sales_columns(header) -> list:
    for names in ([str(i) for i in range(SALES_WEEKS)],
                  [f"w{i + 1}" for i in range(SALES_WEEKS)]):
        if all(n in header for n in names):
            return [header.index(n) for n in names]
    raise SchemaError("products table lacks 12 weekly sales columns "
                      "(named 0..11 or w1..w12)")


def cmd_convert(args) -> int:
    """Convert calendar-indexed export tables into the package schema.

    The products table is one row per product: external_code, season,
    category, color, fabric, release_date (ISO), and 12 weekly sales
    columns. The trends table is calendar-indexed: a date column of ISO
    week starts plus one 0-100 column per attribute value; each product's
    52-week window is sliced from the rows strictly before its release.
    """
    t0, started = time.monotonic(), datetime.now().isoformat(timespec="seconds")
    products_rows = _read_table(_require_file(args.products_table, "products table"))
    trends_rows = _read_table(_require_file(args.trends_table, "trends table"))

    header = products_rows[0]
    for name in ("external_code", "season", "category", "color", "fabric",
                 "release_date"):
        if name not in header:
            raise SchemaError(f"products table lacks a {name!r} column")
    col = {name: header.index(name) for name in header}
    sales_cols = _sales_columns(header)

    t_header = trends_rows[0]
    if not t_header or t_header[0] != "date":
        raise SchemaError("trends table must start with a 'date' column")
    try:
        calendar = [(date.fromisoformat(r[0]), r) for r in trends_rows[1:]]
    except ValueError as exc:
        raise SchemaError(f"trends table date column: {exc}") from None
    calendar.sort(key=lambda item: item[0])
    t_col = {name: i for i, name in enumerate(t_header)}

    products, skipped = [], []
    seen = set()
    for number, row in enumerate(products_rows[1:], start=2):
        code = row[col["external_code"]]
        if code in seen:
            raise SchemaError(f"products table row {number}: duplicate "
                              f"external_code {code!r}")
        seen.add(code)
        try:
            release = date.fromisoformat(row[col["release_date"]])
            sales = tuple(float(row[i]) for i in sales_cols)
        except ValueError as exc:
            skipped.append(f"{code}: {exc}")
            continue
        window = [r for d, r in calendar if d < release][-TREND_WEEKS:]
        if len(window) < TREND_WEEKS:
            skipped.append(f"{code}: only {len(window)} trend weeks before release")
            continue
        values = {}
        missing = None
        for kind in TREND_ATTRIBUTES:
            term = row[col[kind]]
            if term not in t_col:
                missing = f"{code}: trends table has no column {term!r}"
                break
            try:
                # exact Fraction in 0..100, one float conversion after /100
                values[kind] = tuple(
                    float(parse_trend_value(r[t_col[term]]) / 100) for r in window)
            except (ValidationError, ValueError) as exc:
                missing = f"{code}: {exc}"
                break
        if missing:
            skipped.append(missing)
            continue
        try:
            products.append(Product(
                id=code, category=row[col["category"]], color=row[col["color"]],
                fabric=row[col["fabric"]], release_date=release,
                season=row[col["season"]], sales=sales,
                trends=tuple(TrendSeries(attribute=kind, values=values[kind])
                             for kind in TREND_ATTRIBUTES)))
        except ValidationError as exc:
            skipped.append(f"{code}: {exc}")

    for line in skipped:
        print(f"skipped {line}", file=sys.stderr)
    if not products:
        raise ValidationError("no products survived conversion")
    run_dir = _run_dir(args, None)
    emit(Dataset(products=tuple(products)), run_dir)
    _finish_run(run_dir, "convert", {},
                None, {"products_table": _resolve(args.products_table),
                       "trends_table": _resolve(args.trends_table)}, t0, started)
    print(f"converted: {len(products)} products, skipped: {len(skipped)}")
    print(f"dataset: {run_dir}")
    return 0


# ---------------------------------------------------------------------------
# parser


def _add_dataset_flags(parser, features=True):
    parser.add_argument("--products", required=True, help="products.csv path")
    parser.add_argument("--sales", required=True, help="sales.csv path")
    parser.add_argument("--trends", required=True, help="trends.csv path")
    if features:
        parser.add_argument("--features-dir", dest="features_dir",
                            help="directory of per-product image feature files")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendcast",
        description="Multimodal new-product sales forecasting with "
                    "search-interest attention.",
        epilog=f"Relative paths resolve against ${DATA_ROOT_ENV} "
               "(default: current directory).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model from a JSON config")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config entry, e.g. model.d_model=16")
    p.add_argument("--out", help="run directory (default: timestamped)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="score a checkpoint on a dataset")
    p.add_argument("--checkpoint", required=True)
    _add_dataset_flags(p)
    p.add_argument("--horizons", default="6",
                   help="comma-separated forecast horizons (default: 6)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("forecast", help="write per-product weekly forecasts")
    p.add_argument("--checkpoint", required=True)
    _add_dataset_flags(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("analyze", help="correlation and attention-lag reports")
    _add_dataset_flags(p)
    p.add_argument("--checkpoint", help="optional; adds attention-lag report")
    p.add_argument("--alpha", type=float, default=0.05,
                   help="significance level (default: 0.05)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("first-order",
                       help="compare buy quantities against realized demand")
    _add_dataset_flags(p, features=False)
    p.add_argument("--forecast", action="append", metavar="NAME=PATH",
                   help="a forecasts.csv to assess; repeatable")
    p.add_argument("--weeks", type=int, default=6,
                   help="opening weeks to compare (default: 6)")
    p.add_argument("--unit-cost", dest="unit_cost", type=float,
                   default=DEFAULT_UNIT_COST,
                   help="dollars per unit (default: 25)")
    p.add_argument("--history-products", help="separate history dataset")
    p.add_argument("--history-sales")
    p.add_argument("--history-trends")
    p.add_argument("--out")
    p.set_defaults(func=cmd_first_order)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--products", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--test-size", dest="test_size", type=int, default=0,
                   help="hold out the N most recent products")
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("convert",
                       help="convert wide export tables to the package schema")
    p.add_argument("--products-table", required=True)
    p.add_argument("--trends-table", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)

    return parser


# exceptions grouped by exit code; order matters where classes overlap
_EXIT_CODES = (
    (NumericalError, 4),
    ((CompatibilityError, SchemaError, ValidationError, DimensionError), 3),
    ((ConfigurationError, ContractError), 2),
    (TrendcastError, 2),
)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrendcastError as exc:
        print(f"error: {exc}", file=sys.stderr)
        for kinds, code in _EXIT_CODES:
            if isinstance(exc, kinds):
                return code
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
