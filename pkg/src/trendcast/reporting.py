"""Delimited report writers and static SVG figures.

Figures are rendered headless and with a pinned hash salt and no embedded
creation date, so the same inputs produce byte-identical files run to run.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "trendcast"

import matplotlib.pyplot as plt  # noqa: E402

from .errors import ContractError


def save_figure(fig, path):
    """Write a figure as deterministic SVG and release it."""
    path = os.fspath(path)
    try:
        if not path.endswith(".svg"):
            raise ContractError(f"figure path must end in .svg: {path}")
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path


def _new_axes(title, xlabel, ylabel):
    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_loss_curve(losses, path, title="Training loss"):
    if len(losses) == 0:
        raise ContractError("empty loss curve")
    fig, ax = _new_axes(title, "epoch", "mean squared error")
    ax.plot(range(1, len(losses) + 1), list(losses), marker=".", color="tab:blue")
    return save_figure(fig, path)


def plot_wape_by_horizon(horizons, wapes, path, title="WAPE by forecast horizon"):
    if len(horizons) != len(wapes) or not horizons:
        raise ContractError("horizons and wapes must be equal-length and non-empty")
    fig, ax = _new_axes(title, "forecast horizon (weeks)", "WAPE")
    ax.plot(list(horizons), list(wapes), marker="o", color="tab:orange")
    ax.set_xticks(list(horizons))
    return save_figure(fig, path)


def plot_category_wape(per_category, path, title="WAPE by category"):
    """Bar chart from a mapping of category name to WAPE."""
    if not per_category:
        raise ContractError("no categories to plot")
    names = sorted(per_category)
    fig, ax = _new_axes(title, "category", "WAPE")
    ax.bar(names, [per_category[n] for n in names], color="tab:green")
    return save_figure(fig, path)


def plot_lag_histogram(labels, counts, path, title="Best-lag distribution"):
    if len(labels) != len(counts) or not labels:
        raise ContractError("labels and counts must be equal-length and non-empty")
    fig, ax = _new_axes(title, "lag bucket (weeks before release)", "products")
    ax.bar(range(len(labels)), list(counts), color="tab:purple",
           tick_label=list(labels))
    return save_figure(fig, path)


def plot_first_order_dollars(report, path, title="First-order dollar discrepancy"):
    names = [m.method for m in report.methods]
    if not names:
        raise ContractError("report has no methods")
    totals = [m.dollar_total(report.unit_cost) for m in report.methods]
    fig, ax = _new_axes(title, "method", f"dollars at ${report.unit_cost:g}/unit")
    ax.bar(names, totals, color="tab:red")
    return save_figure(fig, path)


def write_correlation_records(records, path):
    """CSV of sliding-window correlation records; undefined windows stay blank."""
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["product_id", "attribute", "lag", "rho", "p_value",
                         "significant"])
        for r in records:
            writer.writerow([
                r.product_id, r.attribute, r.lag,
                "" if r.rho is None else repr(r.rho),
                "" if r.p_value is None else repr(r.p_value),
                "true" if r.significant else "false",
            ])
    return path


def write_json(payload, path):
    """Deterministic JSON file (sorted keys, trailing newline)."""
    path = os.fspath(path)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
