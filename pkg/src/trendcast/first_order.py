"""First-order buy assessment: ordered units vs realized early-season demand.

The first order is the stock bought before a season starts. Each method is
judged per product by how far its implied order is from the units actually
sold over the opening weeks, in units and in dollars at a configurable unit
cost.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractError, DimensionError, ValidationError

DEFAULT_HORIZON = 6
DEFAULT_UNIT_COST = 25.0


@dataclass(frozen=True)
class MethodFirstOrder:
    """Per-product unit errors of one ordering method, with aggregates."""

    method: str
    ordered_units: tuple
    unit_errors: tuple

    @property
    def total_unit_error(self):
        # fsum: correctly rounded, so aggregates do not depend on product order
        return math.fsum(self.unit_errors)

    @property
    def mean_unit_error(self):
        return self.total_unit_error / len(self.unit_errors)

    def dollar_total(self, unit_cost=DEFAULT_UNIT_COST):
        return self.total_unit_error * unit_cost

    def dollar_mean(self, unit_cost=DEFAULT_UNIT_COST):
        return self.mean_unit_error * unit_cost


@dataclass(frozen=True)
class FirstOrderReport:
    horizon: int
    unit_cost: float
    product_ids: tuple
    actual_units: tuple
    methods: tuple

    def method(self, name):
        for m in self.methods:
            if m.method == name:
                return m
        raise ContractError(f"no method named {name!r} in this report")

    def to_dict(self):
        return {
            "horizon": self.horizon,
            "unit_cost": self.unit_cost,
            "products": len(self.product_ids),
            "methods": [
                {
                    "method": m.method,
                    "mean_unit_error": m.mean_unit_error,
                    "total_unit_error": m.total_unit_error,
                    "dollar_mean": m.dollar_mean(self.unit_cost),
                    "dollar_total": m.dollar_total(self.unit_cost),
                }
                for m in self.methods
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, out_dir):
        """Emit first_order.json (aggregates) and first_order.csv (per product)."""
        import os

        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "first_order.json"), "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")
        with open(os.path.join(out_dir, "first_order.csv"), "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "product_id", "ordered_units",
                             "actual_units", "unit_error", "dollar_error"])
            for m in self.methods:
                for pid, ordered, actual, err in zip(
                        self.product_ids, m.ordered_units,
                        self.actual_units, m.unit_errors):
                    writer.writerow([m.method, pid, repr(ordered), repr(actual),
                                     repr(err), repr(err * self.unit_cost)])


def _demand_totals(actuals, horizon):
    a = np.atleast_2d(np.asarray(actuals, dtype=float))
    if a.shape[0] == 0:
        raise ContractError("no products to assess")
    if a.shape[1] < horizon:
        raise DimensionError(
            f"actuals cover {a.shape[1]} weeks, need at least {horizon}")
    return a, a[:, :horizon].sum(axis=1)


def _method_result(name, orders, actual_totals):
    orders = np.asarray(orders, dtype=float)
    if orders.shape != actual_totals.shape:
        raise DimensionError(
            f"method {name!r} supplies {orders.shape[0] if orders.ndim else 0} "
            f"orders for {actual_totals.shape[0]} products")
    errors = np.abs(orders - actual_totals)
    return MethodFirstOrder(method=name, ordered_units=tuple(orders.tolist()),
                            unit_errors=tuple(errors.tolist()))


def first_order_error(forecasts, actuals, horizon=DEFAULT_HORIZON,
                      unit_cost=DEFAULT_UNIT_COST, method="model",
                      product_ids=None):
    """Assess one weekly-forecast method against realized demand.

    The implied order is the forecast summed over the first ``horizon``
    weeks (indices 0..horizon-1); its error is the absolute difference
    from the actual units sold over the same weeks.
    """
    return first_order_comparison(actuals, weekly_forecasts={method: forecasts},
                                  horizon=horizon, unit_cost=unit_cost,
                                  product_ids=product_ids)


def first_order_comparison(actuals, weekly_forecasts=None, order_quantities=None,
                           horizon=DEFAULT_HORIZON, unit_cost=DEFAULT_UNIT_COST,
                           product_ids=None):
    """Build a first-order report over any mix of methods.

    weekly_forecasts maps a method name to per-product weekly series, which
    are summed over the first ``horizon`` weeks to get the implied order.
    order_quantities maps a method name to one order quantity per product,
    for policies that decide a buy directly rather than week by week.
    """
    if horizon < 1:
        raise ValidationError("horizon must be at least 1")
    if unit_cost <= 0:
        raise ValidationError("unit_cost must be positive")
    weekly_forecasts = dict(weekly_forecasts or {})
    order_quantities = dict(order_quantities or {})
    if not weekly_forecasts and not order_quantities:
        raise ContractError("no methods supplied")
    overlap = set(weekly_forecasts) & set(order_quantities)
    if overlap:
        raise ContractError(f"method named in both inputs: {sorted(overlap)}")

    a, actual_totals = _demand_totals(actuals, horizon)
    n = a.shape[0]
    if product_ids is None:
        product_ids = tuple(str(i) for i in range(n))
    else:
        product_ids = tuple(product_ids)
        if len(product_ids) != n:
            raise DimensionError(
                f"{len(product_ids)} product ids for {n} products")

    methods = []
    for name, series in weekly_forecasts.items():
        f = np.atleast_2d(np.asarray(series, dtype=float))
        if f.shape[0] != n:
            raise DimensionError(
                f"method {name!r} forecasts {f.shape[0]} products, expected {n}")
        if f.shape[1] < horizon:
            raise DimensionError(
                f"method {name!r} covers {f.shape[1]} weeks, need {horizon}")
        methods.append(_method_result(name, f[:, :horizon].sum(axis=1),
                                      actual_totals))
    for name, orders in order_quantities.items():
        methods.append(_method_result(name, orders, actual_totals))

    return FirstOrderReport(horizon=horizon, unit_cost=float(unit_cost),
                            product_ids=product_ids,
                            actual_units=tuple(actual_totals.tolist()),
                            methods=tuple(methods))
