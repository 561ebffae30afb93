"""First-order buy assessment."""

import json

import numpy as np
import pytest

from trendcast.errors import ContractError, DimensionError, ValidationError
from trendcast.first_order import (FirstOrderReport, first_order_comparison,
                                   first_order_error)


def brute_force(forecasts, actuals, horizon, unit_cost):
    """Plain-python recomputation of the per-method aggregates."""
    errors = []
    for f, a in zip(forecasts, actuals):
        fo = sum(f[t] for t in range(horizon))
        ao = sum(a[t] for t in range(horizon))
        errors.append(abs(fo - ao))
    total = sum(errors)
    return errors, total / len(errors), total * unit_cost


def test_perfect_forecast_costs_nothing():
    sales = [[4.0, 5, 6, 7, 8, 9, 1, 1, 1, 1, 1, 1]] * 3
    report = first_order_error(sales, sales)
    m = report.method("model")
    assert m.unit_errors == (0.0, 0.0, 0.0)
    assert m.total_unit_error == 0.0
    assert m.dollar_total() == 0.0


def test_single_product_fixed_arithmetic():
    forecast = [[15.0, 15, 15, 15, 15, 15]]   # totals 90
    actual = [[20.0, 20, 20, 20, 10, 10]]     # totals 100
    report = first_order_error(forecast, actual)
    m = report.method("model")
    assert m.unit_errors == (10.0,)
    assert m.mean_unit_error == 10.0
    assert m.dollar_total(25.0) == 250.0


def test_matches_brute_force_on_random_products():
    r = np.random.default_rng(5)
    forecasts = r.uniform(0.0, 40.0, size=(10, 12))
    actuals = r.uniform(0.0, 40.0, size=(10, 12))
    report = first_order_error(forecasts, actuals, unit_cost=25.0)
    m = report.method("model")
    errors, mean, dollars = brute_force(forecasts.tolist(), actuals.tolist(),
                                        6, 25.0)
    np.testing.assert_allclose(m.unit_errors, errors, rtol=0.0, atol=1e-9)
    assert abs(m.mean_unit_error - mean) < 1e-9
    assert abs(m.dollar_total(25.0) - dollars) < 1e-9


def test_aggregates_invariant_to_product_order():
    r = np.random.default_rng(6)
    forecasts = r.uniform(0.0, 30.0, size=(40, 6))
    actuals = r.uniform(0.0, 30.0, size=(40, 6))
    perm = r.permutation(40)
    a = first_order_error(forecasts, actuals).method("model")
    b = first_order_error(forecasts[perm], actuals[perm]).method("model")
    assert a.total_unit_error == b.total_unit_error
    assert a.mean_unit_error == b.mean_unit_error
    assert a.dollar_total() == b.dollar_total()


def test_dollar_identity_and_scaling():
    r = np.random.default_rng(7)
    forecasts = r.uniform(0.0, 30.0, size=(15, 6))
    actuals = r.uniform(0.0, 30.0, size=(15, 6))
    m = first_order_error(forecasts, actuals).method("model")
    assert m.dollar_total(25.0) == m.total_unit_error * 25.0
    assert m.dollar_total(50.0) == 2.0 * m.dollar_total(25.0)
    assert m.dollar_total(12.5) == 0.5 * m.dollar_total(25.0)
    # integer units: exact at any integer cost
    mi = first_order_error([[7.0] * 6], [[9.0] * 6]).method("model")
    assert mi.dollar_total(75.0) == 3.0 * mi.dollar_total(25.0)


def test_weeks_beyond_horizon_are_ignored():
    forecast = [[1.0] * 6 + [999.0] * 6]
    actual = [[1.0] * 6 + [0.0] * 6]
    m = first_order_error(forecast, actual).method("model")
    assert m.unit_errors == (0.0,)


def test_direct_order_quantities():
    actual = [[10.0] * 6, [5.0] * 6]           # demand totals 60 and 30
    report = first_order_comparison(actual,
                                    order_quantities={"policy": [66.0, 24.0]})
    m = report.method("policy")
    assert m.ordered_units == (66.0, 24.0)
    assert m.unit_errors == (6.0, 6.0)


def test_mixed_methods_in_one_report():
    actual = [[10.0] * 6]
    report = first_order_comparison(
        actual,
        weekly_forecasts={"model": [[9.0] * 6]},
        order_quantities={"policy": [70.0]},
        product_ids=["P1"])
    assert {m.method for m in report.methods} == {"model", "policy"}
    assert report.method("model").unit_errors == (6.0,)
    assert report.method("policy").unit_errors == (10.0,)
    assert report.actual_units == (60.0,)


def test_validation_failures():
    actual = [[1.0] * 6]
    with pytest.raises(ValidationError, match="horizon"):
        first_order_comparison(actual, order_quantities={"p": [1.0]}, horizon=0)
    with pytest.raises(ValidationError, match="unit_cost"):
        first_order_comparison(actual, order_quantities={"p": [1.0]},
                               unit_cost=0.0)
    with pytest.raises(ContractError, match="no methods"):
        first_order_comparison(actual)
    with pytest.raises(ContractError, match="both"):
        first_order_comparison(actual, weekly_forecasts={"p": [[1.0] * 6]},
                               order_quantities={"p": [1.0]})
    with pytest.raises(DimensionError, match="weeks"):
        first_order_comparison([[1.0] * 4], order_quantities={"p": [1.0]})
    with pytest.raises(DimensionError):
        first_order_comparison(actual, weekly_forecasts={"p": [[1.0] * 6] * 2})
    with pytest.raises(DimensionError, match="orders"):
        first_order_comparison(actual, order_quantities={"p": [1.0, 2.0]})
    with pytest.raises(DimensionError, match="ids"):
        first_order_comparison(actual, order_quantities={"p": [1.0]},
                               product_ids=["a", "b"])
    with pytest.raises(ContractError, match="no products"):
        first_order_comparison(np.zeros((0, 6)), order_quantities={"p": []})


def test_report_files_round_trip(tmp_path):
    r = np.random.default_rng(8)
    report = first_order_comparison(
        r.uniform(0.0, 20.0, size=(4, 8)),
        weekly_forecasts={"knn": r.uniform(0.0, 20.0, size=(4, 8))},
        order_quantities={"policy": r.uniform(10.0, 90.0, size=4)},
        product_ids=[f"P{i}" for i in range(4)])
    report.write(tmp_path)
    payload = json.loads((tmp_path / "first_order.json").read_text())
    assert payload["products"] == 4 and payload["unit_cost"] == 25.0
    by_name = {m["method"]: m for m in payload["methods"]}
    knn = report.method("knn")
    assert by_name["knn"]["dollar_total"] == knn.dollar_total(25.0)
    assert by_name["knn"]["mean_unit_error"] == knn.mean_unit_error
    lines = (tmp_path / "first_order.csv").read_text().splitlines()
    assert lines[0].startswith("method,product_id,ordered_units")
    assert len(lines) == 1 + 2 * 4
    # determinism: a second write is byte-identical
    first = (tmp_path / "first_order.csv").read_bytes()
    report.write(tmp_path)
    assert (tmp_path / "first_order.csv").read_bytes() == first


def test_unknown_method_lookup():
    report = first_order_error([[1.0] * 6], [[1.0] * 6])
    assert isinstance(report, FirstOrderReport)
    with pytest.raises(ContractError, match="nope"):
        report.method("nope")
