"""Rolling-horizon strategy simulation: window mechanics, stitching,
dominance of the forecast-horizon strategy, and the comparison table."""

import random

import pytest

from storkit.core import PriceSeries, StorageSpec, profit_of, validate_schedule
from storkit.errors import InputError
from storkit.rolling import Strategy, compare, run_strategy
from tests.conftest import spiky_prices


def test_strategy_invariants():
    with pytest.raises(InputError):
        Strategy("nonsense", 4, 1.0)
    with pytest.raises(InputError):
        Strategy.fixed_horizon(4, 2, 1.0)     # t_plan < H
    assert Strategy.fixed_horizon(4, 8, 1.0).label() == "fixed_horizon_8"


def test_flat_prices_no_strategy_trades():
    spec = StorageSpec(0, 2, 1, 1, 0.9, 0.9, 1.0, 1.0, 1.0)
    prices = PriceSeries([2.0] * 8, -100, 100)
    for strategy in (Strategy.fixed_level(4, 1.0),
                     Strategy.fixed_horizon(4, 8, 1.0),
                     Strategy.forecast_horizon(4, 1.0)):
        res = run_strategy(spec, prices, strategy)
        assert res.total_profit == pytest.approx(0.0, abs=1e-6)
        assert res.storage_use == pytest.approx(0.0, abs=1e-6)
        assert validate_schedule(spec, prices, res.schedule) == []
        assert res.schedule.soe[-1] == pytest.approx(1.0, abs=1e-6)


def test_cross_day_opportunity_beats_fixed_level(unit_storage):
    # cheap day one, expensive day two: only strategies that look across the
    # day boundary charge ahead
    prices = PriceSeries([0.0, 0.0, 10.0, 10.0], -100, 100)
    fixed = run_strategy(unit_storage, prices, Strategy.fixed_level(2, 1.0))
    fcst = run_strategy(unit_storage, prices, Strategy.forecast_horizon(2, 1.0))
    assert fixed.total_profit == pytest.approx(0.0, abs=1e-9)
    assert fcst.total_profit == pytest.approx(10.0, rel=1e-9)
    assert fcst.per_day_horizons is not None
    assert validate_schedule(unit_storage, prices, fcst.schedule) == []


def test_stitched_trajectory_validates_end_to_end():
    rng = random.Random(3)
    spec = StorageSpec(0, 3, 1, 1, 0.9, 0.85, 0.99, 1.5, 1.0)
    prices = spiky_prices(rng, 12)
    for strategy in (Strategy.fixed_level(3, 1.5),
                     Strategy.fixed_horizon(3, 6, 1.5),
                     Strategy.forecast_horizon(3, 1.5)):
        res = run_strategy(spec, prices, strategy)
        assert validate_schedule(spec, prices, res.schedule) == []
        assert res.schedule.soe[-1] == pytest.approx(1.5, abs=1e-6)
        assert res.total_profit == pytest.approx(
            profit_of(spec, prices, res.schedule), rel=1e-12, abs=1e-12)


def test_final_window_pins_target_even_when_away_from_start():
    # final target above the start level forces a closing charge
    unit = StorageSpec(0, 2, 1, 1, 1, 1, 1, 0.5, 1)
    prices = PriceSeries([1.0, 1.0, 1.0, 1.0], -100, 100)
    res = run_strategy(unit, prices, Strategy.fixed_horizon(2, 4, 1.5))
    assert res.schedule.soe[-1] == pytest.approx(1.5, abs=1e-9)


def test_fixed_level_requires_matching_target(unit_storage):
    prices = PriceSeries([1.0, 1.0], -100, 100)
    with pytest.raises(InputError):
        run_strategy(unit_storage, prices, Strategy.fixed_level(2, 0.3))


def test_mid_window_data_end_is_input_error(unit_storage):
    prices = PriceSeries([1.0, 1.0, 1.0], -100, 100)
    with pytest.raises(InputError, match="day 1"):
        run_strategy(unit_storage, prices, Strategy.fixed_level(2, 1.0))


def test_free_terminal_variant_drains():
    # documentation of the alternative semantics: a free window terminal
    # happily sells everything even at flat prices
    spec = StorageSpec(0, 2, 1, 1, 0.9, 0.9, 1.0, 1.0, 1.0)
    prices = PriceSeries([2.0] * 8, -100, 100)
    res = run_strategy(spec, prices,
                       Strategy.fixed_horizon(4, 8, 1.0, free_terminal=True))
    assert res.storage_use > 0.1
    assert validate_schedule(spec, prices, res.schedule) == []
    assert res.schedule.soe[-1] == pytest.approx(1.0, abs=1e-6)  # final pin still applies


def test_dominance_on_spread_instances():
    # whenever every window certifies a horizon, the forecast-horizon
    # strategy beats or ties the myopic ones on the same imposed target
    rng = random.Random(21)
    checked = 0
    attempts = 0
    while checked < 20 and attempts < 200:
        attempts += 1
        H = rng.choice([2, 3])
        days = rng.choice([2, 3])
        smax = rng.uniform(1.5, 3.0)
        spec = StorageSpec(0, smax, rng.uniform(0.5, 1.2), rng.uniform(0.5, 1.2),
                           rng.uniform(0.7, 1.0), rng.uniform(0.7, 1.0), 1.0,
                           rng.uniform(0.2, smax - 0.2), 1.0)
        prices = spiky_prices(rng, H * days)
        try:
            fcst = run_strategy(spec, prices, Strategy.forecast_horizon(H, spec.s_init))
        except Exception:
            continue
        if not all(f in (True, None) for f in fcst.per_day_found):
            continue
        fixed = run_strategy(spec, prices, Strategy.fixed_level(H, spec.s_init))
        horizon2 = run_strategy(spec, prices, Strategy.fixed_horizon(H, 2 * H, spec.s_init))
        tol = 1e-7 * (1 + abs(fcst.total_profit))
        assert fcst.total_profit >= fixed.total_profit - tol
        assert fcst.total_profit >= horizon2.total_profit - tol
        checked += 1
    assert checked == 20


def test_compare_table():
    spec = StorageSpec(0, 2, 1, 1, 1, 1, 1, 1, 1)
    prices = PriceSeries([0.0, 0.0, 10.0, 10.0], -100, 100)
    results = [run_strategy(spec, prices, s) for s in (
        Strategy.fixed_level(2, 1.0),
        Strategy.fixed_horizon(2, 4, 1.0),
        Strategy.forecast_horizon(2, 1.0),
    )]
    table = compare(results)
    by_label = {row.label: row for row in table.rows}
    assert table.best_label() in ("fixed_horizon_4", "forecast_horizon")
    best_profit = max(r.total_profit for r in results)
    fixed_row = by_label["fixed_level"]
    assert fixed_row.loss_vs_best_pct == pytest.approx(
        100.0 * (best_profit - fixed_row.total_profit) / abs(best_profit))
    assert sum(row.best for row in table.rows) == 1


def test_compare_single_result_zero_loss(unit_storage):
    prices = PriceSeries([1.0, 2.0], -100, 100)
    res = run_strategy(unit_storage, prices, Strategy.fixed_level(2, 1.0))
    table = compare([res])
    assert table.rows[0].loss_vs_best_pct == 0.0
    assert table.rows[0].best


def test_compare_mismatched_windows_rejected(unit_storage):
    p1 = PriceSeries([1.0, 2.0], -100, 100)
    p2 = PriceSeries([1.0, 2.0, 3.0, 4.0], -100, 100)
    r1 = run_strategy(unit_storage, p1, Strategy.fixed_level(2, 1.0))
    r2 = run_strategy(unit_storage, p2, Strategy.fixed_level(2, 1.0))
    with pytest.raises(InputError):
        compare([r1, r2])
