"""Multi-day rolling-horizon simulation of three commitment strategies.

Each strategy commits H periods at a time and carries the committed
terminal state into the next window:

* fixed_level solves exactly one decision horizon per window and pins the
  terminal back to the window's starting level. Simple, but with leakage
  it pays every day to climb back to the same level.
* fixed_horizon solves a longer window (T_plan periods) whose terminal
  returns to the window's starting level, and commits only the first H
  periods; because the return constraint sits beyond the commitment
  boundary, the committed decisions are freer than fixed_level's. A
  switch leaves the window terminal free inside the reachable band
  instead (that variant will happily drain the storage by each window's
  end, since terminal energy is worthless to the window objective).
* forecast_horizon searches for the minimum planning horizon that makes
  the committed decisions optimal regardless of later prices, then
  commits the first H periods of that certified solution.

At the end of the data, every strategy pins the final state to the
configured target so that totals are comparable; the forecast-horizon
strategy also falls back to that pinned solve when the remaining data is
too short to certify a horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import pwl
from .core import (PriceSeries, Schedule, StorageSpec, profit_of, schedule_from_actions,
                   storage_use_of)
from .errors import InputError
from .horizon import min_forecast_horizon
from .solver import forward_values, recover_schedule, solve_fixed_terminal

FIXED_LEVEL = "fixed_level"
FIXED_HORIZON = "fixed_horizon"
FORECAST_HORIZON = "forecast_horizon"


@dataclass(frozen=True)
class Strategy:
    """Commitment policy for the rolling simulation.

    kind is one of fixed_level / fixed_horizon / forecast_horizon. H is the
    decision horizon; final_target the state imposed at the end of the full
    data window. t_plan (fixed_horizon only) is the planning-window length;
    free_terminal switches that window's terminal from pinned-at-start to
    free within the reachable band. t_max caps the forecast-horizon search
    (None: to the end of the data).
    """

    kind: str
    H: int
    final_target: float
    t_plan: int | None = None
    t_max: int | None = None
    free_terminal: bool = False

    def __post_init__(self):
        if self.kind not in (FIXED_LEVEL, FIXED_HORIZON, FORECAST_HORIZON):
            raise InputError(f"unknown strategy kind {self.kind!r}")
        if self.H < 1:
            raise InputError(f"H ({self.H}) must be >= 1")
        if self.kind == FIXED_HORIZON:
            if self.t_plan is None or self.t_plan < self.H:
                raise InputError(f"fixed_horizon needs t_plan >= H, got {self.t_plan}")

    @classmethod
    def fixed_level(cls, H: int, final_target: float):
        return cls(FIXED_LEVEL, H, final_target)

    @classmethod
    def fixed_horizon(cls, H: int, t_plan: int, final_target: float, free_terminal: bool = False):
        return cls(FIXED_HORIZON, H, final_target, t_plan=t_plan, free_terminal=free_terminal)

    @classmethod
    def forecast_horizon(cls, H: int, final_target: float, t_max: int | None = None):
        return cls(FORECAST_HORIZON, H, final_target, t_max=t_max)

    def label(self) -> str:
        if self.kind == FIXED_HORIZON:
            return f"fixed_horizon_{self.t_plan}"
        return self.kind


@dataclass(frozen=True)
class SimulationResult:
    """Stitched committed trajectory over the full data window."""

    strategy: Strategy
    schedule: Schedule
    total_profit: float
    storage_use: float
    n_periods: int
    per_day_horizons: tuple | None = None   # forecast_horizon strategy only
    per_day_found: tuple | None = None


def _commit_window(spec, window_prices, strategy, remaining, day):
    """Solve one window; return (p_ch, p_dis, horizon_used, found) for the
    first H committed periods."""
    H = strategy.H

    if remaining == H:
        # final window: impose the end-of-data target for every strategy
        res = solve_fixed_terminal(spec, window_prices.window(1, H), H, strategy.final_target)
        return res.schedule.p_ch, res.schedule.p_dis, H, None

    if strategy.kind == FIXED_LEVEL:
        res = solve_fixed_terminal(spec, window_prices.window(1, H), H, spec.s_init)
        return res.schedule.p_ch, res.schedule.p_dis, H, None

    if strategy.kind == FIXED_HORIZON:
        T_eff = min(strategy.t_plan, remaining)
        prices_T = window_prices.window(1, T_eff)
        if strategy.free_terminal:
            profile = forward_values(spec, prices_T, T_eff)
            _, argmax = pwl.argmax_set(profile.at(T_eff))
            sched = recover_schedule(spec, prices_T, profile, argmax.lowest(), T_eff)
            return sched.p_ch[:H], sched.p_dis[:H], T_eff, None
        res = solve_fixed_terminal(spec, prices_T, T_eff, spec.s_init)
        return res.schedule.p_ch[:H], res.schedule.p_dis[:H], T_eff, None

    # forecast_horizon
    t_cap = min(strategy.t_max, remaining) if strategy.t_max is not None else remaining
    report = min_forecast_horizon(spec, window_prices.window(1, t_cap), H, t_cap)
    if report.is_forecast_horizon:
        prices_T = window_prices.window(1, report.T)
        profile = forward_values(spec, prices_T, H)
        sched = recover_schedule(spec, prices_T, profile, report.s_low_H, H)
        return sched.p_ch, sched.p_dis, report.T, True
    # cap reached at the data end: pin the final target over all remaining data
    res = solve_fixed_terminal(spec, window_prices.window(1, remaining), remaining,
                               strategy.final_target)
    return res.schedule.p_ch[:H], res.schedule.p_dis[:H], remaining, False


def run_strategy(spec: StorageSpec, full_prices: PriceSeries,
                 strategy: Strategy) -> SimulationResult:
    """Simulate one strategy over the whole price window.

    The data length must be a whole number of decision horizons; each
    window's committed terminal state seeds the next window exactly (no
    re-solve at the boundary).
    """
    N = len(full_prices)
    H = strategy.H
    if N == 0 or N % H != 0:
        day = N // H
        raise InputError(
            f"price data ends mid-window on day {day}: {N} periods is not a "
            f"multiple of the decision horizon ({H})"
        )
    if strategy.kind == FIXED_LEVEL:
        tol = 1e-9 * max(1.0, spec.capacity_span())
        if abs(strategy.final_target - spec.s_init) > tol:
            raise InputError(
                "fixed_level returns to the starting level every window, so "
                f"final_target ({strategy.final_target}) must equal s_init ({spec.s_init})"
            )

    days = N // H
    p_ch: list = []
    p_dis: list = []
    horizons = []
    founds = []
    level = spec.s_init
    for day in range(days):
        window = full_prices.window(day * H + 1)
        spec_day = spec.with_s_init(level)
        c, d, used, found = _commit_window(spec_day, window, strategy, N - day * H, day)
        committed = schedule_from_actions(spec_day, c, d)
        p_ch.extend(c)
        p_dis.extend(d)
        horizons.append(used)
        founds.append(found)
        # the exact committed terminal seeds the next window; clamp away the
        # occasional ulp of roundoff grazing a state bound
        level = min(max(committed.soe[-1], spec.s_min), spec.s_max)

    stitched = schedule_from_actions(spec, p_ch, p_dis)
    total = profit_of(spec, full_prices, stitched)
    use = storage_use_of(spec, stitched)
    is_fh = strategy.kind == FORECAST_HORIZON
    return SimulationResult(
        strategy=strategy,
        schedule=stitched,
        total_profit=total,
        storage_use=use,
        n_periods=N,
        per_day_horizons=tuple(horizons) if is_fh else None,
        per_day_found=tuple(founds) if is_fh else None,
    )


@dataclass(frozen=True)
class ComparisonRow:
    label: str
    total_profit: float
    loss_vs_best_pct: float
    storage_use: float
    best: bool


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple

    def best_label(self) -> str:
        for row in self.rows:
            if row.best:
                return row.label
        raise InputError("empty comparison table")


def compare(results) -> ComparisonTable:
    """Profit and storage-use comparison across strategies on one instance.

    Loss percentages are relative to the best strategy's profit, matching
    the usual way profit gaps are quoted for these comparisons.
    """
    results = tuple(results)
    if not results:
        raise InputError("nothing to compare")
    n = {r.n_periods for r in results}
    if len(n) != 1:
        raise InputError(f"results cover different windows: lengths {sorted(n)}")
    best = max(r.total_profit for r in results)
    denom = abs(best) if best != 0.0 else 1.0
    rows = []
    best_taken = False
    for r in results:
        is_best = not best_taken and r.total_profit == best
        best_taken = best_taken or is_best
        rows.append(ComparisonRow(
            label=r.strategy.label(),
            total_profit=r.total_profit,
            loss_vs_best_pct=100.0 * (best - r.total_profit) / denom,
            storage_use=r.storage_use,
            best=is_best,
        ))
    return ComparisonTable(tuple(rows))
