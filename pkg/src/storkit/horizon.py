"""Forecast-horizon analysis: reachable bounds, the horizon test, a lower
bound on the minimum forecast horizon, the search loop, and an upper bound
on suboptimality when the horizon is too short.

A planning horizon of length T is *long enough* (a forecast horizon) when
committing the first H decisions is optimal no matter what prices arrive
after period T. The test implemented here solves the two terminal-pinned
problems (terminal at the lowest and at the highest state reachable in T
periods) and asks whether some optimal solution of each agrees on the
state at the end of the decision horizon. Working with the full
argument-max sets of V_H + W_H makes that check exact across *all* optimal
solutions, so solution multiplicity never produces a false negative: the
two sets intersect exactly when optimal solutions with a common s_H exist.

Scope of the certificate: with prices inside the planning window all
nonnegative (or with lossless round-trip efficiency) an intersecting pair
provably pins the committed decisions for every continuation. When window
prices go negative AND the round trip is lossy, buying negatively-priced
energy and burning it through conversion losses becomes profitable, and
optimal state trajectories of the two pinned problems can cross instead
of sandwiching intermediate ones; rare price patterns then defeat the
certificate (a certified horizon that a specific continuation overturns).
tests/test_horizon.py carries a concrete such instance; the
continuation_falsifier in the oracle module exists to probe any verdict
you intend to rely on.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import pwl
from .core import PriceSeries, StorageSpec, geometric_sum, geometric_sum_range
from .errors import DomainError, InputError, InternalError
from .pwl import IntervalSet, PwlFunction
from .solver import backward_values, forward_values

# Two argmax sets closer than this fraction of the capacity span count as
# intersecting; exact equality is unattainable in floating point.
GAP_REL_TOL = 1e-7

MAX_PROFIT = "max-profit"
MIN_BOUND = "min-bound"


@dataclass(frozen=True)
class ReachableBounds:
    """Lowest and highest states reachable at the end of T periods."""

    s_low_T: float
    s_high_T: float


@dataclass(frozen=True)
class TminResult:
    """Lower bound on the minimum forecast horizon, or the cap if none."""

    value: int
    found: bool


@dataclass(frozen=True)
class HorizonReport:
    """Outcome of the forecast-horizon test at one planning-horizon length.

    gap is the distance between the two argument-max sets after accounting
    for solution multiplicity; it is zero (within tolerance) exactly when T
    is a forecast horizon. s_low_H / s_high_H are representative optimal
    end-of-decision-horizon states of the two terminal-pinned problems (the
    closest ordered pair; equal when the verdict is positive). subopt_bound
    is filled by the search loop when the cap is exhausted.
    """

    H: int
    T: int
    is_forecast_horizon: bool
    gap: float
    s_low_H: float
    s_high_H: float
    argmax_low: IntervalSet
    argmax_high: IntervalSet
    t_min: int | None = None
    subopt_bound: float | None = None

    def to_dict(self) -> dict:
        d = {
            "H": self.H,
            "T": self.T,
            "is_forecast_horizon": self.is_forecast_horizon,
            "gap": self.gap,
            "s_low_H": self.s_low_H,
            "s_high_H": self.s_high_H,
            "argmax_low": [list(iv) for iv in self.argmax_low.intervals],
            "argmax_high": [list(iv) for iv in self.argmax_high.intervals],
            "t_min": self.t_min,
            "subopt_bound": self.subopt_bound,
        }
        return d


def reachable_bounds(spec: StorageSpec, T: int) -> ReachableBounds:
    """Extreme states reachable from s_init in T periods.

    Discharging (resp. charging) at full power every period, until the
    state bound interferes, with leakage compounding each period:

        low  = max(s_min, rho^T s_init - dt * sum rho^t * p_dis_max/eta_dis)
        high = min(s_max, rho^T s_init + dt * sum rho^t * eta_ch*p_ch_max)

    with the sums over t = 0..T-1.
    """
    if T < 1:
        raise InputError(f"T ({T}) must be >= 1")
    g = geometric_sum(spec.rho, T)
    decay = spec.rho ** T * spec.s_init
    low = max(spec.s_min, decay - spec.dt * g * spec.p_dis_max / spec.eta_dis)
    high = min(spec.s_max, decay + spec.dt * g * spec.eta_ch * spec.p_ch_max)
    return ReachableBounds(s_low_T=low, s_high_T=high)


def necessary_condition_terms(spec: StorageSpec, H: int, T: int) -> tuple:
    """The three expressions whose minimum must be <= 0 for T to possibly
    be a forecast horizon.

    Term 1: the free periods after the decision horizon must be able to
    sweep the whole capacity band. Terms 2 and 3: the lowest (resp.
    highest) reachable terminal state must remain reachable even from the
    end state of a maximally charged (resp. discharged) decision horizon.
    """
    if not 1 <= H <= T:
        raise InputError(f"need 1 <= H <= T, got H={H}, T={T}")
    tail = geometric_sum(spec.rho, T - H)                     # sum rho^t, t = 0..T-H-1
    head = geometric_sum_range(spec.rho, T - H, T - 1)        # sum rho^t, t = T-H..T-1
    charge_rate = spec.dt * spec.eta_ch * spec.p_ch_max
    discharge_rate = spec.dt * spec.p_dis_max / spec.eta_dis
    decay = spec.rho ** T * spec.s_init
    term1 = (spec.s_max - spec.s_min) - tail * (charge_rate + discharge_rate)
    term2 = decay - spec.s_min + charge_rate * head - discharge_rate * tail
    term3 = spec.s_max - decay - charge_rate * tail + discharge_rate * head
    return term1, term2, term3


def tmin(spec: StorageSpec, H: int, cap: int = 10000) -> TminResult:
    """Smallest T >= H whose necessary condition holds, up to a cap.

    Prices play no role here: the bound depends on the storage parameters
    only, so it can be computed before any solve. Returns (cap, False)
    when no T up to the cap satisfies the condition.
    """
    if H < 1:
        raise InputError(f"H ({H}) must be >= 1")
    if cap < H:
        raise InputError(f"cap ({cap}) must be >= H ({H})")
    for T in range(H, cap + 1):
        if min(necessary_condition_terms(spec, H, T)) <= 0.0:
            return TminResult(T, True)
    return TminResult(cap, False)


def _closest_ordered_pair(low_set: IntervalSet, high_set: IntervalSet) -> tuple:
    """Representative (s_low_H, s_high_H) with s_low_H <= s_high_H.

    Minimizes s_high_H - s_low_H over pairs drawn from the two sets with
    the high-problem state on top. Optimal solutions of the high-terminal
    problem dominate those of the low-terminal problem, so an ordered pair
    always exists; if numerics ever produce pure crossing, fall back to
    the unordered closest pair.
    """
    best = None
    for a_lo, a_hi in low_set.intervals:
        for b_lo, b_hi in high_set.intervals:
            if max(a_lo, b_lo) <= min(a_hi, b_hi):
                return max(a_lo, b_lo), max(a_lo, b_lo)
            if b_lo > a_hi:
                cand = (b_lo - a_hi, a_hi, b_lo)
                if best is None or cand[0] < best[0]:
                    best = cand
    if best is not None:
        return best[1], best[2]
    # pure crossing (high set entirely below the low set): numerically odd,
    # fall back to the unordered closest pair, ordered for reporting
    for a_lo, a_hi in low_set.intervals:
        for b_lo, b_hi in high_set.intervals:
            d = max(a_lo, b_lo) - min(a_hi, b_hi)
            cand = (d, min(a_hi, b_hi), min(a_hi, b_hi) + d)
            if best is None or cand[0] < best[0]:
                best = cand
    return best[1], best[2]


def _check_with_profile(spec: StorageSpec, prices: PriceSeries, H: int, T: int,
                        v_h: PwlFunction) -> HorizonReport:
    rb = reachable_bounds(spec, T)
    w_low = backward_values(spec, prices, T, rb.s_low_T, down_to=H).at(H)
    w_high = backward_values(spec, prices, T, rb.s_high_T, down_to=H).at(H)

    try:
        total_low = pwl.pointwise_add(v_h, w_low)
        total_high = pwl.pointwise_add(v_h, w_high)
    except DomainError as exc:  # pragma: no cover - reachability guarantees overlap
        raise InternalError(f"value-function domains failed to overlap at H={H}: {exc}") from exc

    _, argmax_low = pwl.argmax_set(total_low)
    _, argmax_high = pwl.argmax_set(total_high)

    gap = pwl.set_distance(argmax_low, argmax_high)
    gap_tol = GAP_REL_TOL * spec.capacity_span()
    is_fh = gap <= gap_tol

    if is_fh:
        common = argmax_low.intersect(argmax_high)
        if common.is_empty():
            common = argmax_low.inflate(max(gap, gap_tol)).intersect(argmax_high)
        if common.is_empty():  # pragma: no cover - inflation covers the measured gap
            raise InternalError("argmax sets measured as intersecting but share no point")
        s_low = s_high = common.lowest()
    else:
        s_low, s_high = _closest_ordered_pair(argmax_low, argmax_high)

    return HorizonReport(
        H=H,
        T=T,
        is_forecast_horizon=is_fh,
        gap=gap,
        s_low_H=s_low,
        s_high_H=s_high,
        argmax_low=argmax_low,
        argmax_high=argmax_high,
    )


def check_forecast_horizon(spec: StorageSpec, prices: PriceSeries, H: int,
                           T: int) -> HorizonReport:
    """Decide whether planning-horizon length T is long enough.

    Solves the problems pinned at the lowest and the highest reachable
    terminal state and compares the sets of end-of-decision-horizon states
    that some optimal solution attains. Intersecting sets certify a common
    optimal s_H, which makes the first H decisions optimal for every
    possible continuation of the prices.
    """
    if not 1 <= H <= T:
        raise InputError(f"need 1 <= H <= T, got H={H}, T={T}")
    if T > len(prices):
        raise InputError(f"T ({T}) exceeds available prices ({len(prices)})")
    v_h = forward_values(spec, prices, H).at(H)
    return _check_with_profile(spec, prices, H, T, v_h)


def suboptimality_bound(spec: StorageSpec, prices: PriceSeries, H: int, T: int,
                        s_h_choice=MIN_BOUND, report: HorizonReport | None = None) -> tuple:
    """Upper bound on the profit lost by committing the first H decisions
    of a too-short planning horizon, and the end state the bound is for.

    For a committed end state s_H in [s_low_H, s_high_H] the loss is at most

        Z_opt_DH - Z_DH(s_H) + max(-price_floor * (s_H - s_low_H) / eta_ch,
                                    price_cap * eta_dis * (s_high_H - s_H))

    where Z_opt_DH is the best decision-horizon profit with the end state
    free inside the interval and Z_DH(s_H) the profit when committing s_H.
    The two arms price the worst case: energy held above the low solution
    may miss charging at the floor price later; capacity held below the
    high solution may miss discharging at the cap.

    s_h_choice selects the committed state: "max-profit" picks the s_H
    maximizing decision-horizon profit (smallest such state on ties),
    "min-bound" minimizes the bound itself (exact, since the bound is
    piecewise linear in s_H), and a number pins s_H explicitly.
    """
    if report is None:
        report = check_forecast_horizon(spec, prices, H, T)
    s_lo, s_hi = report.s_low_H, report.s_high_H
    v_h = forward_values(spec, prices, H).at(H)

    floor_arm_slope = -prices.price_floor / spec.eta_ch    # >= 0
    cap_arm_slope = prices.price_cap * spec.eta_dis        # >= 0

    def penalty(s: float) -> float:
        return max(floor_arm_slope * (s - s_lo), cap_arm_slope * (s_hi - s))

    z_opt, arg_opt = pwl.argmax_set(v_h, sub_domain=(s_lo, s_hi))

    if isinstance(s_h_choice, (int, float)) and not isinstance(s_h_choice, bool):
        s_sel = float(s_h_choice)
        span_tol = 1e-9 * max(1.0, spec.capacity_span())
        if not s_lo - span_tol <= s_sel <= s_hi + span_tol:
            raise InputError(f"s_H ({s_sel}) outside [{s_lo}, {s_hi}]")
        s_sel = min(max(s_sel, s_lo), s_hi)
        bound = z_opt - pwl.evaluate(v_h, min(max(s_sel, v_h.lo), v_h.hi)) + penalty(s_sel)
        return bound, s_sel

    if s_h_choice == MAX_PROFIT:
        s_sel = arg_opt.lowest()
        bound = z_opt - z_opt + penalty(s_sel)
        return bound, s_sel

    if s_h_choice != MIN_BOUND:
        raise InputError(f"unknown s_H policy {s_h_choice!r}")

    if s_hi <= s_lo:
        return max(0.0, z_opt - pwl.evaluate(v_h, min(max(s_lo, v_h.lo), v_h.hi))), s_lo
    restricted = pwl.clip_domain(v_h, s_lo, s_hi)
    arm_low = PwlFunction.line(s_lo, 0.0, s_hi, floor_arm_slope * (s_hi - s_lo))
    arm_high = PwlFunction.line(s_lo, cap_arm_slope * (s_hi - s_lo), s_hi, 0.0)
    pen = pwl.pointwise_max(arm_low, arm_high)
    objective = pwl.pointwise_add(restricted, pen.negate())    # V_H(s) - penalty(s)
    best, arg = pwl.argmax_set(objective)
    s_sel = arg.lowest()
    return z_opt - best, s_sel


def min_forecast_horizon(spec: StorageSpec, prices: PriceSeries, H: int, T_max: int,
                         s_h_policy=MIN_BOUND) -> HorizonReport:
    """Shortest forecast horizon for the given prices, by increasing T.

    Starts from the parameter-only lower bound and re-tests with T growing
    one period at a time; the returned report carries the T at which the
    test first passed. When T_max is exhausted without a pass, the report
    at T_max comes back with the suboptimality bound filled in.
    """
    if not 1 <= H <= T_max:
        raise InputError(f"need 1 <= H <= T_max, got H={H}, T_max={T_max}")
    if T_max > len(prices):
        raise InputError(f"T_max ({T_max}) exceeds available prices ({len(prices)})")

    bound_t = tmin(spec, H, cap=T_max)
    t_min_field = bound_t.value if bound_t.found else None
    start = bound_t.value if bound_t.found else T_max

    v_h = forward_values(spec, prices, H).at(H)
    report = None
    for T in range(max(H, start), T_max + 1):
        report = _check_with_profile(spec, prices, H, T, v_h)
        report = replace(report, t_min=t_min_field)
        if report.is_forecast_horizon:
            return report
    if report is None:  # pragma: no cover - range above is never empty
        raise InternalError("forecast-horizon search ran over an empty range")
    bound, _ = suboptimality_bound(spec, prices, H, T_max, s_h_policy, report=report)
    return replace(report, subopt_bound=bound)


def horizon_sweep(spec: StorageSpec, prices: PriceSeries, H: int, T_from: int,
                  T_to: int, s_h_policy=MIN_BOUND) -> list:
    """One report per planning-horizon length, bounds included.

    Runs the forecast-horizon test for every T in [T_from, T_to] and fills
    each report's suboptimality bound, which makes the gap-versus-T and
    bound-versus-T trajectories plottable from a single CSV.
    """
    if not 1 <= H <= T_from <= T_to:
        raise InputError(f"need 1 <= H <= T_from <= T_to, got H={H}, "
                         f"T_from={T_from}, T_to={T_to}")
    if T_to > len(prices):
        raise InputError(f"T_to ({T_to}) exceeds available prices ({len(prices)})")
    v_h = forward_values(spec, prices, H).at(H)
    reports = []
    for T in range(T_from, T_to + 1):
        rep = _check_with_profile(spec, prices, H, T, v_h)
        bound, _ = suboptimality_bound(spec, prices, H, T, s_h_policy, report=rep)
        reports.append(replace(rep, subopt_bound=bound))
    return reports


@dataclass(frozen=True)
class FleetReport:
    """Per-system horizon reports plus which system binds the fleet."""

    reports: tuple
    fleet_horizon: int | None
    binding_index: int
    all_found: bool


def fleet_min_forecast_horizon(specs, prices: PriceSeries, H: int, T_max: int) -> FleetReport:
    """Minimum forecast horizon for a fleet of independently scheduled systems.

    The joint problem decomposes per system, so the fleet needs the
    longest of the per-system horizons; the report records which system
    that is. A system that exhausts T_max binds the fleet outright.
    """
    specs = tuple(specs)
    if not specs:
        raise InputError("fleet must contain at least one storage system")
    reports = tuple(min_forecast_horizon(s, prices, H, T_max) for s in specs)
    binding = 0
    for i, rep in enumerate(reports):
        cur = reports[binding]
        key = (not rep.is_forecast_horizon, rep.T)
        best = (not cur.is_forecast_horizon, cur.T)
        if key > best:
            binding = i
    all_found = all(r.is_forecast_horizon for r in reports)
    fleet_horizon = reports[binding].T if all_found else None
    return FleetReport(reports=reports, fleet_horizon=fleet_horizon,
                       binding_index=binding, all_found=all_found)
