"""Brute-force reference solvers for testing the exact machinery.

Nothing here is called by the production modules; the point is
independence. grid_dp_solve discretizes states and actions and snaps
transitions to the state grid, reporting an error bound that makes
oracle-versus-exact comparisons quantitative. enumerate_optimal_trajectories
works on grid-to-grid transitions with exact single-action rewards, so
every enumerated path is feasible for the continuous problem as well.
continuation_falsifier probes a forecast-horizon verdict directly against
its definition by extending the price vector past the planning horizon.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import pwl
from .core import PriceSeries, StorageSpec
from .errors import InfeasibleError, InputError, SizeLimitError
from .pwl import IntervalSet
from .solver import backward_values, forward_values


@dataclass(frozen=True)
class GridSpec:
    """Discretization: uniformly spaced states, evenly spaced action levels.

    The reported error bound of grid_dp_solve assumes the action grid is at
    least as fine as the state grid (state displacement per action step no
    larger than the state step); recommended_action_points computes the
    smallest such count.
    """

    state_points: int
    action_points: int

    def __post_init__(self):
        if self.state_points < 3:
            raise InputError(f"state_points ({self.state_points}) must be >= 3")
        if self.action_points < 2:
            raise InputError(f"action_points ({self.action_points}) must be >= 2")


def state_grid(spec: StorageSpec, n: int) -> np.ndarray:
    return np.linspace(spec.s_min, spec.s_max, n)


def state_step(spec: StorageSpec, n: int) -> float:
    return (spec.s_max - spec.s_min) / (n - 1)


def nearest_state_index(spec: StorageSpec, n: int, s: float) -> int:
    step = state_step(spec, n)
    return int(round((s - spec.s_min) / step))


def recommended_action_points(spec: StorageSpec, state_points: int) -> int:
    """Smallest action count whose per-step state displacement <= state step."""
    step = state_step(spec, state_points)
    reach_ch = spec.dt * spec.eta_ch * spec.p_ch_max
    reach_dis = spec.dt * spec.p_dis_max / spec.eta_dis
    need = max(reach_ch, reach_dis) / step
    return max(2, int(np.ceil(need)) + 1)


@dataclass(frozen=True)
class GridSolveResult:
    profit: float
    error_bound: float


def oracle_error_bound(spec: StorageSpec, prices: PriceSeries, T: int, state_points: int) -> float:
    """Lipschitz-style bound on |grid profit - exact profit|.

    Snapping perturbs the state by at most one grid step per period; a kWh
    of state is worth at most max|C| * max(1/eta_ch, eta_dis), the steepest
    stage-reward slope.
    """
    max_c = max((abs(prices.at(t)) for t in range(1, T + 1)), default=0.0)
    slope = max_c * max(1.0 / spec.eta_ch, spec.eta_dis)
    return slope * state_step(spec, state_points) * T


def grid_dp_solve(spec: StorageSpec, prices: PriceSeries, T: int,
                  s_end_index_window, grid: GridSpec) -> GridSolveResult:
    """Optimal profit over grid states and action levels, transitions
    snapped to the nearest grid state.

    s_end_index_window is an inclusive (lo, hi) pair of state-grid indices
    the terminal state may land in, or None for a free terminal.
    """
    if T < 1 or T > len(prices):
        raise InputError(f"T ({T}) outside 1..{len(prices)}")
    n = grid.state_points
    states = state_grid(spec, n)
    step = state_step(spec, n)
    eps = 1e-9 * max(1.0, spec.capacity_span())

    charge_levels = np.linspace(0.0, spec.p_ch_max, grid.action_points)
    discharge_levels = np.linspace(0.0, spec.p_dis_max, grid.action_points)

    value = np.full(n, -np.inf)
    value[nearest_state_index(spec, n, spec.s_init)] = 0.0

    for t in range(1, T + 1):
        price = prices.at(t)
        decayed = spec.rho * states
        nxt = np.full(n, -np.inf)
        for c in charge_levels:
            land = decayed + spec.dt * spec.eta_ch * c
            ok = (land >= spec.s_min - eps) & (land <= spec.s_max + eps) & np.isfinite(value)
            if not ok.any():
                continue
            idx = np.clip(np.rint((land[ok] - spec.s_min) / step).astype(int), 0, n - 1)
            np.maximum.at(nxt, idx, value[ok] - spec.dt * price * c)
        for d in discharge_levels[1:]:
            land = decayed - spec.dt * d / spec.eta_dis
            ok = (land >= spec.s_min - eps) & (land <= spec.s_max + eps) & np.isfinite(value)
            if not ok.any():
                continue
            idx = np.clip(np.rint((land[ok] - spec.s_min) / step).astype(int), 0, n - 1)
            np.maximum.at(nxt, idx, value[ok] + spec.dt * price * d)
        value = nxt

    if s_end_index_window is None:
        terminal = value
    else:
        lo, hi = s_end_index_window
        if not 0 <= lo <= hi <= n - 1:
            raise InputError(f"terminal index window ({lo}, {hi}) outside 0..{n - 1}")
        terminal = value[lo:hi + 1]
    best = float(np.max(terminal))
    if not np.isfinite(best):
        raise InfeasibleError("no grid path reaches the terminal window")
    return GridSolveResult(profit=best, error_bound=oracle_error_bound(spec, prices, T, n))


def _transition_tables(spec: StorageSpec, states: np.ndarray):
    """Pairwise grid transitions by one pure action.

    Returns (feasible, traded) where traded[i, j] is the grid-side energy
    bought (negative: sold) when moving from state i to state j in one
    period. Exact: the action is continuous, only the states are gridded.
    """
    n = len(states)
    delta = states[None, :] - spec.rho * states[:, None]
    eps = 1e-9 * max(1.0, spec.p_ch_max, spec.p_dis_max)
    charge_power = delta / (spec.dt * spec.eta_ch)
    discharge_power = -delta * spec.eta_dis / spec.dt
    feasible = np.where(
        delta >= 0.0,
        charge_power <= spec.p_ch_max + eps,
        discharge_power <= spec.p_dis_max + eps,
    )
    traded = np.where(delta >= 0.0, delta / spec.eta_ch, delta * spec.eta_dis)
    return feasible, traded


def enumerate_optimal_trajectories(spec: StorageSpec, prices: PriceSeries, T: int,
                                   s_end: float, grid: GridSpec, tol: float,
                                   max_paths: int = 20000) -> list:
    """All state paths through the grid within tol of the grid optimum.

    Paths are tuples (s_0, ..., s_T) of grid states; actions between
    consecutive states are continuous pure charge or discharge moves, so
    each path's profit is exact. Intended for small instances; raises
    SizeLimitError past max_paths.
    """
    if grid.state_points > 41 or T > 10:
        raise SizeLimitError(
            f"enumeration limited to 41 states and 10 periods, got "
            f"{grid.state_points} states, T={T}"
        )
    if T < 1 or T > len(prices):
        raise InputError(f"T ({T}) outside 1..{len(prices)}")
    n = grid.state_points
    states = state_grid(spec, n)
    feasible, traded = _transition_tables(spec, states)
    j_init = nearest_state_index(spec, n, spec.s_init)
    j_end = nearest_state_index(spec, n, s_end)

    neg_inf = -np.inf
    fwd = np.full((T + 1, n), neg_inf)
    fwd[0, j_init] = 0.0
    rewards = []
    for t in range(1, T + 1):
        r = np.where(feasible, -prices.at(t) * traded, neg_inf)
        rewards.append(r)
        fwd[t] = np.max(fwd[t - 1][:, None] + r, axis=0)

    bwd = np.full((T + 1, n), neg_inf)
    bwd[T, j_end] = 0.0
    for t in range(T - 1, -1, -1):
        bwd[t] = np.max(rewards[t] + bwd[t + 1][None, :], axis=1)

    opt = fwd[T, j_end]
    if not np.isfinite(opt):
        raise InfeasibleError("terminal state unreachable on the grid")

    paths = []

    def extend(t, j, acc, prefix):
        if t == T:
            paths.append(tuple(prefix))
            if len(paths) > max_paths:
                raise SizeLimitError(f"more than {max_paths} optimal paths")
            return
        r = rewards[t]
        for k in range(n):
            v = r[j, k]
            if np.isfinite(v) and acc + v + bwd[t + 1, k] >= opt - tol:
                prefix.append(states[k])
                extend(t + 1, k, acc + v, prefix)
                prefix.pop()

    extend(0, j_init, 0.0, [states[j_init]])
    return paths


@dataclass(frozen=True)
class FalsifierVerdict:
    """Outcome of probing a horizon verdict with sampled price continuations."""

    change_found: bool
    n_continuations: int
    witness_index: int | None
    witness: tuple | None
    common: IntervalSet

    @property
    def summary(self) -> str:
        if self.change_found:
            return (f"change found: continuation #{self.witness_index} leaves no "
                    f"common optimal decision-horizon end state")
        return f"no change found across {self.n_continuations} continuations"


def continuation_falsifier(spec: StorageSpec, prices: PriceSeries, H: int,
                           n_samples: int, continuation_len: int,
                           seed: int = 0, tol: float = 1e-6) -> FalsifierVerdict:
    """Probe whether prices beyond the available window could change the
    optimal decision-horizon schedule.

    Extends the price vector by continuation_len periods (the all-floor
    and all-cap extremes first, then random mixtures) and solves each
    extended problem exactly with a free terminal. The verdict is "change
    found" when no end-of-decision-horizon state stays optimal (within
    tol) across every sampled continuation. Corroborates, never
    establishes, a forecast-horizon verdict.
    """
    T = len(prices)
    if not 1 <= H <= T:
        raise InputError(f"need 1 <= H <= T, got H={H}, T={T}")
    if n_samples < 1 or continuation_len < 0:
        raise InputError("need n_samples >= 1 and continuation_len >= 0")

    rng = np.random.default_rng(seed)
    lo, hi = prices.price_floor, prices.price_cap
    continuations = [(lo,) * continuation_len, (hi,) * continuation_len]
    while len(continuations) < n_samples:
        if len(continuations) % 2 == 0:
            cont = tuple(rng.uniform(lo, hi, size=continuation_len))
        else:
            cont = tuple(np.where(rng.random(continuation_len) < 0.5, lo, hi))
        continuations.append(cont)
    continuations = continuations[:n_samples]

    v_h = forward_values(spec, prices, H).at(H)
    common = None
    for i, cont in enumerate(continuations):
        ext = prices.extended(cont)
        w = backward_values(spec, ext, T + continuation_len, None, down_to=H).at(H)
        _, argmax = pwl.argmax_set(pwl.pointwise_add(v_h, w))
        inflated = argmax.inflate(tol)
        common = inflated if common is None else common.intersect(inflated)
        if common.is_empty():
            return FalsifierVerdict(change_found=True, n_continuations=i + 1,
                                    witness_index=i, witness=cont, common=common)
    return FalsifierVerdict(change_found=False, n_continuations=len(continuations),
                            witness_index=None, witness=None, common=common)
