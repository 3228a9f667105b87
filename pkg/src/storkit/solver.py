"""Exact scheduling by forward/backward piecewise-linear dynamic programming.

The scheduling problem maximizes sum_t dt * C_t * (p_dis_t - p_ch_t)
subject to power limits, state-of-energy bounds, leakage, efficiencies and
one-action-per-period exclusivity. Each DP stage composes four exact
piecewise-linear operations:

    1. argument scaling by the leakage factor (energy decays first),
    2. a charge branch: action_extend with state shift dt*eta_ch and
       reward -dt*C_t per kW charged,
    3. a discharge branch: shift -dt/eta_dis and reward +dt*C_t per kW,
    4. the pointwise maximum of the two branches, clipped to the
       state-of-energy bounds.

Taking the maximum of two single-action branches makes simultaneous
charging and discharging unrepresentable, so exclusivity holds
structurally; no integer variables or external solver are involved. This
matters when prices go negative: a joint relaxation would happily burn
energy through round-trip losses for profit, which branch-splitting rules
out by construction.

Forward profiles V_t(s) give the best profit over periods 1..t ending at
state s; backward profiles W_t(s) give the best profit over periods
t+1..T from state s to a pinned (or free) terminal state.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import pwl
from .core import PriceSeries, Schedule, ScheduleResult, StorageSpec, schedule_from_actions
from .errors import DomainError, InfeasibleError, InputError, InternalError
from .pwl import PwlFunction

FORWARD = "forward"
BACKWARD = "backward"

# Relative tolerance when matching a stage value during schedule recovery.
RECOVER_REL_TOL = 1e-7


@dataclass(frozen=True)
class ValueProfile:
    """Per-stage value functions, forward (V) or backward (W).

    functions[k - first] is the stage-k function. A forward profile has
    first = 0 and V_0 = the single point (s_init, 0); a backward profile
    built down to `first` has W_T = the single point (s_end, 0) or, for a
    free terminal, the zero function on the feasible state interval.
    """

    direction: str
    first: int
    functions: tuple

    def at(self, k: int) -> PwlFunction:
        if not self.first <= k < self.first + len(self.functions):
            raise InputError(f"stage {k} outside profile range "
                             f"[{self.first}, {self.first + len(self.functions) - 1}]")
        return self.functions[k - self.first]

    @property
    def last(self) -> int:
        return self.first + len(self.functions) - 1


def _stage_forward(spec: StorageSpec, f: PwlFunction, price: float) -> PwlFunction:
    g = pwl.scale_argument(f, spec.rho)
    charge = pwl.action_extend(g, spec.dt * spec.eta_ch, -spec.dt * price, spec.p_ch_max)
    discharge = pwl.action_extend(g, -spec.dt / spec.eta_dis, spec.dt * price, spec.p_dis_max)
    both = pwl.pointwise_max(charge, discharge)
    try:
        return pwl.clip_domain(both, spec.s_min, spec.s_max)
    except DomainError as exc:
        raise InternalError(f"state domain emptied during a forward stage: {exc}") from exc


def _stage_backward(spec: StorageSpec, w_next: PwlFunction, price: float) -> PwlFunction:
    charge = pwl.action_extend(w_next, -spec.dt * spec.eta_ch, -spec.dt * price, spec.p_ch_max)
    discharge = pwl.action_extend(w_next, spec.dt / spec.eta_dis, spec.dt * price, spec.p_dis_max)
    both = pwl.pointwise_max(charge, discharge)
    pre_leak = pwl.scale_argument(both, 1.0 / spec.rho)
    try:
        return pwl.clip_domain(pre_leak, spec.s_min, spec.s_max)
    except DomainError as exc:
        raise InfeasibleError(f"terminal state unreachable: {exc}") from exc


def forward_values(spec: StorageSpec, prices: PriceSeries, up_to: int) -> ValueProfile:
    """Profile of V_k for k = 0..up_to.

    V_k(s) is the maximum profit over periods 1..k among feasible
    schedules ending at state s; its domain is exactly the set of states
    reachable from s_init in k periods.
    """
    if up_to < 0 or up_to > len(prices):
        raise InputError(f"up_to ({up_to}) outside 0..{len(prices)}")
    fs = [PwlFunction.single_point(spec.s_init, 0.0)]
    for t in range(1, up_to + 1):
        fs.append(_stage_forward(spec, fs[-1], prices.at(t)))
    return ValueProfile(FORWARD, 0, tuple(fs))


def backward_values(spec: StorageSpec, prices: PriceSeries, T: int,
                    s_end: float | None, down_to: int = 0) -> ValueProfile:
    """Profile of W_k for k = T down to down_to.

    W_k(s) is the maximum profit over periods k+1..T starting at state s
    and ending at s_end. s_end = None leaves the terminal free within the
    state bounds. Raises InfeasibleError when s_end cannot be reached.
    """
    if not 0 <= down_to <= T <= len(prices):
        raise InputError(f"need 0 <= down_to <= T <= {len(prices)}, got {down_to}, {T}")
    if s_end is None:
        w = PwlFunction.constant(spec.s_min, spec.s_max, 0.0)
    else:
        if not spec.s_min <= s_end <= spec.s_max:
            raise InfeasibleError(f"s_end ({s_end}) outside [{spec.s_min}, {spec.s_max}]")
        w = PwlFunction.single_point(s_end, 0.0)
    ws = [w]
    for k in range(T - 1, down_to - 1, -1):
        ws.append(_stage_backward(spec, ws[-1], prices.at(k + 1)))
    ws.reverse()
    if down_to == 0 and s_end is not None:
        w0 = ws[0]
        tol = 1e-9 * max(1.0, spec.capacity_span())
        if not w0.lo - tol <= spec.s_init <= w0.hi + tol:
            raise InfeasibleError(
                f"terminal state {s_end} unreachable from s_init = {spec.s_init} "
                f"in {T} periods (needs start in [{w0.lo}, {w0.hi}])"
            )
    return ValueProfile(BACKWARD, down_to, tuple(ws))


def _edge_snap(f: PwlFunction, x: float, rel_tol: float = 1e-9) -> float:
    tol = rel_tol * max(1.0, abs(f.lo), abs(f.hi))
    if x < f.lo - tol or x > f.hi + tol:
        raise InfeasibleError(f"state {x} outside reachable range [{f.lo}, {f.hi}]")
    return min(max(x, f.lo), f.hi)


def solve_fixed_terminal(spec: StorageSpec, prices: PriceSeries, T: int,
                         s_end: float) -> ScheduleResult:
    """Optimal schedule over periods 1..T with the terminal state pinned."""
    profile = forward_values(spec, prices, T)
    v_T = profile.at(T)
    target = _edge_snap(v_T, s_end)
    profit = pwl.evaluate(v_T, target)
    sched = recover_schedule(spec, prices, profile, target, T)
    return ScheduleResult(schedule=sched, profit=profit, terminal_soe=sched.soe[-1] if T else spec.s_init)


def solve_free_terminal(spec: StorageSpec, prices: PriceSeries, H: int,
                        terminal_interval) -> tuple:
    """Best profit over periods 1..H with the terminal anywhere in an interval.

    Returns (profit, IntervalSet of optimal terminal states). The interval
    is intersected with the reachable states at H; an empty intersection is
    infeasible.
    """
    profile = forward_values(spec, prices, H)
    v_h = profile.at(H)
    try:
        return pwl.argmax_set(v_h, sub_domain=terminal_interval)
    except DomainError as exc:
        raise InfeasibleError(f"terminal interval {terminal_interval} unreachable at "
                              f"period {H}: {exc}") from exc


def _branch_predecessor(spec: StorageSpec, f_prev: PwlFunction, price: float,
                        s: float, branch: str):
    """Best predecessor state for one action branch of the stage ending at s.

    Returns (value, IntervalSet of optimal predecessors) or None when the
    branch cannot reach s. Parameterized by the predecessor y:
    charge   s = rho*y + dt*eta_ch*c  => value f(y) - (price/eta_ch)*(s - rho*y)
    discharge s = rho*y - dt*d/eta_dis => value f(y) + price*eta_dis*(rho*y - s)
    """
    if branch == "charge":
        y_lo = (s - spec.dt * spec.eta_ch * spec.p_ch_max) / spec.rho
        y_hi = s / spec.rho
        slope = price * spec.rho / spec.eta_ch
        offset = -price * s / spec.eta_ch
    else:
        y_lo = s / spec.rho
        y_hi = (s + spec.dt * spec.p_dis_max / spec.eta_dis) / spec.rho
        slope = price * spec.eta_dis * spec.rho
        offset = -price * spec.eta_dis * s
    lo = max(y_lo, f_prev.lo)
    hi = min(y_hi, f_prev.hi)
    tol = 1e-9 * max(1.0, abs(f_prev.lo), abs(f_prev.hi))
    if lo > hi + tol:
        return None
    try:
        restricted = pwl.clip_domain(f_prev, lo, hi)
    except DomainError:
        return None
    if restricted.is_point():
        reward = PwlFunction.single_point(restricted.lo, slope * restricted.lo + offset)
    else:
        reward = PwlFunction.line(restricted.lo, slope * restricted.lo + offset,
                                  restricted.hi, slope * restricted.hi + offset)
    total = pwl.pointwise_add(restricted, reward)
    # tight tolerance: picking a predecessor needs the exact vertex, not the
    # looser flat-detection band used for solution-multiplicity sets
    m = total.max_value()
    return pwl.argmax_set(total, tol=1e-12 * (1.0 + abs(m)))


def recover_schedule(spec: StorageSpec, prices: PriceSeries, profile: ValueProfile,
                     target_s: float, target_t: int) -> Schedule:
    """Feasible schedule reaching state target_s at period target_t with
    profit equal to the forward profile's value there.

    Walks backwards one stage at a time, re-solving the stage maximization
    from the previous value function. Ties are broken deterministically:
    the smallest optimal predecessor state wins, and the charge branch wins
    over discharge when both reach the optimum from the same predecessor.
    """
    if profile.direction != FORWARD:
        raise InputError("schedule recovery needs a forward profile")
    if target_t < 0 or target_t > profile.last:
        raise InputError(f"target_t ({target_t}) outside profile range 0..{profile.last}")
    if target_t == 0:
        return Schedule((), (), ())

    s = _edge_snap(profile.at(target_t), target_s)
    p_ch = [0.0] * target_t
    p_dis = [0.0] * target_t
    for k in range(target_t, 0, -1):
        f_prev = profile.at(k - 1)
        price = prices.at(k)
        expected = pwl.evaluate(profile.at(k), s)
        tol = RECOVER_REL_TOL * (1.0 + abs(expected))

        best = []  # (y, branch, value)
        for branch in ("charge", "discharge"):
            res = _branch_predecessor(spec, f_prev, price, s, branch)
            if res is not None:
                value, arg = res
                best.append((branch, value, arg))
        if not best:
            raise InternalError(f"no feasible predecessor at stage {k}")
        v_star = max(value for _, value, _ in best)
        if abs(v_star - expected) > tol:
            raise InternalError(
                f"stage {k} recovery mismatch: recomputed {v_star} vs stored {expected}"
            )

        y_pick = None
        branch_pick = None
        ytol = 1e-9 * max(1.0, spec.s_max - spec.s_min)
        for branch, value, arg in best:
            if value < v_star - tol:
                continue
            y = arg.lowest()
            if y_pick is None or y < y_pick - ytol:
                y_pick, branch_pick = y, branch
            elif abs(y - y_pick) <= ytol and branch == "charge":
                y_pick, branch_pick = y, branch
        if branch_pick == "charge":
            c = (s - spec.rho * y_pick) / (spec.dt * spec.eta_ch)
            p_ch[k - 1] = min(max(c, 0.0), spec.p_ch_max)
        else:
            d = (spec.rho * y_pick - s) * spec.eta_dis / spec.dt
            p_dis[k - 1] = min(max(d, 0.0), spec.p_dis_max)
        s = y_pick

    if abs(s - spec.s_init) > 1e-6 * max(1.0, abs(spec.s_init)):
        raise InternalError(f"recovery walked back to {s}, expected s_init = {spec.s_init}")
    return schedule_from_actions(spec, p_ch, p_dis)


def decision_value_function(spec: StorageSpec, prices: PriceSeries, H: int) -> PwlFunction:
    """V_H: best profit over the decision horizon as a function of s_H."""
    return forward_values(spec, prices, H).at(H)
