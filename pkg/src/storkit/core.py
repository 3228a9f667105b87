"""Domain types and accounting rules for price-taker storage scheduling.

Conventions used throughout the package:

* Internal units are fixed to kW, kWh, currency-per-kWh and hours.
  File ingestion converts (e.g. per-MWh prices are divided by 1000 on load)
  so that no other module ever sees mixed units.
* Periods are 1-indexed; index 0 is reserved for the initial state of
  energy. Python sequences carrying per-period data (prices, powers,
  states) store period t at offset t-1.
* The state of energy evolves as

      s_t = rho * s_{t-1} + dt * (eta_ch * p_ch_t - p_dis_t / eta_dis)

  with s_0 = s_init. Charging and discharging are mutually exclusive
  within a period.

All types are immutable after construction and all operations are pure
functions, so everything here is safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InputError

# Complementarity residue below this fraction of p_ch_max*p_dis_max counts
# as zero; recovered schedules can carry denormal-scale cross terms.
COMPLEMENTARITY_REL_TOL = 1e-9

# Default relative tolerance for the remaining schedule checks (bounds and
# the state-update recurrence), scaled by the relevant capacity.
VALIDATE_REL_TOL = 1e-7


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise InputError(msg)


@dataclass(frozen=True)
class StorageSpec:
    """Physical description of one storage system.

    Attributes:
        s_min, s_max: state-of-energy bounds (kWh).
        p_ch_max, p_dis_max: charge / discharge power limits (kW).
        eta_ch, eta_dis: charge / discharge efficiencies in (0, 1].
        rho: per-period leakage factor in (0, 1]; stored energy is
            multiplied by rho at the start of each period.
        s_init: initial state of energy (kWh).
        dt: period duration (hours).
    """

    s_min: float
    s_max: float
    p_ch_max: float
    p_dis_max: float
    eta_ch: float
    eta_dis: float
    rho: float
    s_init: float
    dt: float = 1.0

    def __post_init__(self):
        _require(self.s_min < self.s_max, f"s_min ({self.s_min}) must be < s_max ({self.s_max})")
        _require(
            self.s_min <= self.s_init <= self.s_max,
            f"s_init ({self.s_init}) must lie in [s_min, s_max] = [{self.s_min}, {self.s_max}]",
        )
        _require(0.0 < self.eta_ch <= 1.0, f"eta_ch ({self.eta_ch}) must be in (0, 1]")
        _require(0.0 < self.eta_dis <= 1.0, f"eta_dis ({self.eta_dis}) must be in (0, 1]")
        _require(0.0 < self.rho <= 1.0, f"rho ({self.rho}) must be in (0, 1]")
        _require(self.p_ch_max > 0.0, f"p_ch_max ({self.p_ch_max}) must be > 0")
        _require(self.p_dis_max > 0.0, f"p_dis_max ({self.p_dis_max}) must be > 0")
        _require(self.dt > 0.0, f"dt ({self.dt}) must be > 0")

    def round_trip(self) -> float:
        """Round-trip efficiency eta_ch * eta_dis."""
        return self.eta_ch * self.eta_dis

    def duration_of_charge(self) -> float:
        """Hours needed to fill the storage completely at maximum charge rate."""
        return (self.s_max - self.s_min) / (self.eta_ch * self.p_ch_max)

    def duration_of_discharge(self) -> float:
        """Hours needed to empty the storage completely at maximum discharge rate."""
        return self.eta_dis * (self.s_max - self.s_min) / self.p_dis_max

    def capacity_span(self) -> float:
        return self.s_max - self.s_min

    def with_s_init(self, s_init: float) -> "StorageSpec":
        """Copy of this spec with a different initial state of energy."""
        return StorageSpec(
            s_min=self.s_min,
            s_max=self.s_max,
            p_ch_max=self.p_ch_max,
            p_dis_max=self.p_dis_max,
            eta_ch=self.eta_ch,
            eta_dis=self.eta_dis,
            rho=self.rho,
            s_init=s_init,
            dt=self.dt,
        )


@dataclass(frozen=True)
class PriceSeries:
    """Per-period prices plus global bounds on prices outside the window.

    values[t-1] is the price of period t in currency per kWh. price_floor
    (<= 0) and price_cap (>= 0) bound any price that could ever occur,
    including beyond the available forecast.
    """

    values: tuple
    price_floor: float = -1e9
    price_cap: float = 1e9

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        _require(self.price_floor <= 0.0, f"price_floor ({self.price_floor}) must be <= 0")
        _require(self.price_cap >= 0.0, f"price_cap ({self.price_cap}) must be >= 0")
        for i, v in enumerate(self.values):
            _require(
                self.price_floor <= v <= self.price_cap,
                f"price at period {i + 1} ({v}) outside [price_floor, price_cap]",
            )

    def __len__(self) -> int:
        return len(self.values)

    def at(self, t: int) -> float:
        """Price of period t (1-indexed)."""
        if not 1 <= t <= len(self.values):
            raise InputError(f"period {t} outside 1..{len(self.values)}")
        return self.values[t - 1]

    def window(self, start_period: int, length: int | None = None) -> "PriceSeries":
        """Sub-series beginning at start_period (1-indexed), re-indexed from 1."""
        if not 1 <= start_period <= len(self.values) + 1:
            raise InputError(f"start_period {start_period} outside 1..{len(self.values) + 1}")
        chunk = self.values[start_period - 1 :]
        if length is not None:
            if length < 0 or length > len(chunk):
                raise InputError(f"window length {length} exceeds remaining data ({len(chunk)})")
            chunk = chunk[:length]
        return PriceSeries(chunk, self.price_floor, self.price_cap)

    def extended(self, extra_values) -> "PriceSeries":
        """Series with extra per-period prices appended."""
        return PriceSeries(self.values + tuple(float(v) for v in extra_values),
                           self.price_floor, self.price_cap)


@dataclass(frozen=True)
class HorizonConfig:
    """Decision horizon H, planning horizon T and search cap T_max."""

    H: int
    T: int
    T_max: int

    def __post_init__(self):
        _require(1 <= self.H, f"H ({self.H}) must be >= 1")
        _require(self.H <= self.T, f"H ({self.H}) must be <= T ({self.T})")
        _require(self.T <= self.T_max, f"T ({self.T}) must be <= T_max ({self.T_max})")

    def check_against(self, prices: PriceSeries) -> None:
        _require(
            self.T_max <= len(prices),
            f"T_max ({self.T_max}) exceeds available prices ({len(prices)})",
        )


@dataclass(frozen=True)
class Schedule:
    """Per-period charge/discharge powers and resulting states of energy.

    All three sequences have length T; soe[t-1] is the state at the END of
    period t. The initial state lives in the StorageSpec, not here.
    """

    p_ch: tuple
    p_dis: tuple
    soe: tuple

    def __post_init__(self):
        object.__setattr__(self, "p_ch", tuple(float(v) for v in self.p_ch))
        object.__setattr__(self, "p_dis", tuple(float(v) for v in self.p_dis))
        object.__setattr__(self, "soe", tuple(float(v) for v in self.soe))
        if not (len(self.p_ch) == len(self.p_dis) == len(self.soe)):
            raise InputError(
                f"schedule sequences must share a length, got "
                f"{len(self.p_ch)}/{len(self.p_dis)}/{len(self.soe)}"
            )

    def __len__(self) -> int:
        return len(self.p_ch)


@dataclass(frozen=True)
class ScheduleResult:
    """A schedule together with its objective value and terminal state."""

    schedule: Schedule
    profit: float
    terminal_soe: float


@dataclass(frozen=True)
class Violation:
    """One broken schedule constraint: which one, where, and by how much."""

    constraint: str
    period: int
    magnitude: float

    def __str__(self):
        return f"{self.constraint} at period {self.period} (magnitude {self.magnitude:.3e})"


def validate_schedule(spec: StorageSpec, prices: PriceSeries, sched: Schedule,
                      rel_tol: float = VALIDATE_REL_TOL) -> list:
    """Check a schedule against every feasibility rule.

    Returns an empty list iff the schedule satisfies, within tolerance:
    power bounds, charge/discharge exclusivity, state-of-energy bounds and
    the state-update recurrence seeded at spec.s_init.
    """
    T = len(sched)
    if len(prices) != T:
        raise InputError(f"price series length {len(prices)} != schedule length {T}")

    p_tol = rel_tol * max(spec.p_ch_max, spec.p_dis_max)
    s_tol = rel_tol * max(1.0, spec.capacity_span())
    cc_tol = COMPLEMENTARITY_REL_TOL * spec.p_ch_max * spec.p_dis_max

    violations = []
    prev = spec.s_init
    for t in range(1, T + 1):
        c = sched.p_ch[t - 1]
        d = sched.p_dis[t - 1]
        s = sched.soe[t - 1]
        if c < -p_tol or c > spec.p_ch_max + p_tol:
            violations.append(Violation("p_ch_range", t, max(-c, c - spec.p_ch_max)))
        if d < -p_tol or d > spec.p_dis_max + p_tol:
            violations.append(Violation("p_dis_range", t, max(-d, d - spec.p_dis_max)))
        if c * d > cc_tol:
            violations.append(Violation("complementarity", t, c * d))
        if s < spec.s_min - s_tol or s > spec.s_max + s_tol:
            violations.append(Violation("soe_range", t, max(spec.s_min - s, s - spec.s_max)))
        expected = spec.rho * prev + spec.dt * (spec.eta_ch * c - d / spec.eta_dis)
        if abs(s - expected) > s_tol:
            violations.append(Violation("soe_update", t, abs(s - expected)))
        prev = s
    return violations


def profit_of(spec: StorageSpec, prices: PriceSeries, sched: Schedule) -> float:
    """Arbitrage profit of a schedule: sum of dt * C_t * (p_dis_t - p_ch_t)."""
    T = len(sched)
    if len(prices) != T:
        raise InputError(f"price series length {len(prices)} != schedule length {T}")
    return sum(
        spec.dt * prices.at(t) * (sched.p_dis[t - 1] - sched.p_ch[t - 1])
        for t in range(1, T + 1)
    )


def propagate_soe(spec: StorageSpec, p_ch, p_dis, from_t: int, to_t: int,
                  s_from: float) -> float:
    """State of energy at to_t given the state at from_t and the actions between.

    Merges the per-period update over (from_t, to_t]:

        s_{to} = rho^(to-from) * s_from
                 + dt * sum_{k=from+1..to} rho^(to-k) * (eta_ch*p_ch_k - p_dis_k/eta_dis)

    p_ch / p_dis hold periods 1..T at offsets 0..T-1.
    """
    if from_t > to_t:
        raise InputError(f"from_t ({from_t}) must be <= to_t ({to_t})")
    if from_t < 0 or to_t > len(p_ch) or to_t > len(p_dis):
        raise InputError(f"period range [{from_t}, {to_t}] outside available actions")
    s = s_from
    for k in range(from_t + 1, to_t + 1):
        s = spec.rho * s + spec.dt * (spec.eta_ch * p_ch[k - 1] - p_dis[k - 1] / spec.eta_dis)
    return s


def schedule_from_actions(spec: StorageSpec, p_ch, p_dis) -> Schedule:
    """Build a Schedule with states propagated exactly from the actions."""
    if len(p_ch) != len(p_dis):
        raise InputError("p_ch and p_dis must have equal length")
    soe = []
    s = spec.s_init
    for c, d in zip(p_ch, p_dis):
        s = spec.rho * s + spec.dt * (spec.eta_ch * c - d / spec.eta_dis)
        soe.append(s)
    return Schedule(tuple(p_ch), tuple(p_dis), tuple(soe))


def storage_use_of(spec: StorageSpec, sched: Schedule) -> float:
    """Grid-side energy turnover: sum of dt * (p_ch + p_dis)."""
    return sum(spec.dt * (c + d) for c, d in zip(sched.p_ch, sched.p_dis))


def geometric_sum(rho: float, n: int) -> float:
    """Sum of rho^t for t = 0..n-1 (0 when n <= 0)."""
    if n <= 0:
        return 0.0
    if rho == 1.0:
        return float(n)
    return (1.0 - rho ** n) / (1.0 - rho)


def geometric_sum_range(rho: float, a: int, b: int) -> float:
    """Sum of rho^t for t = a..b inclusive (0 when b < a)."""
    if b < a:
        return 0.0
    return geometric_sum(rho, b + 1) - geometric_sum(rho, a)
