"""Exact algebra of piecewise-linear functions of the state of energy.

A PwlFunction is defined by its breakpoints, is linear between consecutive
breakpoints, and is minus-infinity outside its closed domain. Functions may
be non-concave: negative prices make single-stage rewards non-concave, so
nothing here assumes or exploits concavity.

Every operation returns a function in canonical form: strictly increasing
abscissae, no three consecutive colinear breakpoints. Crossing points are
computed in closed form so that downstream set comparisons (argument-max
sets, set distances) stay exact up to floating-point roundoff.

All values are immutable and all operations pure; share freely across
threads.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .errors import DomainError, InputError, InternalError

# Relative tolerance for merging near-duplicate abscissae.
XTOL_REL = 1e-12
# Relative slope tolerance for colinear-merge during canonicalization.
SLOPE_TOL_REL = 1e-12
# Relative tolerance for treating two domains as touching rather than gapped.
GAP_TOL_REL = 1e-9


def _span_scale(*xs) -> float:
    return max(1.0, *(abs(x) for x in xs))


def _canonical(points, dedupe="strict"):
    """Sort, dedupe and colinear-merge a breakpoint list.

    dedupe="strict" raises on duplicate abscissae with conflicting
    ordinates (user input); dedupe="max" keeps the larger ordinate
    (envelope construction, where near-duplicates carry equal values).
    """
    pts = sorted(points)
    if not pts:
        raise InputError("a piecewise-linear function needs at least one breakpoint")
    scale = _span_scale(pts[0][0], pts[-1][0])
    xtol = XTOL_REL * scale

    merged = [pts[0]]
    for x, y in pts[1:]:
        px, py = merged[-1]
        if x - px <= xtol:
            if dedupe == "max":
                if y > py:
                    merged[-1] = (px, y)
            elif abs(y - py) > 1e-9 * _span_scale(y, py):
                raise InputError(f"duplicate abscissa {x} with conflicting values {py} and {y}")
            continue
        merged.append((x, y))

    if len(merged) <= 2:
        return merged

    yscale = max(1.0, *(abs(y) for _, y in merged))
    ytol = SLOPE_TOL_REL * yscale
    out = [merged[0]]
    for x, y in merged[1:]:
        while len(out) >= 2:
            x0, y0 = out[-2]
            x1, y1 = out[-1]
            s1 = (y1 - y0) / (x1 - x0)
            s2 = (y - y1) / (x - x1)
            if abs(s2 - s1) <= SLOPE_TOL_REL * max(1.0, abs(s1), abs(s2)):
                out.pop()
                continue
            # same test in value terms: dropping the middle point changes the
            # function by at most the interpolation error there; roundoff
            # kinks over tiny spans carry slope noise but negligible value
            interp = y0 + (y - y0) * (x1 - x0) / (x - x0)
            if abs(interp - y1) <= ytol:
                out.pop()
                continue
            break
        out.append((x, y))
    return out


@dataclass(frozen=True)
class PwlFunction:
    """Piecewise-linear function given by breakpoints (xs[i], ys[i])."""

    xs: tuple
    ys: tuple

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or not self.xs:
            raise InputError("breakpoint abscissae and ordinates must match and be non-empty")
        for a, b in zip(self.xs, self.xs[1:]):
            if not b > a:
                raise InputError(f"breakpoint abscissae must strictly increase ({a} !< {b})")
        object.__setattr__(self, "lo", self.xs[0])
        object.__setattr__(self, "hi", self.xs[-1])
        object.__setattr__(self, "_edge_tol",
                           XTOL_REL * max(1.0, abs(self.xs[0]), abs(self.xs[-1])))

    @classmethod
    def from_points(cls, points, dedupe="strict"):
        pts = _canonical(points, dedupe=dedupe)
        return cls(tuple(p[0] for p in pts), tuple(p[1] for p in pts))

    @classmethod
    def single_point(cls, x: float, y: float):
        return cls((float(x),), (float(y),))

    @classmethod
    def line(cls, x0: float, y0: float, x1: float, y1: float):
        if not x1 > x0:
            raise InputError(f"line needs x0 < x1, got {x0}, {x1}")
        return cls((float(x0), float(x1)), (float(y0), float(y1)))

    @classmethod
    def constant(cls, lo: float, hi: float, value: float):
        if hi == lo:
            return cls.single_point(lo, value)
        return cls.line(lo, value, hi, value)

    def n_breakpoints(self) -> int:
        return len(self.xs)

    def is_point(self) -> bool:
        return len(self.xs) == 1

    def __call__(self, x: float) -> float:
        return evaluate(self, x)

    def breakpoints(self):
        return list(zip(self.xs, self.ys))

    def shift(self, dx: float, dy: float) -> "PwlFunction":
        """Graph translation: h(x) = f(x - dx) + dy."""
        return PwlFunction(tuple(x + dx for x in self.xs), tuple(y + dy for y in self.ys))

    def negate(self) -> "PwlFunction":
        return PwlFunction(self.xs, tuple(-y for y in self.ys))

    def max_value(self) -> float:
        return max(self.ys)

    def to_csv_rows(self):
        """Debug dump: one 'x,y' line per breakpoint, 12 significant digits."""
        return [f"{x:.12g},{y:.12g}" for x, y in zip(self.xs, self.ys)]


def evaluate(f: PwlFunction, x: float) -> float:
    """Value of f at x; exact at breakpoints, interpolated between them."""
    xs = f.xs
    if x < xs[0] - f._edge_tol or x > xs[-1] + f._edge_tol:
        raise DomainError(f"x = {x} outside domain [{xs[0]}, {xs[-1]}]")
    if x <= xs[0]:
        return f.ys[0]
    if x >= xs[-1]:
        return f.ys[-1]
    i = bisect_right(xs, x) - 1
    if xs[i] == x:
        return f.ys[i]
    x0, x1 = xs[i], xs[i + 1]
    y0, y1 = f.ys[i], f.ys[i + 1]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def _eval_if_defined(f: PwlFunction, x: float):
    if x < f.xs[0] - f._edge_tol or x > f.xs[-1] + f._edge_tol:
        return None
    return evaluate(f, x)


def _eval_on_sorted(f: PwlFunction, xs) -> list:
    """Values of f at ascending abscissae; None where outside the domain.

    One monotone walk over f's segments instead of a bisect per point.
    """
    fx, fy = f.xs, f.ys
    tol = f._edge_tol
    lo, hi = fx[0], fx[-1]
    n = len(fx)
    out = [None] * len(xs)
    j = 0
    for i, x in enumerate(xs):
        if x < lo - tol or x > hi + tol:
            continue
        if x <= lo:
            out[i] = fy[0]
            continue
        if x >= hi:
            out[i] = fy[-1]
            continue
        while j + 1 < n and fx[j + 1] <= x:
            j += 1
        if fx[j] == x:
            out[i] = fy[j]
        else:
            out[i] = fy[j] + (fy[j + 1] - fy[j]) * (x - fx[j]) / (fx[j + 1] - fx[j])
    return out


def _upper_envelope(pieces) -> PwlFunction:
    """Pointwise maximum of several functions on the union of their domains.

    The union must be a contiguous interval and the resulting maximum must
    itself be continuous (a piece entering above the running maximum at its
    own domain edge would create a jump that breakpoints cannot represent;
    that raises DomainError). Crossing abscissae between every pair of
    pieces are inserted in closed form, so between consecutive candidate
    abscissae no two pieces cross and the envelope is exact.
    """
    if not pieces:
        raise InputError("upper envelope of an empty piece list")
    if len(pieces) == 1:
        return PwlFunction.from_points(pieces[0].breakpoints(), dedupe="max")

    spans = sorted((p.lo, p.hi) for p in pieces)
    scale = _span_scale(spans[0][0], max(hi for _, hi in spans))
    gap_tol = GAP_TOL_REL * scale
    cover = spans[0][1]
    for lo, hi in spans[1:]:
        if lo > cover + gap_tol:
            raise DomainError(f"domains leave a gap between {cover} and {lo}")
        cover = max(cover, hi)

    candidates = set()
    for p in pieces:
        candidates.update(p.xs)

    def _segment_slope(p):
        if len(p.xs) != 2:
            return None
        return (p.ys[1] - p.ys[0]) / (p.xs[1] - p.xs[0])

    slopes = [_segment_slope(p) for p in pieces]

    xtol = XTOL_REL * scale
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            p, q = pieces[i], pieces[j]
            # parallel segments (e.g. the action rays) never cross strictly
            if slopes[i] is not None and slopes[i] == slopes[j]:
                continue
            lo = max(p.lo, q.lo)
            hi = min(p.hi, q.hi)
            if hi - lo <= xtol:
                continue
            grid = sorted(
                {lo, hi}
                | {x for x in p.xs if lo < x < hi}
                | {x for x in q.xs if lo < x < hi}
            )
            pv = _eval_on_sorted(p, grid)
            qv = _eval_on_sorted(q, grid)
            dv = [a - b for a, b in zip(pv, qv)]
            # sign flips entirely inside the roundoff band are not crossings;
            # nearly identical pieces would otherwise seed spurious kinks
            noise = SLOPE_TOL_REL * max(1.0, *(abs(v) for v in pv), *(abs(v) for v in qv))
            for k in range(len(grid) - 1):
                a, b = dv[k], dv[k + 1]
                if ((a > 0.0 > b) or (a < 0.0 < b)) and (abs(a) > noise or abs(b) > noise):
                    x = grid[k] + (grid[k + 1] - grid[k]) * a / (a - b)
                    candidates.add(x)

    xs = _dedupe_sorted(sorted(candidates), xtol)
    values = [_eval_on_sorted(p, xs) for p in pieces]

    pointwise = []
    for i in range(len(xs)):
        best = None
        for col in values:
            v = col[i]
            if v is not None and (best is None or v > best):
                best = v
        if best is None:
            raise InternalError(f"no piece defined at candidate x = {xs[i]}")
        pointwise.append(best)

    if len(xs) == 1:
        return PwlFunction.single_point(xs[0], pointwise[0])

    yscale = max(1.0, *(abs(v) for v in pointwise))
    ctol = 1e-9 * yscale

    # per-cell envelope from pieces covering the whole cell; junction values
    # must agree with the pointwise maximum or the true max is discontinuous
    points = [(xs[0], pointwise[0])]
    for i in range(len(xs) - 1):
        x1, x2 = xs[i], xs[i + 1]
        y1 = y2 = None
        for p, col in zip(pieces, values):
            if p.lo <= x1 + xtol and p.hi >= x2 - xtol:
                v1, v2 = col[i], col[i + 1]
                if v1 is None or v2 is None:  # pragma: no cover - covering piece is defined
                    continue
                if y1 is None or v1 > y1:
                    y1 = v1
                if y2 is None or v2 > y2:
                    y2 = v2
        if y1 is None:
            raise DomainError(f"no piece spans [{x1}, {x2}]; domains leave a gap")
        if abs(y1 - pointwise[i]) > ctol or abs(y2 - pointwise[i + 1]) > ctol:
            raise DomainError(
                f"pointwise maximum is discontinuous near x = {x1 if abs(y1 - pointwise[i]) > ctol else x2}; "
                "not representable as a piecewise-linear function"
            )
        points.append((x2, pointwise[i + 1]))
    return PwlFunction.from_points(points, dedupe="max")


def _dedupe_sorted(xs, xtol):
    out = [xs[0]]
    for x in xs[1:]:
        if x - out[-1] > xtol:
            out.append(x)
    return out


def pointwise_max(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    """h(x) = max(f(x), g(x)) on the union of domains (gap -> DomainError)."""
    return _upper_envelope([f, g])


def pointwise_add(f: PwlFunction, g: PwlFunction) -> PwlFunction:
    """h(x) = f(x) + g(x) on the intersection of domains."""
    lo = max(f.lo, g.lo)
    hi = min(f.hi, g.hi)
    tol = GAP_TOL_REL * _span_scale(f.lo, f.hi, g.lo, g.hi)
    if lo > hi + tol:
        raise DomainError(f"domains [{f.lo},{f.hi}] and [{g.lo},{g.hi}] do not intersect")
    if lo >= hi:
        # domains touch or overlap by less than the gap tolerance: pinch to a point
        x = 0.5 * (lo + hi)
        vf = evaluate(f, min(max(x, f.lo), f.hi))
        vg = evaluate(g, min(max(x, g.lo), g.hi))
        return PwlFunction.single_point(x, vf + vg)
    xs = sorted({lo, hi} | {x for x in f.xs if lo < x < hi} | {x for x in g.xs if lo < x < hi})
    points = [(x, evaluate(f, x) + evaluate(g, x)) for x in xs]
    return PwlFunction.from_points(points, dedupe="max")


def scale_argument(f: PwlFunction, factor: float) -> PwlFunction:
    """Pre-compose with a positive scaling: h(x) = f(x / factor).

    Breakpoint abscissae are multiplied by factor; factors above 1 widen
    the domain (used when unrolling leakage backwards in time).
    """
    if factor <= 0.0:
        raise InputError(f"scale factor must be > 0, got {factor}")
    if factor == 1.0:
        return f
    return PwlFunction(tuple(x * factor for x in f.xs), f.ys)


def action_extend(f: PwlFunction, shift_per_unit: float, reward_per_unit: float,
                  max_action: float) -> PwlFunction:
    """One bounded linear action applied on top of f.

        h(x) = max over a in [0, A] of f(x - k*a) + m*a

    with k = shift_per_unit, m = reward_per_unit, A = max_action. Exact for
    piecewise-linear f: for fixed x the inner objective is piecewise linear
    in a, so maximizers sit at a = 0, a = A, or where x - k*a hits a
    breakpoint of f. The envelope of those finitely many candidate pieces
    (f itself, f translated by the full action, and one ray of slope m/k
    per breakpoint) is the result.
    """
    if shift_per_unit == 0.0:
        raise InputError("shift_per_unit must be non-zero")
    if max_action < 0.0:
        raise InputError(f"max_action must be >= 0, got {max_action}")
    dx = shift_per_unit * max_action
    dy = reward_per_unit * max_action
    if dx == 0.0:
        return f

    pieces = [f, f.shift(dx, dy)]
    for b, yb in zip(f.xs, f.ys):
        x2 = b + dx
        y2 = yb + dy
        if x2 > b:
            pieces.append(PwlFunction.line(b, yb, x2, y2))
        else:
            pieces.append(PwlFunction.line(x2, y2, b, yb))
    return _upper_envelope(pieces)


def clip_domain(f: PwlFunction, lo: float, hi: float) -> PwlFunction:
    """Restriction of f to [lo, hi] intersected with its domain."""
    new_lo = max(f.lo, lo)
    new_hi = min(f.hi, hi)
    tol = GAP_TOL_REL * _span_scale(f.lo, f.hi, lo, hi)
    if new_lo > new_hi + tol:
        raise DomainError(f"clip to [{lo}, {hi}] empties domain [{f.lo}, {f.hi}]")
    if new_lo >= new_hi:
        x = min(max(new_lo, f.lo), f.hi)
        return PwlFunction.single_point(x, evaluate(f, x))
    points = [(new_lo, evaluate(f, new_lo))]
    points += [(x, y) for x, y in zip(f.xs, f.ys) if new_lo < x < new_hi]
    points.append((new_hi, evaluate(f, new_hi)))
    return PwlFunction.from_points(points, dedupe="max")


@dataclass(frozen=True)
class IntervalSet:
    """Sorted disjoint closed intervals [a_i, b_i]; point intervals allowed."""

    intervals: tuple

    def __post_init__(self):
        ivs = []
        for lo, hi in sorted(self.intervals):
            if hi < lo:
                raise InputError(f"interval [{lo}, {hi}] is inverted")
            if ivs and lo <= ivs[-1][1]:
                ivs[-1] = (ivs[-1][0], max(ivs[-1][1], hi))
            else:
                ivs.append((float(lo), float(hi)))
        object.__setattr__(self, "intervals", tuple(ivs))

    @classmethod
    def point(cls, x: float):
        return cls(((x, x),))

    @classmethod
    def empty(cls):
        return cls(())

    def is_empty(self) -> bool:
        return not self.intervals

    def __len__(self) -> int:
        return len(self.intervals)

    def lowest(self) -> float:
        if not self.intervals:
            raise InputError("empty interval set has no lowest point")
        return self.intervals[0][0]

    def highest(self) -> float:
        if not self.intervals:
            raise InputError("empty interval set has no highest point")
        return self.intervals[-1][1]

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(lo - tol <= x <= hi + tol for lo, hi in self.intervals)

    def inflate(self, eps: float) -> "IntervalSet":
        if self.is_empty():
            return self
        return IntervalSet(tuple((lo - eps, hi + eps) for lo, hi in self.intervals))

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for a_lo, a_hi in self.intervals:
            for b_lo, b_hi in other.intervals:
                lo = max(a_lo, b_lo)
                hi = min(a_hi, b_hi)
                if lo <= hi:
                    out.append((lo, hi))
        return IntervalSet(tuple(out))


def set_distance(a: IntervalSet, b: IntervalSet) -> float:
    """Minimum |x - y| over x in a, y in b; zero iff the sets intersect."""
    if a.is_empty() or b.is_empty():
        raise InputError("set_distance requires non-empty interval sets")
    best = None
    for a_lo, a_hi in a.intervals:
        for b_lo, b_hi in b.intervals:
            d = max(0.0, max(a_lo, b_lo) - min(a_hi, b_hi))
            if best is None or d < best:
                best = d
            if best == 0.0:
                return 0.0
    return best


def argmax_set(f: PwlFunction, sub_domain=None, tol: float | None = None):
    """Maximum of f on sub_domain and the set of abscissae attaining it.

    Flat optimal segments come back as intervals. tol defaults to
    1e-9 * (1 + |max|); abscissae with value within tol of the maximum are
    included, so solution multiplicity survives floating-point roundoff.
    """
    if sub_domain is not None:
        lo, hi = sub_domain
        g = clip_domain(f, lo, hi)
    else:
        g = f
    m = max(g.ys)
    if tol is None:
        tol = 1e-9 * (1.0 + abs(m))
    cutoff = m - tol

    xtol = XTOL_REL * _span_scale(g.lo, g.hi)
    intervals = []

    def push(lo_x, hi_x):
        if intervals and lo_x <= intervals[-1][1] + xtol:
            intervals[-1] = (intervals[-1][0], max(intervals[-1][1], hi_x))
        else:
            intervals.append((lo_x, hi_x))

    if g.is_point():
        push(g.lo, g.lo)
        return m, IntervalSet(tuple(intervals))

    for i in range(len(g.xs) - 1):
        x0, x1 = g.xs[i], g.xs[i + 1]
        y0, y1 = g.ys[i], g.ys[i + 1]
        above0 = y0 >= cutoff
        above1 = y1 >= cutoff
        if above0 and above1:
            push(x0, x1)
        elif above0 or above1:
            # crossing of the segment with the cutoff level
            xc = x0 + (x1 - x0) * (cutoff - y0) / (y1 - y0)
            xc = min(max(xc, x0), x1)
            if above0:
                push(x0, xc)
            else:
                push(xc, x1)
    return m, IntervalSet(tuple(intervals))


def argmin_set(f: PwlFunction, sub_domain=None, tol: float | None = None):
    """Minimum analogue of argmax_set."""
    m, aset = argmax_set(f.negate(), sub_domain=sub_domain, tol=tol)
    return -m, aset
