"""File ingestion and report emission.

Price files are CSV with a header and two columns: a strictly increasing
time column ("period" as 1,2,3,... or "timestamp" as ISO-8601 at the
configured resolution) and a "price" column. The declared unit decides
whether values are divided by 1000 on load (per-MWh quotes become the
internal per-kWh convention).

Run configuration is flat key = value text with units spelled out in the
key names, which keeps the kWh/MWh ambiguity out of the package entirely.

All numeric emission goes through a single 12-significant-digit formatter
and no file carries a timestamp, so identical inputs produce byte-identical
outputs.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

from .core import PriceSeries, StorageSpec
from .errors import InputError
from .horizon import HorizonReport

PER_KWH = "per_kwh"
PER_MWH = "per_mwh"

# Default global price bounds: the Nordic day-ahead floor and cap, quoted
# per MWh and converted on use.
DEFAULT_FLOOR_PER_MWH = -500.0
DEFAULT_CAP_PER_MWH = 4000.0


def fmt(x) -> str:
    """Canonical numeric formatting for emitted files: 12 significant digits."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    return f"{x:.12g}"


def load_prices(path, declared_unit: str = PER_KWH, dt: float = 1.0,
                price_floor: float | None = None,
                price_cap: float | None = None) -> PriceSeries:
    """Read a price CSV into a PriceSeries (internal per-kWh units).

    Bounds default to the Nordic day-ahead floor/cap. Malformed rows,
    non-increasing time values and gaps at the declared resolution are
    reported with their line number or timestamp.
    """
    if declared_unit not in (PER_KWH, PER_MWH):
        raise InputError(f"declared_unit must be {PER_KWH!r} or {PER_MWH!r}, "
                         f"got {declared_unit!r}")
    scale = 1e-3 if declared_unit == PER_MWH else 1.0
    floor = (DEFAULT_FLOOR_PER_MWH / 1000.0) if price_floor is None else price_floor
    cap = (DEFAULT_CAP_PER_MWH / 1000.0) if price_cap is None else price_cap

    path = Path(path)
    if not path.exists():
        raise InputError(f"price file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        header = [h.strip().lower() for h in header]
        if len(header) != 2 or header[1] != "price":
            raise InputError(f"{path}:1: header must be 'period,price' or "
                             f"'timestamp,price', got {','.join(header)}")
        time_kind = header[0]
        if time_kind not in ("period", "t", "timestamp"):
            raise InputError(f"{path}:1: unknown time column {time_kind!r}")

        values = []
        prev_period = 0
        prev_stamp = None
        step = timedelta(hours=dt)
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise InputError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            tcell, pcell = row[0].strip(), row[1].strip()
            try:
                price = float(pcell)
            except ValueError:
                raise InputError(f"{path}:{lineno}: malformed price {pcell!r}") from None
            if time_kind in ("period", "t"):
                try:
                    period = int(tcell)
                except ValueError:
                    raise InputError(f"{path}:{lineno}: malformed period {tcell!r}") from None
                if period != prev_period + 1:
                    raise InputError(
                        f"{path}:{lineno}: period {period} after {prev_period}; "
                        f"periods must increase by 1 with no gaps"
                    )
                prev_period = period
            else:
                try:
                    stamp = datetime.fromisoformat(tcell)
                except ValueError:
                    raise InputError(f"{path}:{lineno}: malformed timestamp {tcell!r}") from None
                if prev_stamp is not None and stamp != prev_stamp + step:
                    raise InputError(
                        f"{path}:{lineno}: timestamp {tcell} does not follow "
                        f"{prev_stamp.isoformat()} at {dt} h resolution (gap or disorder)"
                    )
                prev_stamp = stamp
            values.append(price * scale)
    if not values:
        raise InputError(f"{path}: no data rows")
    return PriceSeries(tuple(values), price_floor=floor, price_cap=cap)


@dataclass(frozen=True)
class RunConfig:
    """Everything a CLI run needs, validated field by field."""

    spec: StorageSpec
    h_periods: int | None
    t_max_periods: int | None
    t_plan_periods: int | None
    price_floor: float       # per kWh
    price_cap: float         # per kWh
    price_unit: str          # unit of the price FILE
    strategy: str | None
    final_target_kwh: float
    out_dir: str | None


_REQUIRED_KEYS = ("s_min_kwh", "s_max_kwh", "p_ch_max_kw", "p_dis_max_kw",
                  "eta_ch", "eta_dis", "rho", "s_init_kwh")
_OPTIONAL_FLOAT = {"dt_h": 1.0, "price_floor_per_mwh": DEFAULT_FLOOR_PER_MWH,
                   "price_cap_per_mwh": DEFAULT_CAP_PER_MWH, "final_target_kwh": None}
_OPTIONAL_INT = ("h_periods", "t_max_periods", "t_plan_periods")
_OPTIONAL_STR = ("strategy", "out_dir", "price_unit")


def load_config(path) -> RunConfig:
    """Parse a flat key = value config file with '#' comments."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    raw = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise InputError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key in raw:
            raise InputError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = (value, lineno)

    def take_float(key, default=None, required=False):
        if key not in raw:
            if required:
                raise InputError(f"{path}: missing required key {key!r}")
            return default
        value, lineno = raw.pop(key)
        try:
            return float(value)
        except ValueError:
            raise InputError(f"{path}:{lineno}: {key} must be a number, got {value!r}") from None

    def take_int(key):
        if key not in raw:
            return None
        value, lineno = raw.pop(key)
        try:
            return int(value)
        except ValueError:
            raise InputError(f"{path}:{lineno}: {key} must be an integer, got {value!r}") from None

    def take_str(key):
        if key not in raw:
            return None
        value, _ = raw.pop(key)
        return value

    fields = {key: take_float(key, required=True) for key in _REQUIRED_KEYS}
    dt_h = take_float("dt_h", _OPTIONAL_FLOAT["dt_h"])
    floor_mwh = take_float("price_floor_per_mwh", _OPTIONAL_FLOAT["price_floor_per_mwh"])
    cap_mwh = take_float("price_cap_per_mwh", _OPTIONAL_FLOAT["price_cap_per_mwh"])
    final_target = take_float("final_target_kwh", None)
    h_periods = take_int("h_periods")
    t_max = take_int("t_max_periods")
    t_plan = take_int("t_plan_periods")
    strategy = take_str("strategy")
    out_dir = take_str("out_dir")
    price_unit = take_str("price_unit") or PER_KWH
    if price_unit not in (PER_KWH, PER_MWH):
        raise InputError(f"{path}: price_unit must be {PER_KWH!r} or {PER_MWH!r}, "
                         f"got {price_unit!r}")
    if raw:
        leftover = ", ".join(sorted(raw))
        raise InputError(f"{path}: unknown keys: {leftover}")

    try:
        spec = StorageSpec(
            s_min=fields["s_min_kwh"], s_max=fields["s_max_kwh"],
            p_ch_max=fields["p_ch_max_kw"], p_dis_max=fields["p_dis_max_kw"],
            eta_ch=fields["eta_ch"], eta_dis=fields["eta_dis"],
            rho=fields["rho"], s_init=fields["s_init_kwh"], dt=dt_h,
        )
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None
    if h_periods is not None and h_periods < 1:
        raise InputError(f"{path}: h_periods must be >= 1, got {h_periods}")
    if t_max is not None and h_periods is not None and t_max < h_periods:
        raise InputError(f"{path}: t_max_periods ({t_max}) must be >= h_periods ({h_periods})")
    return RunConfig(
        spec=spec,
        h_periods=h_periods,
        t_max_periods=t_max,
        t_plan_periods=t_plan,
        price_floor=floor_mwh / 1000.0,
        price_cap=cap_mwh / 1000.0,
        price_unit=price_unit,
        strategy=strategy,
        final_target_kwh=spec.s_init if final_target is None else final_target,
        out_dir=out_dir,
    )


def write_csv(path, header, rows):
    """Deterministic CSV: LF newlines, 12-significant-digit numerics."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else fmt(cell) for cell in row])


def write_json(path, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, allow_nan=False) + "\n")


def schedule_rows(spec, prices, schedule):
    for t in range(1, len(schedule) + 1):
        yield (t, prices.at(t), schedule.p_ch[t - 1], schedule.p_dis[t - 1],
               schedule.soe[t - 1])


SCHEDULE_HEADER = ("period", "price_per_kwh", "p_ch_kw", "p_dis_kw", "soe_kwh")


def report_csv_row(report: HorizonReport):
    return (report.H, report.T, report.is_forecast_horizon, report.gap,
            report.s_low_H, report.s_high_H, report.t_min, report.subopt_bound)


REPORT_HEADER = ("H", "T", "is_forecast_horizon", "gap", "s_low_H", "s_high_H",
                 "t_min", "subopt_bound")
