"""Command-line surface.

Subcommands:
  solve   fixed- or free-terminal schedule over a price window
  bounds  reachable state bounds for T = 1..T_max
  tmin    parameter-only lower bound on the minimum forecast horizon
  check   forecast-horizon test for one planning-horizon length
  minfh   minimum-forecast-horizon search (with per-day CSV on request)
  bound   suboptimality bound for a too-short horizon
  roll    rolling-horizon strategy simulation and comparison
  fleet   per-day binding minimum horizon for several storage systems

Exit codes: 0 success, 1 infeasible problem, 2 input error, 3 internal
error. All file output is deterministic: identical inputs give
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import fileio, pwl
from .errors import InfeasibleError, InputError, InternalError, StorkitError
from .horizon import (MAX_PROFIT, MIN_BOUND, check_forecast_horizon, horizon_sweep,
                      min_forecast_horizon, reachable_bounds, suboptimality_bound, tmin)
from .rolling import (FIXED_HORIZON, FIXED_LEVEL, FORECAST_HORIZON, Strategy, compare,
                      run_strategy)
from .solver import forward_values, recover_schedule, solve_fixed_terminal


def _load(args):
    cfg = fileio.load_config(args.config)
    prices = None
    if getattr(args, "prices", None):
        prices = fileio.load_prices(args.prices, declared_unit=cfg.price_unit,
                                    dt=cfg.spec.dt, price_floor=cfg.price_floor,
                                    price_cap=cfg.price_cap)
    return cfg, prices


def _out_dir(args, cfg) -> Path:
    out = getattr(args, "out", None) or cfg.out_dir or "out"
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit_report(args, cfg, report, name: str):
    out = _out_dir(args, cfg)
    if args.format == "csv":
        fileio.write_csv(out / f"{name}.csv", fileio.REPORT_HEADER,
                         [fileio.report_csv_row(report)])
    else:
        fileio.write_json(out / f"{name}.json", report.to_dict())
    print(json.dumps(report.to_dict()))


def _need(args, cfg, attr, flag, key):
    value = getattr(args, attr, None)
    if value is None:
        value = getattr(cfg, key)
    if value is None:
        raise InputError(f"{flag} required (or set {key} in the config)")
    return value


def cmd_solve(args):
    cfg, prices = _load(args)
    spec = cfg.spec
    T = args.t if args.t is not None else len(prices)
    if T < 1 or T > len(prices):
        raise InputError(f"--t ({T}) outside 1..{len(prices)}")
    window = prices.window(1, T)
    if args.s_end is not None:
        result = solve_fixed_terminal(spec, window, T, args.s_end)
        schedule, profit = result.schedule, result.profit
        terminal_kind = "fixed"
    else:
        profile = forward_values(spec, window, T)
        _, argmax = pwl.argmax_set(profile.at(T))
        target = argmax.lowest()
        schedule = recover_schedule(spec, window, profile, target, T)
        profit = pwl.evaluate(profile.at(T), target)
        terminal_kind = "free"
    out = _out_dir(args, cfg)
    fileio.write_csv(out / "schedule.csv", fileio.SCHEDULE_HEADER,
                     fileio.schedule_rows(spec, window, schedule))
    summary = {
        "terminal": terminal_kind,
        "T": T,
        "profit": profit,
        "terminal_soe": schedule.soe[-1],
        "schedule_file": "schedule.csv",
    }
    fileio.write_json(out / "solve.json", summary)
    print(json.dumps(summary))
    return 0


def cmd_bounds(args):
    cfg, _ = _load(args)
    rows = []
    for T in range(1, args.t_max + 1):
        rb = reachable_bounds(cfg.spec, T)
        rows.append((T, rb.s_low_T, rb.s_high_T))
    out = _out_dir(args, cfg)
    fileio.write_csv(out / "bounds.csv", ("T", "s_low_T", "s_high_T"), rows)
    print(json.dumps({"rows": len(rows), "file": "bounds.csv"}))
    return 0


def cmd_tmin(args):
    cfg, _ = _load(args)
    H = _need(args, cfg, "h", "--h", "h_periods")
    cap = args.cap if args.cap is not None else (cfg.t_max_periods or 10000)
    result = tmin(cfg.spec, H, cap=cap)
    payload = {"H": H, "cap": cap, "t_min": result.value, "found": result.found}
    print(json.dumps(payload))
    return 0


def cmd_check(args):
    cfg, prices = _load(args)
    H = _need(args, cfg, "h", "--h", "h_periods")
    report = check_forecast_horizon(cfg.spec, prices, H, args.t)
    _emit_report(args, cfg, report, f"check_T{args.t}")
    return 0


def cmd_minfh(args):
    cfg, prices = _load(args)
    H = _need(args, cfg, "h", "--h", "h_periods")
    t_max = args.t_max if args.t_max is not None else (cfg.t_max_periods or len(prices))
    t_max = min(t_max, len(prices))
    report = min_forecast_horizon(cfg.spec, prices, H, t_max, s_h_policy=args.sh_policy)
    _emit_report(args, cfg, report, "minfh")
    if args.sweep:
        reports = horizon_sweep(cfg.spec, prices, H, H, t_max, s_h_policy=args.sh_policy)
        out = _out_dir(args, cfg)
        fileio.write_csv(out / "minfh_sweep.csv", fileio.REPORT_HEADER,
                         [fileio.report_csv_row(r) for r in reports])
    if args.per_day:
        strategy = Strategy.forecast_horizon(H, cfg.final_target_kwh, t_max=t_max)
        sim = run_strategy(cfg.spec, prices, strategy)
        rows = [(day, day * H + 1, hor, "" if found is None else fmt_bool(found))
                for day, (hor, found) in enumerate(zip(sim.per_day_horizons,
                                                       sim.per_day_found))]
        out = _out_dir(args, cfg)
        fileio.write_csv(out / "minfh_per_day.csv",
                         ("day", "start_period", "horizon_periods", "found"), rows)
    return 0


def fmt_bool(b) -> str:
    return "true" if b else "false"


def cmd_bound(args):
    cfg, prices = _load(args)
    H = _need(args, cfg, "h", "--h", "h_periods")
    report = check_forecast_horizon(cfg.spec, prices, H, args.t)
    bound, s_sel = suboptimality_bound(cfg.spec, prices, H, args.t,
                                       s_h_choice=args.sh_policy, report=report)
    z_opt, _ = pwl.argmax_set(
        forward_values(cfg.spec, prices, H).at(H),
        sub_domain=(report.s_low_H, report.s_high_H))
    payload = {
        "H": H,
        "T": args.t,
        "policy": args.sh_policy,
        "bound": bound,
        "s_H": s_sel,
        "s_low_H": report.s_low_H,
        "s_high_H": report.s_high_H,
        "gap": report.gap,
        "is_forecast_horizon": report.is_forecast_horizon,
        "day_profit": z_opt,
        # percentage uses the decision-horizon optimum as the divisor
        "bound_pct_of_day_profit": (100.0 * bound / abs(z_opt)) if z_opt else None,
    }
    out = _out_dir(args, cfg)
    fileio.write_json(out / "bound.json", payload)
    print(json.dumps(payload))
    return 0


_STRATEGY_CHOICES = (FIXED_LEVEL, FIXED_HORIZON, FORECAST_HORIZON, "all")


def _build_strategies(args, cfg, prices):
    H = _need(args, cfg, "h", "--h", "h_periods")
    target = cfg.final_target_kwh
    t_plan = args.t_plan if args.t_plan is not None else (cfg.t_plan_periods or 2 * H)
    t_max = args.t_max if args.t_max is not None else cfg.t_max_periods
    chosen = args.strategy or cfg.strategy or "all"
    if chosen not in _STRATEGY_CHOICES:
        raise InputError(f"--strategy must be one of {_STRATEGY_CHOICES}, got {chosen!r}")
    if chosen == "all":
        kinds = (FIXED_LEVEL, FIXED_HORIZON, FORECAST_HORIZON)
    else:
        kinds = (chosen,)
    strategies = []
    for kind in kinds:
        if kind == FIXED_LEVEL:
            strategies.append(Strategy.fixed_level(H, target))
        elif kind == FIXED_HORIZON:
            strategies.append(Strategy.fixed_horizon(H, t_plan, target,
                                                     free_terminal=args.free_terminal))
        else:
            strategies.append(Strategy.forecast_horizon(H, target, t_max=t_max))
    return strategies


def cmd_roll(args):
    cfg, prices = _load(args)
    strategies = _build_strategies(args, cfg, prices)
    out = _out_dir(args, cfg)
    results = []
    for strategy in strategies:
        sim = run_strategy(cfg.spec, prices, strategy)
        results.append(sim)
        label = strategy.label()
        fileio.write_csv(out / f"trajectory_{label}.csv", fileio.SCHEDULE_HEADER,
                         fileio.schedule_rows(cfg.spec, prices, sim.schedule))
        if sim.per_day_horizons is not None:
            rows = [(day, day * strategy.H + 1, hor,
                     "" if found is None else fmt_bool(found))
                    for day, (hor, found) in enumerate(zip(sim.per_day_horizons,
                                                           sim.per_day_found))]
            fileio.write_csv(out / f"horizons_{label}.csv",
                             ("day", "start_period", "horizon_periods", "found"), rows)
    table = compare(results)
    fileio.write_csv(out / "comparison.csv",
                     ("strategy", "total_profit", "loss_vs_best_pct", "storage_use", "best"),
                     [(r.label, r.total_profit, r.loss_vs_best_pct, r.storage_use,
                       fmt_bool(r.best)) for r in table.rows])
    summary = {
        "strategies": [r.label for r in table.rows],
        "profits": [r.total_profit for r in table.rows],
        "best": table.best_label(),
    }
    fileio.write_json(out / "roll.json", summary)
    print(json.dumps(summary))
    return 0


def cmd_fleet(args):
    if not args.config:
        raise InputError("fleet needs at least one --config")
    cfgs = [fileio.load_config(path) for path in args.config]
    base = cfgs[0]
    prices = fileio.load_prices(args.prices, declared_unit=base.price_unit,
                                dt=base.spec.dt, price_floor=base.price_floor,
                                price_cap=base.price_cap)
    H = args.h if args.h is not None else base.h_periods
    if H is None:
        raise InputError("--h required (or set h_periods in the first config)")
    t_max = args.t_max if args.t_max is not None else (base.t_max_periods or len(prices))
    names = [Path(p).stem for p in args.config]

    sims = []
    for cfg in cfgs:
        strategy = Strategy.forecast_horizon(H, cfg.final_target_kwh,
                                             t_max=min(t_max, len(prices)))
        sims.append(run_strategy(cfg.spec, prices, strategy))

    days = len(prices) // H
    rows = []
    binding_seq = []
    for day in range(days):
        horizons = [sim.per_day_horizons[day] for sim in sims]
        founds = [sim.per_day_found[day] for sim in sims]
        # an exhausted search binds outright; otherwise the longest horizon does
        keys = [(found is False, hor) for hor, found in zip(horizons, founds)]
        binding = max(range(len(sims)), key=lambda i: keys[i])
        fleet_h = max(horizons)
        binding_seq.append(names[binding])
        rows.append((day, day * H + 1, *horizons, fleet_h, names[binding]))
    out = _out_dir(args, base)
    header = ("day", "start_period", *[f"horizon_{n}" for n in names],
              "fleet_horizon", "binding_system")
    fileio.write_csv(out / "fleet_horizons.csv", header, rows)
    payload = {"systems": names, "days": days,
               "binding_counts": {n: binding_seq.count(n) for n in sorted(set(binding_seq))},
               "file": "fleet_horizons.csv"}
    fileio.write_json(out / "fleet.json", payload)
    print(json.dumps(payload))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storkit",
        description="Exact storage scheduling and forecast-horizon analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, prices=True):
        p.add_argument("--config", required=True, help="flat key=value config file")
        if prices:
            p.add_argument("--prices", required=True, help="price CSV")
        p.add_argument("--out", help="output directory (default: config out_dir or ./out)")
        p.add_argument("--format", choices=("csv", "json"), default="json",
                       help="report file format")

    p = sub.add_parser("solve", help="schedule one window")
    common(p)
    p.add_argument("--t", type=int, help="window length (default: all prices)")
    p.add_argument("--s-end", type=float, dest="s_end",
                   help="pin the terminal state (omit for a free terminal)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bounds", help="reachable state bounds per horizon length")
    common(p, prices=False)
    p.add_argument("--t-max", type=int, required=True, dest="t_max")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("tmin", help="parameter-only lower bound on the minimum forecast horizon")
    common(p, prices=False)
    p.add_argument("--h", type=int, help="decision horizon")
    p.add_argument("--cap", type=int, help="search cap")
    p.set_defaults(func=cmd_tmin)

    p = sub.add_parser("check", help="forecast-horizon test at one T")
    common(p)
    p.add_argument("--h", type=int, help="decision horizon")
    p.add_argument("--t", type=int, required=True, help="planning horizon to test")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("minfh", help="minimum forecast horizon search")
    common(p)
    p.add_argument("--h", type=int, help="decision horizon")
    p.add_argument("--t-max", type=int, dest="t_max", help="search cap")
    p.add_argument("--sh-policy", choices=(MAX_PROFIT, MIN_BOUND), default=MIN_BOUND,
                   dest="sh_policy", help="bound policy when the cap is exhausted")
    p.add_argument("--per-day", action="store_true", dest="per_day",
                   help="also emit a per-day horizon CSV over the whole price window")
    p.add_argument("--sweep", action="store_true",
                   help="also emit a one-row-per-T CSV of gap and bound up to the cap")
    p.set_defaults(func=cmd_minfh)

    p = sub.add_parser("bound", help="suboptimality bound for a too-short horizon")
    common(p)
    p.add_argument("--h", type=int, help="decision horizon")
    p.add_argument("--t", type=int, required=True, help="planning horizon")
    p.add_argument("--sh-policy", choices=(MAX_PROFIT, MIN_BOUND), default=MIN_BOUND,
                   dest="sh_policy")
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("roll", help="rolling-horizon strategy simulation")
    common(p)
    p.add_argument("--h", type=int, help="decision horizon")
    p.add_argument("--strategy", choices=_STRATEGY_CHOICES,
                   help="strategy to run (default: config strategy or all)")
    p.add_argument("--t-plan", type=int, dest="t_plan", help="fixed_horizon window length")
    p.add_argument("--t-max", type=int, dest="t_max", help="forecast_horizon search cap")
    p.add_argument("--free-terminal", action="store_true", dest="free_terminal",
                   help="leave the fixed_horizon window terminal free instead of "
                        "returning it to the window's starting level")
    p.set_defaults(func=cmd_roll)

    p = sub.add_parser("fleet", help="per-day binding horizon for several systems")
    p.add_argument("--config", action="append", required=True,
                   help="one per storage system (repeatable)")
    p.add_argument("--prices", required=True)
    p.add_argument("--h", type=int, help="decision horizon")
    p.add_argument("--t-max", type=int, dest="t_max")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=cmd_fleet)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InternalError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 3
    except StorkitError as exc:  # pragma: no cover - defensive catch-all
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
