"""Command-line front end.

Exit codes: 0 success, 2 input error, 3 infeasible optimisation epoch,
1 internal failure (e.g. a DP/oracle mismatch). CSV and JSON outputs carry
full-precision values; the console tables are rounded for reading.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
from pathlib import Path

from . import config, feasibility, geometry, handover, linkbudget, optimizer, splits
from .errors import ConfigError, DomainError, InfeasibleEpochError, InfeasibleGeometryError

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3

SWEEP_KINDS = ("delay_vs_elevation", "capacity_vs_band", "dus_vs_split")


def _gbps(bps: float) -> str:
    return f"{bps / 1e9:g}"


def _table(headers, rows) -> str:
    cells = [list(map(str, headers))] + [[str(c) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)


def _markdown_table(headers, rows) -> str:
    out = ["| " + " | ".join(map(str, headers)) + " |",
           "|" + "|".join("---" for _ in headers) + "|"]
    out += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(out)


def _csv_text(headers, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(headers)
    for row in rows:
        writer.writerow(["" if v is None else repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _write(path: str, text: str) -> None:
    Path(path).write_text(text, encoding="utf-8")


# -- catalog ----------------------------------------------------------------

def catalog_rows(options):
    return [
        (o.id, o.name, f"{o.latency_limit_s * 1e3:g} ms" if o.latency_limit_s >= 1e-3
         else f"{o.latency_limit_s * 1e6:g} us",
         f"{_gbps(o.dl_rate_bps)}/{_gbps(o.ul_rate_bps)} Gbps", o.rate_model,
         "yes" if o.harq_bound else "no", "published" if o.published else "fixture")
        for o in options
    ]


CATALOG_HEADERS = ("split", "name", "latency", "DL/UL rate", "rate model", "HARQ", "source")


def cmd_catalog(args) -> int:
    sf = config.load(args.scenario)
    options = sf.scenario.catalog
    if args.csv:
        rows = [(o.id, o.name, o.latency_limit_s, o.dl_rate_bps, o.ul_rate_bps, o.rate_model,
                 o.harq_bound, o.published) for o in options]
        text = _csv_text(("split", "name", "latency_limit_s", "dl_rate_bps", "ul_rate_bps",
                          "rate_model", "harq_bound", "published"), rows)
        _write(args.csv, text)
    print(_table(CATALOG_HEADERS, catalog_rows(options)))
    return EXIT_OK


# -- analyze ----------------------------------------------------------------

VERDICT_HEADERS = ("split", "limit [ms]", "feeder delay [ms]", "margin [ms]", "latency",
                   "max DUs", "DUs needed", "capacity", "binding", "feasible")


def verdict_rows(verdicts):
    return [
        (v.split_id, f"{v.latency_limit_s * 1e3:.3f}", f"{v.feeder_delay_s * 1e3:.3f}",
         f"{v.latency_margin_s * 1e3:.3f}", "ok" if v.latency_ok else "FAIL",
         "unlimited" if v.max_dus is None else v.max_dus, v.dus_needed,
         "ok" if v.capacity_ok else "FAIL", v.binding_constraint, "yes" if v.feasible else "no")
        for v in verdicts
    ]


def _scenario_summary(sc: feasibility.Scenario) -> list[str]:
    return [
        f"orbit altitude {sc.orbit.altitude_km:g} km, gateway min elevation "
        f"{sc.gateway.min_elevation_deg:g} deg",
        f"band {sc.band.name} ({sc.band.carrier_ghz:g} GHz, {sc.band.bandwidth_hz / 1e9:g} GHz), "
        f"ModCod {sc.modcod.name}, feeder capacity {_gbps(sc.feeder_capacity_bps)} Gbps",
        f"HARQ processes {sc.harq.n_processes} (feedback "
        f"{'on' if sc.harq.feedback_enabled else 'off'}), beams {sc.n_satellite_beams}, "
        f"traffic load {sc.traffic_load:g}",
    ]


def cmd_analyze(args) -> int:
    sf = config.load(args.scenario)
    sc = sf.scenario
    verdicts = feasibility.assess(sc)
    for line in _scenario_summary(sc):
        print(line)
    print(f"worst feeder delay {feasibility.worst_feeder_delay(sc) * 1e3:.4f} ms")
    if verdicts and verdicts[0].user_link_delay_s is not None:
        print(f"worst user-link delay {verdicts[0].user_link_delay_s * 1e3:.4f} ms (informative)")
    print()
    print(_table(VERDICT_HEADERS, verdict_rows(verdicts)))
    feasible = [v.split_id for v in verdicts if v.feasible]
    print(f"\nfeasible splits: {', '.join(feasible) if feasible else 'none'}")
    records = [dataclasses.asdict(v) for v in verdicts]
    if args.json:
        _write(args.json, json.dumps(records, indent=2))
    if args.csv:
        headers = list(records[0]) if records else []
        _write(args.csv, _csv_text(headers, [list(r.values()) for r in records]))
    if args.report:
        crossover = []
        for opt in sc.catalog:
            x = feasibility.crossover_elevation(opt, sc)
            crossover.append((opt.id, "never" if x is None else f"{x:.2f}"))
        lines = ["# Functional-split feasibility report", ""]
        lines += [f"- {s}" for s in _scenario_summary(sc)]
        lines += ["", "## Verdicts", "", _markdown_table(VERDICT_HEADERS, verdict_rows(verdicts)),
                  "", "## Minimum gateway elevation meeting each latency budget", "",
                  _markdown_table(("split", "elevation [deg]"), crossover), ""]
        _write(args.report, "\n".join(lines))
    return EXIT_OK


# -- sweep ------------------------------------------------------------------

def grid(lo: float, hi: float, step: float) -> list[float]:
    """Inclusive grid ``lo, lo+step, ...``; a step wider than the range gives ``[lo]``."""
    if not (lo < hi and step > 0):
        raise ConfigError(f"invalid grid: need min < max and step > 0 (got {lo}, {hi}, {step})")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return [lo + i * step for i in range(n)]


def sweep_delay_vs_elevation(sc: feasibility.Scenario, elevations):
    headers = ("elevation_deg", "slant_range_km", "feeder_delay_s", "user_link_worst_delay_s")
    rows = []
    for e in elevations:
        d = geometry.slant_range(sc.orbit.altitude_km, e, sc.orbit.earth_radius_km)
        try:
            user = geometry.user_link_worst_delay(sc.orbit, e, sc.beam_diameter_km,
                                                  sc.user_site.min_elevation_deg)
        except (DomainError, InfeasibleGeometryError):
            user = None
        rows.append((e, d, geometry.propagation_delay(d), user))
    return headers, rows


def sweep_capacity_vs_band(sc: feasibility.Scenario):
    headers = ("band", "carrier_ghz", "bandwidth_hz", "modcod", "spectral_efficiency_bps_hz",
               "capacity_bps", "distance_km", "fspl_db", "required_cn0_dbhz", "required_ptx_dbw")
    distance = geometry.slant_range(sc.orbit.altitude_km, sc.gateway.min_elevation_deg,
                                    sc.orbit.earth_radius_km)
    rows = []
    for band in linkbudget.DEFAULT_BANDS:
        res = linkbudget.budget(band, sc.modcod, distance)
        rows.append((band.name, band.carrier_ghz, band.bandwidth_hz, sc.modcod.name,
                     sc.modcod.spectral_efficiency_bps_hz, res.capacity_bps, distance,
                     res.fspl_db, res.required_cn0_dbhz, res.required_ptx_dbw))
    return headers, rows


def sweep_dus_vs_split(sc: feasibility.Scenario, loads):
    headers = ("traffic_load", "split", "dl_rate_bps", "ul_rate_bps", "per_du_rate_bps",
               "feeder_capacity_bps", "max_dus", "dus_needed", "capacity_ok")
    capacity = sc.feeder_capacity_bps
    needed = feasibility.dus_needed(sc.n_satellite_beams)
    rows = []
    for load in loads:
        for opt in sc.catalog:
            dl, ul = splits.required_fronthaul_rate(opt, sc.cell, load)
            fit = feasibility.max_dus(opt, sc.cell, load, capacity, sc.duplexing)
            rows.append((load, opt.id, dl, ul, splits.per_du_rate(opt, sc.cell, load, sc.duplexing),
                         capacity, fit, needed, fit is None or fit >= needed))
    return headers, rows


def cmd_sweep(args) -> int:
    sf = config.load(args.scenario)
    sc = sf.scenario
    if args.kind == "delay_vs_elevation":
        lo = 10.0 if args.min is None else args.min
        hi = 90.0 if args.max is None else args.max
        step = 10.0 if args.step is None else args.step
        headers, rows = sweep_delay_vs_elevation(sc, grid(lo, hi, step))
    elif args.kind == "capacity_vs_band":
        headers, rows = sweep_capacity_vs_band(sc)
    else:
        if args.min is None and args.max is None and args.step is None:
            loads = [sc.traffic_load]
        else:
            loads = grid(0.0 if args.min is None else args.min,
                         1.0 if args.max is None else args.max,
                         0.25 if args.step is None else args.step)
            if any(not 0.0 <= x <= 1.0 for x in loads):
                raise ConfigError("traffic load grid must stay within [0, 1]")
        headers, rows = sweep_dus_vs_split(sc, loads)
    text = _csv_text(headers, rows)
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    sf = config.load(args.scenario)
    sim = sf.simulation
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.duration is not None:
        changes["duration_s"] = args.duration
    if args.predictor is not None:
        changes["predictor"] = dataclasses.replace(sim.predictor, kind=args.predictor)
    sim = dataclasses.replace(sim, **changes)
    result = handover.run(sim)
    m = result.metrics
    if m.delivered + m.late + m.lost != m.emitted:
        print("conservation violated", file=sys.stderr)
        return EXIT_INTERNAL
    summary = m.as_dict()
    summary["predictor"] = sim.predictor.kind
    summary["seed"] = sim.seed
    for key, val in summary.items():
        print(f"{key}: {val!r}" if isinstance(val, float) else f"{key}: {val}")
    print("conservation: OK")
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            handover.write_trace_csv(result.trace, fh)
    if args.json:
        _write(args.json, json.dumps(summary, indent=2))
    if args.report:
        rows = [(h.du, f"{h.time_s:.4f}", h.kind, ">".join(h.old_route), ">".join(h.new_route))
                for h in result.handovers]
        lines = ["# F1 delivery simulation report", "",
                 _markdown_table(("metric", "value"), summary.items()), "", "## Handovers", "",
                 _markdown_table(("DU", "time [s]", "kind", "from", "to"), rows), ""]
        _write(args.report, "\n".join(lines))
    return EXIT_OK


# -- optimize ---------------------------------------------------------------

PLAN_HEADERS = ("epoch", "t_s", "split", "power_w", "cumulative_energy_j")


def plan_rows(plan: optimizer.Plan, epochs, switch_cost_j: float):
    rows, total = [], 0.0
    for i, (sid, p) in enumerate(zip(plan.splits, plan.powers_w)):
        total += p * plan.epoch_s
        if i and plan.objective == optimizer.MIN_ENERGY and sid != plan.splits[i - 1]:
            total += switch_cost_j
        rows.append((i, epochs[i].t, sid, p, total))
    return rows


def cmd_optimize(args) -> int:
    sf = config.load(args.scenario)
    settings = sf.optimize
    changes = {}
    if args.horizon is not None:
        changes["horizon_s"] = args.horizon
    if args.epoch is not None:
        changes["epoch_s"] = args.epoch
    if args.objective is not None:
        changes["objective"] = args.objective
    if args.switch_cost is not None:
        changes["switch_cost_j"] = args.switch_cost
    settings = dataclasses.replace(settings, **changes)
    sc = sf.scenario
    epochs = optimizer.epochs_from_scenario(sc, settings)
    n_dus = settings.n_dus or feasibility.dus_needed(sc.n_satellite_beams)
    ctx = optimizer.SplitContext(catalog=sc.catalog, harq=sc.harq, cell=sc.cell,
                                 power_model=sf.power_model, n_dus=n_dus, duplexing=sc.duplexing)
    if args.oracle and len(epochs) > 8:
        raise ConfigError(f"--oracle supports at most 8 epochs, horizon has {len(epochs)}")
    plan = optimizer.optimize(epochs, ctx, settings.switch_cost_j, settings.objective,
                              settings.epoch_s)
    rows = plan_rows(plan, epochs, settings.switch_cost_j)
    print(_table(PLAN_HEADERS + ("eclipse",),
                 [(i, f"{t:g}", s, f"{p:.2f}", f"{e:.1f}", "yes" if epochs[i].in_eclipse else "")
                  for (i, t, s, p, e) in rows]))
    print(f"\nobjective: {plan.objective}")
    print(f"objective value: {plan.objective_value!r}")
    print(f"total energy [J]: {plan.total_energy_j!r}")
    print(f"switches: {plan.switch_count}")
    if args.csv:
        _write(args.csv, _csv_text(PLAN_HEADERS, rows))
    if args.json:
        _write(args.json, json.dumps(dataclasses.asdict(plan), indent=2))
    status = EXIT_OK
    if args.oracle:
        best, _ = optimizer.brute_force(epochs, ctx, settings.switch_cost_j, settings.objective,
                                        settings.epoch_s)
        if math.isclose(best, plan.objective_value, rel_tol=1e-9, abs_tol=1e-9):
            print("oracle: MATCH")
        else:
            print(f"oracle: MISMATCH (dp {plan.objective_value!r}, enumeration {best!r})")
            status = EXIT_INTERNAL
    if args.report:
        lines = ["# Dynamic split plan", "",
                 f"- objective: {plan.objective}", f"- total energy: {plan.total_energy_j:.1f} J",
                 f"- switches: {plan.switch_count}", "",
                 _markdown_table(PLAN_HEADERS, [(i, f"{t:g}", s, f"{p:.2f}", f"{e:.1f}")
                                                for (i, t, s, p, e) in rows]), ""]
        _write(args.report, "\n".join(lines))
    return status


# -- entry point ------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ntnsplit",
        description="RAN functional-split planning over LEO feeder links.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_arg(p):
        p.add_argument("scenario", nargs="?", default=None,
                       help=f"scenario YAML (default: ${config.CONFIG_DIR_ENV}/"
                            f"{config.DEFAULT_FILENAME} or built-in defaults)")

    p = sub.add_parser("catalog", help="print the split catalog with active overrides")
    scenario_arg(p)
    p.add_argument("--csv", help="also write the catalog as CSV")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("analyze", help="per-split feasibility verdicts for a scenario")
    scenario_arg(p)
    p.add_argument("--json", help="write verdict records as JSON")
    p.add_argument("--csv", help="write verdict records as CSV")
    p.add_argument("--report", help="write a markdown report")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("sweep", help="plot-ready CSV sweeps")
    p.add_argument("kind", choices=SWEEP_KINDS)
    scenario_arg(p)
    p.add_argument("--min", type=float, help="grid start")
    p.add_argument("--max", type=float, help="grid end (inclusive when on the grid)")
    p.add_argument("--step", type=float, help="grid step")
    p.add_argument("-o", "--output", help="CSV file (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", help="F1 PDU delivery across gateway handovers")
    scenario_arg(p)
    p.add_argument("--predictor", choices=(handover.NO_PREDICTOR, handover.PERFECT))
    p.add_argument("--seed", type=int)
    p.add_argument("--duration", type=float, help="override simulation.duration_s")
    p.add_argument("--trace", help="write the PDU trace as CSV")
    p.add_argument("--json", help="write the metrics summary as JSON")
    p.add_argument("--report", help="write a markdown report")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", help="energy-optimal dynamic split plan")
    scenario_arg(p)
    p.add_argument("--horizon", type=float, help="override optimize.horizon_s")
    p.add_argument("--epoch", type=float, help="override optimize.epoch_s")
    p.add_argument("--objective", choices=(optimizer.MIN_ENERGY, optimizer.MAX_FEEDER))
    p.add_argument("--switch-cost", type=float, help="override optimize.switch_cost_j")
    p.add_argument("--oracle", action="store_true",
                   help="cross-check the DP against exhaustive enumeration (<= 8 epochs)")
    p.add_argument("--csv", help="write the plan as CSV")
    p.add_argument("--json", help="write the plan summary as JSON")
    p.add_argument("--report", help="write a markdown report")
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleEpochError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, DomainError, InfeasibleGeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
