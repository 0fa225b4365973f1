"""Command-line front end.

Subcommands: `run` a single scenario to trace.csv/summary.json, `sweep` a
variable across policies to sweep.csv/aggregate.csv, `compare` two execution
policies (JSON report plus console table), and `calibrate` the downlink
parameter grid behind the shipped case-study scenario.

Exit codes: 0 success, 2 configuration error (message names the offending
key), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace

from .config import load_scenario, resolved_dict
from .engine import RunResult, run
from .errors import ConfigurationError
from .experiments import (
    POLICY_NAMES,
    CalibrationResult,
    ComparisonReport,
    SweepResult,
    calibrate_downlink,
    compare_policies,
    default_jobs,
    parse_sweep,
    policy_by_name,
    run_sweep,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

TRACE_HEADER = (
    "t,d_t,status,executed_id,aoi_executed,voi_executed,"
    "distance_ok,speed_ok,risk,downlink_queue_depth"
)


def _fmt(x: float) -> str:
    """Reals with 6 significant digits, locale-independent."""
    if isinstance(x, float) and math.isnan(x):
        return ""
    return format(x, ".6g")


def _bool(b) -> str:
    return "true" if b else "false"


def write_trace_csv(result: RunResult, path: str) -> None:
    """Fixed schema, LF line endings, absent fields as empty strings."""
    with open(path, "w", newline="\n") as fh:
        fh.write(TRACE_HEADER + "\n")
        for rec in result.slot_records():
            held = rec.executed_id is None
            fh.write(
                ",".join(
                    [
                        str(rec.t),
                        _fmt(rec.d_t),
                        rec.status.label,
                        "" if held else str(rec.executed_id),
                        "" if held else str(rec.aoi_executed),
                        "" if held else _fmt(rec.voi_executed),
                        _bool(rec.verdict.distance_ok),
                        _bool(rec.verdict.speed_ok),
                        _fmt(rec.risk),
                        str(rec.downlink_queue_depth),
                    ]
                )
                + "\n"
            )


def write_summary_json(result: RunResult, path: str) -> None:
    payload = {
        "metrics": result.summary.to_dict(),
        "config": resolved_dict(result.config),
        "digest": result.digest(),
    }
    with open(path, "w", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _cmd_run(args) -> int:
    cfg = load_scenario(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
        cfg.validate()
    result = run(cfg)
    import os

    os.makedirs(args.out, exist_ok=True)
    write_trace_csv(result, os.path.join(args.out, "trace.csv"))
    write_summary_json(result, os.path.join(args.out, "summary.json"))
    s = result.summary
    print(
        f"T={s.T} safety_rate={_fmt(s.safety_rate)} "
        f"tracking_success_rate={_fmt(s.tracking_success_rate)} "
        f"mean_abs_distance_error={_fmt(s.mean_abs_distance_error)}"
    )
    return EXIT_OK


_SWEEP_COLUMNS = (
    "safety_rate",
    "tracking_success_rate",
    "mean_abs_distance_error",
    "mean_aoi_executed",
    "max_aoi_executed",
)


def write_sweep_csv(result: SweepResult, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("policy,variable,value,seed," + ",".join(_SWEEP_COLUMNS) + "\n")
        for row in result.rows:
            cells = [row.policy, row.variable, _fmt(row.value), str(row.seed)]
            cells += [_fmt(row.metrics[m]) for m in _SWEEP_COLUMNS]
            fh.write(",".join(cells) + "\n")


def write_aggregate_csv(result: SweepResult, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        header = ["policy", "variable", "value", "n_seeds"]
        for m in _SWEEP_COLUMNS:
            header += [f"{m}_mean", f"{m}_std"]
        fh.write(",".join(header) + "\n")
        for pt in result.points:
            cells = [pt.policy, pt.variable, _fmt(pt.value), str(pt.n_seeds)]
            for m in _SWEEP_COLUMNS:
                cells += [_fmt(pt.mean[m]), _fmt(pt.std[m])]
            fh.write(",".join(cells) + "\n")


def write_plotdata_csv(result: SweepResult, path: str) -> None:
    """Grouped-bar data: one row per (variable value, policy)."""
    with open(path, "w", newline="\n") as fh:
        fh.write("variable,value,policy,safety_rate_mean,tracking_success_rate_mean\n")
        ordered = sorted(result.points, key=lambda p: (p.value, p.policy))
        for pt in ordered:
            fh.write(
                ",".join(
                    [
                        pt.variable,
                        _fmt(pt.value),
                        pt.policy,
                        _fmt(pt.mean["safety_rate"]),
                        _fmt(pt.mean["tracking_success_rate"]),
                    ]
                )
                + "\n"
            )


def _seed_list(n: int) -> list:
    if n < 1:
        raise ConfigurationError("seeds: need at least one seed")
    return list(range(1, n + 1))


def _cmd_sweep(args) -> int:
    cfg = load_scenario(args.config)
    spec = parse_sweep(args.sweep)
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    for p in policies:
        policy_by_name(p, cfg)  # validate names early
    result = run_sweep(cfg, spec, policies, _seed_list(args.seeds), jobs=args.jobs)
    import os

    os.makedirs(args.out, exist_ok=True)
    write_sweep_csv(result, os.path.join(args.out, "sweep.csv"))
    write_aggregate_csv(result, os.path.join(args.out, "aggregate.csv"))
    if args.emit_plotdata:
        write_plotdata_csv(result, os.path.join(args.out, "plotdata.csv"))
    print(
        f"swept {spec.variable} over {len(spec.values)} values x "
        f"{len(policies)} policies x {args.seeds} seeds"
    )
    return EXIT_OK


def _ratio_str(r) -> str:
    return r if isinstance(r, str) else _fmt(r)


def print_comparison(report: ComparisonReport) -> None:
    head = f"{report.candidate_policy} vs {report.baseline_policy} ({len(report.seeds)} seeds)"
    print(head)
    print("-" * len(head))
    cols = (
        f"{'point':>14} {'base safety':>12} {'cand safety':>12} {'ratio':>9} "
        f"{'base success':>13} {'cand success':>13} {'ratio':>9}"
    )
    print(cols)
    for p in report.points:
        label = "scenario" if p.variable is None else f"{p.variable}={_fmt(p.value)}"
        print(
            f"{label:>14} "
            f"{_fmt(p.baseline['safety_rate']['mean']):>12} "
            f"{_fmt(p.candidate['safety_rate']['mean']):>12} "
            f"{_ratio_str(p.ratios['safety_rate']):>9} "
            f"{_fmt(p.baseline['tracking_success_rate']['mean']):>13} "
            f"{_fmt(p.candidate['tracking_success_rate']['mean']):>13} "
            f"{_ratio_str(p.ratios['tracking_success_rate']):>9}"
        )


def _cmd_compare(args) -> int:
    cfg = load_scenario(args.config)
    policy_by_name(args.baseline, cfg)
    policy_by_name(args.candidate, cfg)
    spec = parse_sweep(args.sweep) if args.sweep else None
    report = compare_policies(
        cfg, args.baseline, args.candidate, _seed_list(args.seeds), sweep=spec, jobs=args.jobs
    )
    print_comparison(report)
    if args.out:
        import os

        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "compare.json")
        with open(path, "w", newline="\n") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        print(f"wrote {path}")
    return EXIT_OK


def write_calibration_csv(result: CalibrationResult, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(
            "loss_prob,geo_p,base_period,"
            "baseline_safety,baseline_success,semce_safety,semce_success,"
            "safety_ratio,success_ratio\n"
        )
        for c in result.cells:
            fh.write(
                ",".join(
                    [
                        _fmt(c.loss_prob),
                        _fmt(c.geo_p),
                        str(c.base_period),
                        _fmt(c.baseline["safety_rate"]),
                        _fmt(c.baseline["tracking_success_rate"]),
                        _fmt(c.candidate["safety_rate"]),
                        _fmt(c.candidate["tracking_success_rate"]),
                        _fmt(c.safety_ratio),
                        _fmt(c.success_ratio),
                    ]
                )
                + "\n"
            )


def _cmd_calibrate(args) -> int:
    cfg = load_scenario(args.config)
    result = calibrate_downlink(cfg, _seed_list(args.seeds))
    import os

    os.makedirs(args.out, exist_ok=True)
    write_calibration_csv(result, os.path.join(args.out, "calibration.csv"))
    b = result.best
    print(
        f"evaluated {len(result.cells)} downlink cells in "
        f"{result.elapsed_seconds:.1f}s at the stringent threshold point"
    )
    print(
        f"best: loss_prob={b.loss_prob} geo_p={b.geo_p} base_period={b.base_period} "
        f"-> safety ratio {_fmt(b.safety_ratio)}, success ratio {_fmt(b.success_ratio)}"
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rcs-sim",
        description="Slot-driven simulator of a wirelessly-connected UAV tracking loop",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario, write trace.csv + summary.json")
    p_run.add_argument("--config", required=True, help="scenario TOML file")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="sweep one variable across policies")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--sweep", required=True, help="VAR=a,b,c or VAR=start:stop:step")
    p_sweep.add_argument("--seeds", type=int, default=20, help="seeds 1..N per point")
    p_sweep.add_argument(
        "--policies",
        default="latest_only,semce",
        help=f"comma list from {','.join(POLICY_NAMES)}",
    )
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--jobs", type=int, default=None, help="parallel workers "
                         f"(default ${'{'}RCS_SIM_JOBS{'}'} or 1)")
    p_sweep.add_argument("--emit-plotdata", action="store_true",
                         help="also write grouped-bar plotdata.csv")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_cmp = sub.add_parser("compare", help="compare two execution policies")
    p_cmp.add_argument("--config", required=True)
    p_cmp.add_argument("--baseline", default="latest_only")
    p_cmp.add_argument("--candidate", default="semce")
    p_cmp.add_argument("--seeds", type=int, default=20)
    p_cmp.add_argument("--sweep", default=None, help="optional VAR=... sweep per point")
    p_cmp.add_argument("--out", default=None, help="directory for compare.json")
    p_cmp.add_argument("--jobs", type=int, default=None)
    p_cmp.set_defaults(func=_cmd_compare)

    p_cal = sub.add_parser(
        "calibrate", help="grid-search downlink loss/delay/tx-period at the stringent point"
    )
    p_cal.add_argument("--config", required=True)
    p_cal.add_argument("--seeds", type=int, default=20)
    p_cal.add_argument("--out", required=True)
    p_cal.set_defaults(func=_cmd_calibrate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", None) is None and hasattr(args, "jobs"):
        args.jobs = default_jobs()
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
