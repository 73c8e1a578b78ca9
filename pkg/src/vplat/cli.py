"""Command-line entry point: single runs and the design-space exploration.

Exit codes are scriptable: 0 for a run that reached its horizon or halted,
2 when the battery depleted, 1 for any usage, configuration or I/O error.
"""

from __future__ import annotations

import argparse
import sys

from .common import SimulationError, parse_duration
from .config import ParseError, ValidationError, config_from_dict, default_config_raw, load_raw
from .dse import load_variants_file, paper_variants, render_report, run_dse, write_report
from .kernel import EndCause
from .platform import simulate
from .trace import render_summary_table, write_summary


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="vplat", description="RISC-V platform / power-network co-simulation")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run one simulation from a config file")
    run.add_argument("--config", required=True, help="platform description (JSON)")
    run.add_argument("--duration", help="override the simulated horizon (e.g. 1h, 500ms)")
    run.add_argument("--power-timestep", help="override the power-net timestep (e.g. 100us)")
    run.add_argument("--trace", help="write the per-tick CSV trace to this path")
    run.add_argument("--summary", help="write the run summary CSV to this path")

    dse = sub.add_parser("dse", help="run a set of config variants and compare lifetimes")
    dse.add_argument("--base", help="base config (default: the shipped configuration A)")
    dse.add_argument(
        "--variants",
        default="builtin:paper",
        help="variants JSON file, or builtin:paper for the shipped A/B/C/D sweep",
    )
    dse.add_argument("--hours", type=float, default=1.0, help="simulated hours per variant (default 1)")
    dse.add_argument("--report", help="write the comparison CSV to this path")
    dse.add_argument("--jobs", type=int, default=1, help="run variants in N worker processes")
    return parser


def _cmd_run(args) -> int:
    raw = load_raw(args.config)
    if args.duration is not None:
        raw.setdefault("kernel", {})["horizon"] = parse_duration(args.duration)
    if args.power_timestep is not None:
        raw.setdefault("kernel", {})["power_timestep"] = parse_duration(args.power_timestep)
    cfg = config_from_dict(raw, source_path=args.config)
    summary = simulate(cfg, trace_path=args.trace)
    runs = [(cfg.label, summary)]
    if args.summary:
        write_summary(args.summary, runs)
    print(render_summary_table(runs))
    return 2 if summary.end_cause is EndCause.BATTERY_DEPLETED else 0


def _cmd_dse(args) -> int:
    if args.variants == "builtin:paper":
        variants = paper_variants()
        base_raw = load_raw(args.base) if args.base else default_config_raw()
    else:
        base_path, variants = load_variants_file(args.variants)
        if args.base:
            base_path = args.base
        base_raw = load_raw(base_path) if base_path else default_config_raw()
    report = run_dse(variants, hours=args.hours, base_raw=base_raw, jobs=args.jobs)
    if args.report:
        write_report(report, args.report)
    print(render_report(report))
    for label, error in report.failures:
        print(f"vplat dse: variant {label} failed: {error}", file=sys.stderr)
    return 1 if report.failures else 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_dse(args)
    except (ValidationError, ParseError, SimulationError, OSError, ValueError) as exc:
        print(f"vplat: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
