"""Trace and summary writers with stable, locale-free formatting.

The per-tick trace is CSV with a fixed column order and 9-significant-digit
decimal floats, so identical runs produce byte-identical files. Summaries
come in two flavours: machine-readable CSV and an aligned text table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

TRACE_COLUMNS = (
    "t_ns",
    "core_state",
    "load_core_w",
    "load_mic_w",
    "bus_w",
    "eta_batt_dcdc",
    "eta_core_dcdc",
    "batt_i_a",
    "batt_v",
    "soc",
)

SUMMARY_COLUMNS = (
    "label",
    "end_cause",
    "end_time_ns",
    "battery_p_mw",
    "core_dcdc_eff_pct",
    "dsoc_pct",
    "dsoc_per_h_pct",
    "lifetime_h",
)


@dataclass(frozen=True)
class TraceRecord:
    t_ns: int
    core_state: str
    load_core_w: float
    load_mic_w: float
    bus_w: float
    eta_batt_dcdc: float
    eta_core_dcdc: float
    batt_i_a: float
    batt_v: float
    soc: float


assert tuple(f.name for f in fields(TraceRecord)) == TRACE_COLUMNS


def fmt_float(value: float) -> str:
    """Decimal rendering with 9 significant digits; inf renders as 'inf'."""
    return format(value, ".9g")


class TraceWriter:
    """Streaming CSV sink for TraceRecords; one simulation owns one writer."""

    def __init__(self, path):
        self.path = path
        try:
            self._fh = open(path, "w", newline="\n")
        except OSError as exc:
            raise OSError(f"cannot open trace file {path}: {exc}") from exc
        self._fh.write(",".join(TRACE_COLUMNS) + "\n")
        self.records_written = 0
        self._last_t_ns = -1

    def write(self, rec: TraceRecord) -> None:
        if rec.t_ns <= self._last_t_ns:
            raise ValueError(f"trace must be strictly time-ordered: {rec.t_ns} after {self._last_t_ns}")
        for name in ("load_core_w", "load_mic_w", "bus_w", "batt_i_a", "batt_v", "soc"):
            if not math.isfinite(getattr(rec, name)):
                raise ValueError(f"non-finite trace field {name} at t={rec.t_ns}")
        self._last_t_ns = rec.t_ns
        self._fh.write(
            f"{rec.t_ns},{rec.core_state},{fmt_float(rec.load_core_w)},{fmt_float(rec.load_mic_w)},"
            f"{fmt_float(rec.bus_w)},{fmt_float(rec.eta_batt_dcdc)},{fmt_float(rec.eta_core_dcdc)},"
            f"{fmt_float(rec.batt_i_a)},{fmt_float(rec.batt_v)},{fmt_float(rec.soc)}\n"
        )
        self.records_written += 1

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def summary_row(label: str, summary) -> dict[str, str]:
    """Flatten a SimulationSummary into the report column set."""
    return {
        "label": label,
        "end_cause": summary.end_cause.value,
        "end_time_ns": str(summary.end_time_ns),
        "battery_p_mw": fmt_float(summary.avg_battery_power_w * 1e3),
        "core_dcdc_eff_pct": fmt_float(summary.converter_efficiency.get("core_dcdc", 1.0) * 100.0),
        "dsoc_pct": fmt_float(summary.dsoc_pct),
        "dsoc_per_h_pct": fmt_float(summary.dsoc_per_hour_pct),
        "lifetime_h": fmt_float(summary.lifetime_hours),
    }


def write_summary(path, runs: list[tuple[str, object]]) -> None:
    """Write one CSV row per run, sorted by config label."""
    rows = [summary_row(label, summary) for label, summary in sorted(runs, key=lambda r: r[0])]
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(SUMMARY_COLUMNS) + "\n")
            for row in rows:
                fh.write(",".join(row[col] for col in SUMMARY_COLUMNS) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write summary file {path}: {exc}") from exc


def render_table(columns: tuple[str, ...], rows: list[dict[str, str]]) -> str:
    """Aligned text table for terminal output."""
    widths = {col: max(len(col), *(len(row[col]) for row in rows)) if rows else len(col) for col in columns}
    lines = ["  ".join(col.ljust(widths[col]) for col in columns)]
    lines.append("  ".join("-" * widths[col] for col in columns))
    for row in rows:
        lines.append("  ".join(row[col].ljust(widths[col]) for col in columns))
    return "\n".join(lines)


def render_summary_table(runs: list[tuple[str, object]]) -> str:
    rows = [summary_row(label, summary) for label, summary in sorted(runs, key=lambda r: r[0])]
    return render_table(SUMMARY_COLUMNS, rows)
