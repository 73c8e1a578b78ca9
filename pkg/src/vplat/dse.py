"""Design-space exploration: run named config variants and compare lifetimes.

A variant is a label plus dotted-path overrides applied to a base config.
The built-in "paper" sweep reproduces the four-configuration exploration:
starting from the shipped baseline, the filter interval drops from 1s to
50ms to stress power differences, then B halves the filter taps, C swaps
the core-rail converter for the (more efficient) battery-side model, and
D combines both.

Lifetime is estimated by linear extrapolation of the state-of-charge drop
rate over the simulated window, and reported normalized to variant A.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .common import HOUR, SimulationError
from .config import ValidationError, apply_overrides, config_from_dict, default_config_raw
from .platform import simulate
from .trace import fmt_float, render_table

REPORT_COLUMNS = ("label", "battery_p_mw", "core_dcdc_eff_pct", "dsoc_per_h_pct", "lifetime_h", "lifetime_norm")


@dataclass(frozen=True)
class CopyFrom:
    """Override value resolved by copying another path from the base config."""

    path: str


@dataclass(frozen=True)
class DseVariant:
    label: str
    overrides: Mapping[str, object]


@dataclass(frozen=True)
class DseRow:
    label: str
    battery_p_mw: float
    core_dcdc_eff_pct: float
    dsoc_per_h_pct: float
    lifetime_h: float
    lifetime_norm: float

    def as_strings(self) -> dict[str, str]:
        return {
            "label": self.label,
            "battery_p_mw": fmt_float(self.battery_p_mw),
            "core_dcdc_eff_pct": fmt_float(self.core_dcdc_eff_pct),
            "dsoc_per_h_pct": fmt_float(self.dsoc_per_h_pct),
            "lifetime_h": fmt_float(self.lifetime_h),
            "lifetime_norm": fmt_float(self.lifetime_norm),
        }


@dataclass(frozen=True)
class DseReport:
    rows: tuple[DseRow, ...]  # sorted by label
    baseline_label: str
    hours: float
    failures: tuple[tuple[str, str], ...] = ()  # (label, error) per failed variant

    def row(self, label: str) -> DseRow:
        for row in self.rows:
            if row.label == label:
                return row
        raise KeyError(label)


def paper_variants() -> list[DseVariant]:
    """The shipped A/B/C/D sweep (taps 40/20 x converter swap at 50ms interval)."""
    stress = {"core.phase.interval": "50ms"}
    fewer_taps = {"core.phase.taps": 20}
    swap_converter = {
        "power.converters.core_dcdc.lut": CopyFrom("power.converters.batt_dcdc.lut"),
        "power.converters.core_dcdc.model": CopyFrom("power.converters.batt_dcdc.model"),
    }
    return [
        DseVariant("A", {**stress}),
        DseVariant("B", {**stress, **fewer_taps}),
        DseVariant("C", {**stress, **swap_converter}),
        DseVariant("D", {**stress, **fewer_taps, **swap_converter}),
    ]


def load_variants_file(path) -> tuple[str | None, list[DseVariant]]:
    """Read a variants JSON file: {"base": optional path, "variants": [...]}.

    Relative base paths resolve against the variants file location.
    """
    raw = json.loads(Path(path).read_text())
    base = raw.get("base")
    if base is not None:
        base_path = Path(base)
        if not base_path.is_absolute():
            base_path = Path(path).parent / base_path
        base = str(base_path)
    variants = []
    for entry in raw.get("variants", []):
        variants.append(DseVariant(label=str(entry["label"]), overrides=dict(entry.get("overrides", {}))))
    if not variants:
        raise ValidationError([("variants", "variants file defines no variants")])
    labels = [v.label for v in variants]
    if len(set(labels)) != len(labels):
        raise ValidationError([("variants", f"duplicate variant labels in {labels}")])
    return base, variants


def _resolve_copies(overrides: Mapping[str, object], base_raw: dict) -> dict[str, object]:
    resolved = {}
    for key, value in overrides.items():
        if isinstance(value, CopyFrom):
            node = base_raw
            for part in value.path.split("."):
                node = node[part]
            resolved[key] = node
        else:
            resolved[key] = value
    return resolved


def _run_variant(args: tuple[dict, str, Mapping[str, object], float]):
    """Worker for one variant; never raises (failures travel as values)."""
    base_raw, label, overrides, hours = args
    try:
        raw = apply_overrides(base_raw, _resolve_copies(overrides, base_raw))
        raw["label"] = label
        raw.setdefault("kernel", {})["horizon"] = int(round(hours * HOUR))
        cfg = config_from_dict(raw)
        summary = simulate(cfg)
    except Exception as exc:  # reported per-row by the caller
        return label, None, f"{type(exc).__name__}: {exc}"
    metrics = (
        summary.avg_battery_power_w * 1e3,
        summary.converter_efficiency.get("core_dcdc", 1.0) * 100.0,
        summary.dsoc_per_hour_pct,
        summary.lifetime_hours,
    )
    return label, metrics, None


def run_dse(
    variants: Sequence[DseVariant],
    hours: float = 1.0,
    base_raw: dict | None = None,
    jobs: int = 1,
) -> DseReport:
    """Run every variant for `hours` simulated hours and assemble the report.

    Variants are independent simulations; `jobs > 1` fans them out to
    worker processes. The report is identical regardless of parallelism.
    """
    if hours <= 0:
        raise ValueError(f"hours must be > 0, got {hours}")
    if base_raw is None:
        base_raw = default_config_raw()
    tasks = [(base_raw, v.label, v.overrides, hours) for v in variants]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_variant, tasks))
    else:
        results = [_run_variant(task) for task in tasks]
    by_label = {label: metrics for label, metrics, _err in results if metrics is not None}
    failures = tuple((label, err) for label, metrics, err in results if metrics is None)
    if not by_label:
        return DseReport(rows=(), baseline_label="", hours=hours, failures=failures)
    baseline_label = "A" if "A" in by_label else next(v.label for v in variants if v.label in by_label)
    base_rate = by_label[baseline_label][2]
    rows = []
    for label in sorted(by_label):
        p_mw, eff, rate, lifetime = by_label[label]
        norm = float("inf") if rate <= 0 else base_rate / rate
        rows.append(
            DseRow(
                label=label,
                battery_p_mw=p_mw,
                core_dcdc_eff_pct=eff,
                dsoc_per_h_pct=rate,
                lifetime_h=lifetime,
                lifetime_norm=norm,
            )
        )
    return DseReport(rows=tuple(rows), baseline_label=baseline_label, hours=hours, failures=failures)


def write_report(report: DseReport, path) -> None:
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(REPORT_COLUMNS) + "\n")
            for row in report.rows:
                strings = row.as_strings()
                fh.write(",".join(strings[col] for col in REPORT_COLUMNS) + "\n")
    except OSError as exc:
        raise SimulationError(f"cannot write report file {path}: {exc}") from exc


def render_report(report: DseReport) -> str:
    return render_table(REPORT_COLUMNS, [row.as_strings() for row in report.rows])
