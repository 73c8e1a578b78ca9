"""Declarative platform description: JSON schema, validation, overrides.

A SystemConfig fully determines a simulation: kernel timing, the core
(instruction-set or phase-scripted), the functional address map, the power
topology (battery, the two DC/DC converters, load-to-rail bindings) and
the microphone. Validation walks the whole document and reports every
violation with its field path, rather than stopping at the first.

Durations accept either integer nanoseconds or suffixed strings
("100us", "1h"); addresses accept ints or hex strings.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .common import SimulationError, parse_duration
from .iss import IssConfig
from .phase_core import PhaseScript
from .power import EfficiencyLUT

REQUIRED_CONVERTERS = {"batt_dcdc": "battery_to_bus", "core_dcdc": "bus_to_rail"}
KNOWN_PERIPHERALS = ("mic", "sysctl")
CORE_KINDS = ("iss", "phase", "none")


class ParseError(SimulationError):
    """The config file is not syntactically valid JSON."""


class ValidationError(SimulationError):
    """One or more schema violations; `violations` lists (path, message)."""

    def __init__(self, violations: list[tuple[str, str]]):
        self.violations = violations
        lines = "\n".join(f"  {path}: {message}" for path, message in violations)
        super().__init__(f"invalid configuration ({len(violations)} violation(s)):\n{lines}")


class _Collector:
    def __init__(self):
        self.violations: list[tuple[str, str]] = []

    def add(self, path: str, message: str) -> None:
        self.violations.append((path, message))

    def raise_if_any(self) -> None:
        if self.violations:
            raise ValidationError(self.violations)


@dataclass(frozen=True)
class KernelSection:
    power_timestep_ns: int
    horizon_ns: int
    trace_stride: int = 1


@dataclass(frozen=True)
class CoreSection:
    kind: str
    phase: PhaseScript | None = None
    iss: IssConfig | None = None
    program: str | None = None


@dataclass(frozen=True)
class RegionSection:
    name: str
    base: int
    size: int


@dataclass(frozen=True)
class BusSection:
    regions: tuple[RegionSection, ...] = ()


@dataclass(frozen=True)
class ConverterSection:
    model: str
    v_out: float
    placement: str
    lut_i_out_a: tuple[float, ...]
    lut_eta: tuple[float, ...]


@dataclass(frozen=True)
class BatterySection:
    capacity_mah: float
    initial_soc: float
    voc_soc: tuple[float, ...]
    voc_v: tuple[float, ...]
    rs_soc: tuple[float, ...]
    rs_ohm: tuple[float, ...]

    @property
    def capacity_coulomb(self) -> float:
        return self.capacity_mah * 3.6


@dataclass(frozen=True)
class MicSection:
    sample_rate_hz: int = 16_000
    fifo_depth: int = 512
    buffer_len: int = 256
    seed: int = 2024
    i_active_a: float = 160e-6
    i_idle_a: float = 120e-6
    autostart: bool = True


@dataclass(frozen=True)
class PowerSection:
    bus_v: float
    battery: BatterySection
    converters: dict[str, ConverterSection]
    loads: dict[str, str]


@dataclass(frozen=True)
class SystemConfig:
    kernel: KernelSection
    core: CoreSection
    power: PowerSection
    bus: BusSection = BusSection()
    mic: MicSection | None = None
    label: str = "run"
    source_path: str | None = field(default=None, compare=False)


# -- parsing helpers ---------------------------------------------------------------


def _get(data: dict, key: str, path: str, errors: _Collector, required: bool = True, default=None):
    if key not in data:
        if required:
            errors.add(f"{path}.{key}" if path else key, "missing required field")
        return default
    return data[key]


def _duration(value, path: str, errors: _Collector, default: int = 0) -> int:
    try:
        return parse_duration(value)
    except (ValueError, TypeError) as exc:
        errors.add(path, str(exc))
        return default


def _address(value, path: str, errors: _Collector) -> int:
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        try:
            return int(value, 0)
        except ValueError:
            pass
    errors.add(path, f"invalid address {value!r}")
    return 0


def _floats(value, path: str, errors: _Collector) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)) or not all(isinstance(v, (int, float)) for v in value):
        errors.add(path, "expected a list of numbers")
        return ()
    return tuple(float(v) for v in value)


def _parse_kernel(data, errors: _Collector) -> KernelSection:
    step = _duration(_get(data, "power_timestep", "kernel", errors, default=0), "kernel.power_timestep", errors)
    horizon = _duration(_get(data, "horizon", "kernel", errors, default=0), "kernel.horizon", errors)
    stride = data.get("trace_stride", 1)
    if not isinstance(stride, int) or stride < 1:
        errors.add("kernel.trace_stride", f"must be an integer >= 1, got {stride!r}")
        stride = 1
    if step <= 0:
        errors.add("kernel.power_timestep", "must be > 0")
    elif horizon < step:
        errors.add("kernel.horizon", "must be at least one power timestep")
    return KernelSection(power_timestep_ns=step, horizon_ns=horizon, trace_stride=stride)


def _parse_phase(data, errors: _Collector) -> PhaseScript | None:
    kwargs = dict(
        interval_ns=_duration(_get(data, "interval", "core.phase", errors, default=1), "core.phase.interval", errors, 1),
        taps=data.get("taps", 0),
        tiles=data.get("tiles", 1),
        per_tap_time_ns=_duration(data.get("per_tap_time", 0), "core.phase.per_tap_time", errors),
        spike_time_ns=_duration(data.get("spike_time", 0), "core.phase.spike_time", errors),
        ready_offset_ns=_duration(data.get("ready_offset", 0), "core.phase.ready_offset", errors),
        spike_power_w=data.get("spike_power_w", 0.0),
        compute_power_w=data.get("compute_power_w", 0.0),
        wait_power_w=data.get("wait_power_w", 0.0),
        leakage_w=data.get("leakage_w", {}),
    )
    try:
        return PhaseScript(**kwargs)
    except (ValueError, TypeError) as exc:
        errors.add("core.phase", str(exc))
        return None


def _parse_iss(data, errors: _Collector) -> IssConfig | None:
    kwargs = {}
    for key in ("clock_hz", "bus_latency_cycles", "memory_size", "mmio_size"):
        if key in data:
            kwargs[key] = data[key]
    for key in ("memory_base", "mmio_base"):
        if key in data:
            kwargs[key] = _address(data[key], f"core.iss.{key}", errors)
    for key in ("cycle_table", "energy_table", "leakage_w"):
        if key in data:
            kwargs[key] = dict(data[key])
    try:
        return IssConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        errors.add("core.iss", str(exc))
        return None


def _parse_core(data, errors: _Collector) -> CoreSection:
    kind = _get(data, "kind", "core", errors, default="none")
    if kind not in CORE_KINDS:
        errors.add("core.kind", f"must be one of {CORE_KINDS}, got {kind!r}")
        return CoreSection(kind="none")
    phase = iss = None
    program = data.get("program")
    if kind == "phase":
        section = _get(data, "phase", "core", errors)
        phase = _parse_phase(section, errors) if isinstance(section, dict) else None
        if section is not None and not isinstance(section, dict):
            errors.add("core.phase", "expected an object")
    elif kind == "iss":
        iss = _parse_iss(data.get("iss", {}), errors)
        if program is not None and not isinstance(program, str):
            errors.add("core.program", "expected a file path string")
    return CoreSection(kind=kind, phase=phase, iss=iss, program=program)


def _parse_bus(data, errors: _Collector) -> BusSection:
    regions = []
    seen_names = set()
    for idx, entry in enumerate(data.get("regions", [])):
        path = f"bus.regions[{idx}]"
        name = _get(entry, "name", path, errors, default=f"region{idx}")
        base = _address(_get(entry, "base", path, errors, default=0), f"{path}.base", errors)
        size = _get(entry, "size", path, errors, default=0)
        if name in seen_names:
            errors.add(f"{path}.name", f"duplicate region name {name!r}")
        seen_names.add(name)
        if name not in KNOWN_PERIPHERALS:
            errors.add(f"{path}.name", f"unknown peripheral {name!r}; known: {KNOWN_PERIPHERALS}")
        if not isinstance(size, int) or size <= 0 or size % 4 or base % 4:
            errors.add(path, f"region must be 4-byte aligned with size > 0 (base={base:#x}, size={size!r})")
        regions.append(RegionSection(name=name, base=base, size=size if isinstance(size, int) else 0))
    ordered = sorted(regions, key=lambda r: r.base)
    for left, right in zip(ordered, ordered[1:]):
        if left.base + left.size > right.base:
            errors.add("bus.regions", f"regions {left.name!r} and {right.name!r} overlap")
    return BusSection(regions=tuple(regions))


def _parse_battery(data, errors: _Collector) -> BatterySection:
    capacity = _get(data, "capacity_mah", "power.battery", errors, default=0.0)
    initial = data.get("initial_soc", 1.0)
    voc = _get(data, "voc", "power.battery", errors, default={}) or {}
    rs = _get(data, "rs", "power.battery", errors, default={}) or {}
    section = BatterySection(
        capacity_mah=float(capacity) if isinstance(capacity, (int, float)) else 0.0,
        initial_soc=float(initial) if isinstance(initial, (int, float)) else 1.0,
        voc_soc=_floats(voc.get("soc", []), "power.battery.voc.soc", errors),
        voc_v=_floats(voc.get("volts", []), "power.battery.voc.volts", errors),
        rs_soc=_floats(rs.get("soc", []), "power.battery.rs.soc", errors),
        rs_ohm=_floats(rs.get("ohms", []), "power.battery.rs.ohms", errors),
    )
    if section.capacity_mah <= 0:
        errors.add("power.battery.capacity_mah", "must be > 0")
    if not 0.0 <= section.initial_soc <= 1.0:
        errors.add("power.battery.initial_soc", "must be in [0, 1]")
    for label, socs, values in (
        ("voc", section.voc_soc, section.voc_v),
        ("rs", section.rs_soc, section.rs_ohm),
    ):
        path = f"power.battery.{label}"
        if len(socs) < 2 or len(socs) != len(values):
            errors.add(path, "needs matching soc/value lists with at least 2 points")
            continue
        if any(b <= a for a, b in zip(socs, socs[1:])):
            errors.add(f"{path}.soc", "soc breakpoints must be strictly increasing")
        if any(s < 0 or s > 1 for s in socs):
            errors.add(f"{path}.soc", "soc breakpoints must lie in [0, 1]")
        if label == "voc" and any(v <= 0 for v in values):
            errors.add(f"{path}.volts", "voltages must be > 0")
        if label == "rs" and any(v < 0 for v in values):
            errors.add(f"{path}.ohms", "resistances must be >= 0")
    return section


def _parse_converter(name: str, data, errors: _Collector) -> ConverterSection:
    path = f"power.converters.{name}"
    lut = data.get("lut", {})
    i_out = _floats(lut.get("i_out_a", []), f"{path}.lut.i_out_a", errors)
    eta = _floats(lut.get("eta", []), f"{path}.lut.eta", errors)
    section = ConverterSection(
        model=str(data.get("model", name)),
        v_out=float(data.get("v_out", 0.0)),
        placement=str(_get(data, "placement", path, errors, default="")),
        lut_i_out_a=i_out,
        lut_eta=eta,
    )
    try:
        EfficiencyLUT(i_out, eta, name=f"{path}.lut")
    except ValueError as exc:
        errors.add(f"{path}.lut", str(exc))
    if section.v_out <= 0:
        errors.add(f"{path}.v_out", "must be > 0")
    expected = REQUIRED_CONVERTERS.get(name)
    if expected and section.placement != expected:
        errors.add(f"{path}.placement", f"must be {expected!r}")
    return section


def _parse_power(data, errors: _Collector) -> PowerSection:
    bus_v = data.get("bus_v", 0.0)
    if not isinstance(bus_v, (int, float)) or bus_v <= 0:
        errors.add("power.bus_v", f"must be a number > 0, got {bus_v!r}")
        bus_v = 3.3
    battery_data = _get(data, "battery", "power", errors)
    battery = _parse_battery(battery_data if isinstance(battery_data, dict) else {}, errors)
    converters_data = data.get("converters", {})
    converters = {}
    for name in REQUIRED_CONVERTERS:
        if name not in converters_data:
            errors.add(f"power.converters.{name}", "missing required converter")
    for name, conv in converters_data.items():
        if name not in REQUIRED_CONVERTERS:
            errors.add(f"power.converters.{name}", f"unknown converter; expected {sorted(REQUIRED_CONVERTERS)}")
            continue
        converters[name] = _parse_converter(name, conv if isinstance(conv, dict) else {}, errors)
        if name in converters and converters[name].placement == "battery_to_bus" and converters[name].v_out > 0:
            if converters[name].v_out != float(bus_v):
                errors.add(f"power.converters.{name}.v_out", "battery_to_bus converter must output the bus voltage")
    loads = data.get("loads", {})
    for load, rail in loads.items():
        if load not in ("core", "mic"):
            errors.add(f"power.loads.{load}", "unknown load; expected 'core' or 'mic'")
        if rail != "bus" and (rail not in REQUIRED_CONVERTERS or REQUIRED_CONVERTERS.get(rail) != "bus_to_rail"):
            errors.add(f"power.loads.{load}", f"rail must be 'bus' or a bus_to_rail converter, got {rail!r}")
    return PowerSection(bus_v=float(bus_v), battery=battery, converters=converters, loads=dict(loads))


def _parse_mic(data, errors: _Collector) -> MicSection | None:
    if data is None:
        return None
    section = MicSection(
        sample_rate_hz=data.get("sample_rate_hz", 16_000),
        fifo_depth=data.get("fifo_depth", 512),
        buffer_len=data.get("buffer_len", 256),
        seed=data.get("seed", 2024),
        i_active_a=float(data.get("i_active_a", 160e-6)),
        i_idle_a=float(data.get("i_idle_a", 120e-6)),
        autostart=bool(data.get("autostart", True)),
    )
    if not isinstance(section.sample_rate_hz, int) or section.sample_rate_hz <= 0:
        errors.add("mic.sample_rate_hz", "must be an integer > 0")
    if not isinstance(section.fifo_depth, int) or section.fifo_depth < 1:
        errors.add("mic.fifo_depth", "must be an integer >= 1")
    if not isinstance(section.buffer_len, int) or section.buffer_len < 1:
        errors.add("mic.buffer_len", "must be an integer >= 1")
    if section.i_active_a < 0 or section.i_idle_a < 0:
        errors.add("mic", "state currents must be >= 0")
    return section


def config_from_dict(data: dict, source_path: str | None = None) -> SystemConfig:
    """Build and fully validate a SystemConfig; raises ValidationError with
    every violation found."""
    if not isinstance(data, dict):
        raise ValidationError([("", "top-level document must be an object")])
    errors = _Collector()
    kernel_data = _get(data, "kernel", "", errors)
    core_data = _get(data, "core", "", errors)
    power_data = _get(data, "power", "", errors)
    kernel = _parse_kernel(kernel_data if isinstance(kernel_data, dict) else {}, errors)
    core = _parse_core(core_data if isinstance(core_data, dict) else {}, errors)
    power = _parse_power(power_data if isinstance(power_data, dict) else {}, errors)
    bus = _parse_bus(data.get("bus", {}) if isinstance(data.get("bus", {}), dict) else {}, errors)
    mic = _parse_mic(data.get("mic"), errors)
    if core.kind == "iss":
        names = {r.name for r in bus.regions}
        if mic is not None and "mic" not in names:
            errors.add("bus.regions", "an iss core with a mic needs a 'mic' region")
    if mic is not None and "mic" not in power.loads:
        errors.add("power.loads", "mic present but not bound to a rail")
    if core.kind != "none" and "core" not in power.loads:
        errors.add("power.loads", "core present but not bound to a rail")
    errors.raise_if_any()
    return SystemConfig(
        kernel=kernel,
        core=core,
        power=power,
        bus=bus,
        mic=mic,
        label=str(data.get("label", "run")),
        source_path=source_path,
    )


def load_config(path) -> SystemConfig:
    """Load and validate a platform description from a JSON file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(raw, source_path=str(path))


def load_raw(path) -> dict:
    """Load a config file as a plain dict (for override-based workflows)."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise OSError(f"cannot read config file {path}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"config file {path} is not valid JSON: {exc}") from exc


def config_to_dict(cfg: SystemConfig) -> dict:
    """Canonical dict form (durations in integer ns); round-trips through
    config_from_dict structurally identically."""
    data: dict = {
        "label": cfg.label,
        "kernel": {
            "power_timestep": cfg.kernel.power_timestep_ns,
            "horizon": cfg.kernel.horizon_ns,
            "trace_stride": cfg.kernel.trace_stride,
        },
        "core": {"kind": cfg.core.kind},
        "bus": {
            "regions": [
                {"name": r.name, "base": r.base, "size": r.size} for r in cfg.bus.regions
            ]
        },
        "power": {
            "bus_v": cfg.power.bus_v,
            "battery": {
                "capacity_mah": cfg.power.battery.capacity_mah,
                "initial_soc": cfg.power.battery.initial_soc,
                "voc": {"soc": list(cfg.power.battery.voc_soc), "volts": list(cfg.power.battery.voc_v)},
                "rs": {"soc": list(cfg.power.battery.rs_soc), "ohms": list(cfg.power.battery.rs_ohm)},
            },
            "converters": {
                name: {
                    "model": conv.model,
                    "v_out": conv.v_out,
                    "placement": conv.placement,
                    "lut": {"i_out_a": list(conv.lut_i_out_a), "eta": list(conv.lut_eta)},
                }
                for name, conv in cfg.power.converters.items()
            },
            "loads": dict(cfg.power.loads),
        },
    }
    if cfg.core.kind == "phase" and cfg.core.phase is not None:
        p = cfg.core.phase
        data["core"]["phase"] = {
            "interval": p.interval_ns,
            "taps": p.taps,
            "tiles": p.tiles,
            "per_tap_time": p.per_tap_time_ns,
            "spike_time": p.spike_time_ns,
            "ready_offset": p.ready_offset_ns,
            "spike_power_w": p.spike_power_w,
            "compute_power_w": p.compute_power_w,
            "wait_power_w": p.wait_power_w,
            "leakage_w": dict(p.leakage_w),
        }
    elif cfg.core.kind == "iss" and cfg.core.iss is not None:
        i = cfg.core.iss
        data["core"]["iss"] = {
            "clock_hz": i.clock_hz,
            "cycle_table": dict(i.cycle_table),
            "energy_table": dict(i.energy_table),
            "leakage_w": dict(i.leakage_w),
            "bus_latency_cycles": i.bus_latency_cycles,
            "memory_base": i.memory_base,
            "memory_size": i.memory_size,
            "mmio_base": i.mmio_base,
            "mmio_size": i.mmio_size,
        }
        if cfg.core.program is not None:
            data["core"]["program"] = cfg.core.program
    if cfg.mic is not None:
        m = cfg.mic
        data["mic"] = {
            "sample_rate_hz": m.sample_rate_hz,
            "fifo_depth": m.fifo_depth,
            "buffer_len": m.buffer_len,
            "seed": m.seed,
            "i_active_a": m.i_active_a,
            "i_idle_a": m.i_idle_a,
            "autostart": m.autostart,
        }
    return data


def save_config(cfg: SystemConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n")


def apply_overrides(raw: dict, overrides: dict[str, object]) -> dict:
    """Apply dotted-path overrides to a raw config dict (last one wins).

    Intermediate path segments must already exist; the final segment may
    introduce a new key. Values replace whatever was there, including whole
    sub-objects.
    """
    result = copy.deepcopy(raw)
    for dotted, value in overrides.items():
        parts = dotted.split(".")
        node = result
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ValidationError([(dotted, f"override path segment {part!r} does not exist")])
            node = node[part]
        if not isinstance(node, dict):
            raise ValidationError([(dotted, "override path does not reach an object")])
        node[parts[-1]] = copy.deepcopy(value)
    return result


def default_config_raw() -> dict:
    """The shipped paper-like parameter pack (configuration A) as a dict."""
    text = resources.files("vplat.data").joinpath("config_a.json").read_text()
    return json.loads(text)


def default_config() -> SystemConfig:
    return config_from_dict(default_config_raw(), source_path="builtin:config_a")
