"""vplat: co-simulation of a RISC-V platform with its power-delivery network.

An instruction-level (or phase-scripted) functional core runs in lockstep
with a fixed-timestep power network — battery, DC/DC converters, power
state machine loads — for deterministic battery-lifetime studies and
design-space exploration.
"""

from .bus import BusRequest, BusResponse, FuncBus, OverlapError
from .common import (
    ACTIVE,
    CLUSTER_ACTIVE,
    HOUR,
    MINUTE,
    MS,
    NS,
    SEC,
    SLEEP_WAIT,
    US,
    PowerSample,
    SimulationError,
    parse_duration,
)
from .config import (
    ParseError,
    SystemConfig,
    ValidationError,
    apply_overrides,
    config_from_dict,
    config_to_dict,
    default_config,
    default_config_raw,
    load_config,
    save_config,
)
from .dse import DseReport, DseVariant, paper_variants, run_dse
from .events import Event, EventQueue, SchedulingInPast
from .iss import CoreFault, IssConfig, RiscvCore
from .kernel import EndCause, Kernel, KernelConfig, SimulationSummary
from .peripherals import Microphone, PowerController
from .phase_core import PhaseCore, PhaseScript
from .platform import Platform, build_platform, simulate
from .power import (
    Battery,
    DcDcConverter,
    EfficiencyLUT,
    MaxPowerExceeded,
    PowerNet,
    Psm,
    UnknownState,
)
from .trace import TraceRecord, TraceWriter

__version__ = "0.1.0"

__all__ = [
    "ACTIVE",
    "Battery",
    "BusRequest",
    "BusResponse",
    "CLUSTER_ACTIVE",
    "CoreFault",
    "DcDcConverter",
    "DseReport",
    "DseVariant",
    "EfficiencyLUT",
    "EndCause",
    "Event",
    "EventQueue",
    "FuncBus",
    "HOUR",
    "IssConfig",
    "Kernel",
    "KernelConfig",
    "MaxPowerExceeded",
    "Microphone",
    "MINUTE",
    "MS",
    "NS",
    "OverlapError",
    "ParseError",
    "PhaseCore",
    "PhaseScript",
    "Platform",
    "PowerController",
    "PowerNet",
    "PowerSample",
    "Psm",
    "RiscvCore",
    "SchedulingInPast",
    "SEC",
    "SimulationError",
    "SimulationSummary",
    "SLEEP_WAIT",
    "SystemConfig",
    "TraceRecord",
    "TraceWriter",
    "UnknownState",
    "US",
    "ValidationError",
    "apply_overrides",
    "build_platform",
    "config_from_dict",
    "config_to_dict",
    "default_config",
    "default_config_raw",
    "load_config",
    "parse_duration",
    "paper_variants",
    "run_dse",
    "save_config",
    "simulate",
]
