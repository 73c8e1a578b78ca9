"""Wires a SystemConfig into a runnable platform.

Builds the functional side (core, bus, peripherals, event queue) and the
power side (battery, converters, PSMs) and couples them through the
kernel. One platform instance backs exactly one simulation run.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .bus import FuncBus
from .config import SystemConfig
from .events import EventQueue
from .iss import RiscvCore
from .kernel import Kernel, KernelConfig, SimulationSummary
from .peripherals import Microphone, PowerController
from .phase_core import PhaseCore
from .power import Battery, DcDcConverter, EfficiencyLUT, PowerNet
from .trace import TraceWriter


@dataclass
class Platform:
    config: SystemConfig
    kernel: Kernel
    power_net: PowerNet
    queue: EventQueue
    bus: FuncBus
    core: object | None = None
    mic: Microphone | None = None
    controller: PowerController | None = None

    def run(self) -> SimulationSummary:
        return self.kernel.run()


def _rail_voltage(cfg: SystemConfig, load: str) -> float:
    rail = cfg.power.loads[load]
    if rail == "bus":
        return cfg.power.bus_v
    return cfg.power.converters[rail].v_out


def build_platform(cfg: SystemConfig, trace_sink=None) -> Platform:
    power = cfg.power
    battery = Battery(
        capacity_coulomb=power.battery.capacity_coulomb,
        voc_soc=power.battery.voc_soc,
        voc_v=power.battery.voc_v,
        rs_soc=power.battery.rs_soc,
        rs_ohm=power.battery.rs_ohm,
        soc=power.battery.initial_soc,
    )
    converters = {
        name: DcDcConverter(
            name=name,
            v_out=section.v_out,
            lut=EfficiencyLUT(section.lut_i_out_a, section.lut_eta, name=f"{name}.lut"),
            placement=section.placement,
        )
        for name, section in power.converters.items()
    }
    net = PowerNet(power.bus_v, battery, converters, power.loads)

    queue = EventQueue()
    bus = FuncBus()

    core = None
    if cfg.core.kind == "phase":
        core = PhaseCore(cfg.core.phase)
    elif cfg.core.kind == "iss":
        core = RiscvCore(cfg.core.iss, bus_callback=bus.route)
        if cfg.core.program:
            program_path = Path(cfg.core.program)
            if not program_path.is_absolute() and cfg.source_path and not cfg.source_path.startswith("builtin:"):
                program_path = Path(cfg.source_path).parent / program_path
            core.load_program(program_path.read_bytes())

    clock = (lambda: core.time_ns) if core is not None else (lambda: queue.now)

    mic = None
    if cfg.mic is not None:
        mic = Microphone(
            sample_rate_hz=cfg.mic.sample_rate_hz,
            fifo_depth=cfg.mic.fifo_depth,
            buffer_len=cfg.mic.buffer_len,
            seed=cfg.mic.seed,
            i_active_a=cfg.mic.i_active_a,
            i_idle_a=cfg.mic.i_idle_a,
            supply_v=_rail_voltage(cfg, "mic"),
            clock=clock,
        )
        if cfg.mic.autostart:
            mic.start(0)

    controller = PowerController(core, mic, queue, clock)
    handlers = {PowerController.EVENT_TARGET: controller.on_event}

    for region in cfg.bus.regions:
        if region.name == "mic":
            if mic is None:
                continue
            mic.base = region.base
            bus.register_peripheral("mic", region.base, region.size, mic.handle)
        elif region.name == "sysctl":
            controller.base = region.base
            bus.register_peripheral("sysctl", region.base, region.size, controller.handle)

    samplers = []
    if core is not None:
        samplers.append(("core", core))
    if mic is not None:
        samplers.append(("mic", mic))

    kernel = Kernel(
        config=KernelConfig(
            power_timestep_ns=cfg.kernel.power_timestep_ns,
            horizon_ns=cfg.kernel.horizon_ns,
            trace_stride=cfg.kernel.trace_stride,
        ),
        power_net=net,
        core=core,
        samplers=samplers,
        queue=queue,
        event_handlers=handlers,
        trace_sink=trace_sink,
    )
    return Platform(
        config=cfg,
        kernel=kernel,
        power_net=net,
        queue=queue,
        bus=bus,
        core=core,
        mic=mic,
        controller=controller,
    )


def simulate(cfg: SystemConfig, trace_path=None) -> SimulationSummary:
    """Build and run one simulation, optionally streaming the trace to CSV."""
    if trace_path is None:
        return build_platform(cfg).run()
    with TraceWriter(trace_path) as writer:
        platform = build_platform(cfg, trace_sink=writer.write)
        return platform.run()
