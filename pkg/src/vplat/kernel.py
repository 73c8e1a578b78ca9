"""Lockstep co-simulation kernel.

Owns global simulated time and alternates the two simulators: the
functional side (core + peripherals + event queue) is stepped to the next
power-tick boundary, then the power network advances in fixed timesteps up
to the functional time, sampling every functional model's average power
over each window. Functional time therefore always leads the power net by
at most one power timestep.

When the functional side reports no activity for a while (core sleeping
between workload intervals, or blocked on a peripheral), the kernel
integrates all whole ticks up to the next activity in one batched call.
The batch performs the identical per-tick battery arithmetic in compiled
code, so hour-scale runs stay cheap without changing semantics.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .common import HOUR, SLEEP_WAIT, SimulationError, ns_to_s
from .events import EventQueue
from .power import MaxPowerExceeded, PowerNet
from .trace import TraceRecord


class EndCause(enum.Enum):
    # Ranked: when causes coincide the higher one wins.
    BATTERY_DEPLETED = "BatteryDepleted"
    CORE_HALTED = "CoreHalted"
    HORIZON_REACHED = "HorizonReached"


@dataclass(frozen=True)
class KernelConfig:
    power_timestep_ns: int
    horizon_ns: int
    trace_stride: int = 1

    def __post_init__(self):
        if self.power_timestep_ns <= 0:
            raise ValueError(f"power_timestep must be > 0, got {self.power_timestep_ns}")
        if self.horizon_ns < self.power_timestep_ns:
            raise ValueError("horizon must be at least one power timestep")
        if self.trace_stride < 1:
            raise ValueError(f"trace_stride must be >= 1, got {self.trace_stride}")


@dataclass(frozen=True)
class SimulationSummary:
    end_time_ns: int
    end_cause: EndCause
    initial_soc: float
    final_soc: float
    avg_battery_power_w: float
    battery_energy_j: float
    converter_efficiency: Mapping[str, float]
    sampled_energy_j: Mapping[str, float]
    power_ticks: int

    @property
    def dsoc(self) -> float:
        return self.initial_soc - self.final_soc

    @property
    def dsoc_pct(self) -> float:
        return self.dsoc * 100.0

    @property
    def sim_hours(self) -> float:
        return self.end_time_ns / HOUR

    @property
    def dsoc_per_hour_pct(self) -> float:
        return self.dsoc_pct / self.sim_hours if self.sim_hours > 0 else 0.0

    @property
    def lifetime_hours(self) -> float:
        """Linear extrapolation of the observed discharge rate to full depletion."""
        rate = self.dsoc_per_hour_pct
        if rate <= 0.0:
            return float("inf")
        return self.initial_soc * 100.0 / rate


class Kernel:
    """Couples one functional system with one power network, single-threaded."""

    def __init__(
        self,
        config: KernelConfig,
        power_net: PowerNet,
        core=None,
        samplers: Sequence[tuple[str, object]] = (),
        queue: EventQueue | None = None,
        event_handlers: Mapping[str, Callable] | None = None,
        trace_sink: Callable[[TraceRecord], None] | None = None,
    ):
        self.config = config
        self.power_net = power_net
        self.core = core
        self.samplers = list(samplers)
        self.queue = queue if queue is not None else EventQueue()
        self.event_handlers = dict(event_handlers or {})
        self.trace_sink = trace_sink
        self.on_align: Callable[[int, int], None] | None = None  # test/debug hook
        self.sampled_energy_j = {name: 0.0 for name, _ in self.samplers}
        self._tick_index = 0
        self._power_time = 0

    # -- spec'd alignment primitive --------------------------------------------------

    def align(self, functional_ns: int, power_ns: int) -> int:
        """Combine the two simulator times into the global time.

        Guards the lockstep bound: the two clocks may never drift apart by
        more than one power timestep.
        """
        if abs(functional_ns - power_ns) > self.config.power_timestep_ns:
            raise SimulationError(
                f"lockstep violation: functional at {functional_ns}ns, "
                f"power at {power_ns}ns, timestep {self.config.power_timestep_ns}ns"
            )
        if self.on_align is not None:
            self.on_align(functional_ns, power_ns)
        return max(functional_ns, power_ns)

    # -- functional side --------------------------------------------------------------

    def _dispatch(self, event) -> None:
        handler = self.event_handlers.get(event.target)
        if handler is None:
            raise SimulationError(f"event for unknown target {event.target!r}")
        handler(event)

    def _advance_functional(self, boundary: int) -> tuple[int, int | None]:
        """Step core and deliver due events until functional time reaches `boundary`.

        Returns (functional_time, halt_time) where halt_time is set when the
        core halted at or before the boundary.
        """
        core = self.core
        queue = self.queue
        while True:
            due = queue.head_due()
            stop = boundary if due is None or due > boundary else due
            if core is not None and not core.halted:
                core.step_until(stop)
                if core.halted:
                    return core.time_ns, core.time_ns
            if due is not None and due <= stop:
                queue.advance_to(due)
                while queue.head_due() == due:
                    self._dispatch(queue.pop_next())
                continue
            break
        queue.advance_to(boundary)
        if core is not None and not core.halted:
            # A blocked or idle core's clock still tracks the boundary.
            return max(core.time_ns, boundary), None
        return boundary, None

    def _next_activity(self) -> int | None:
        """Earliest future functional event (core activity or queued event)."""
        candidates = []
        if self.core is not None:
            t = self.core.next_activity()
            if t is not None:
                candidates.append(t)
        due = self.queue.head_due()
        if due is not None:
            candidates.append(due)
        return min(candidates) if candidates else None

    # -- power side -------------------------------------------------------------------

    def _emit_records(self, result, samples, bus_state, window_start_ns: int, tick_ns: int) -> None:
        core_sample = samples.get("core")
        core_state = core_sample.state_tag if core_sample is not None else SLEEP_WAIT
        loads = {name: s.total_w for name, s in samples.items()}
        eta = bus_state.eta
        for pos, offset in enumerate(result.emit_offsets):
            self.trace_sink(
                TraceRecord(
                    t_ns=window_start_ns + offset * tick_ns,
                    core_state=core_state,
                    load_core_w=loads.get("core", 0.0),
                    load_mic_w=loads.get("mic", 0.0),
                    bus_w=bus_state.total_load_w,
                    eta_batt_dcdc=eta.get("batt_dcdc", 1.0),
                    eta_core_dcdc=eta.get("core_dcdc", 1.0),
                    batt_i_a=float(result.emit_i[pos]),
                    batt_v=float(result.emit_v[pos]),
                    soc=float(result.emit_soc[pos]),
                )
            )

    def _power_window(self, n_ticks: int, tick_ns: int) -> int:
        """Integrate `n_ticks` power ticks of width `tick_ns` from the current time.

        Returns the integrator status code (0 ok, 1 depleted, 2 max power).
        """
        window_ns = n_ticks * tick_ns
        window_s = window_ns * 1e-9
        loads = {}
        samples = {}
        energy = self.sampled_energy_j
        for name, model in self.samplers:
            sample = model.sample_window(window_ns)
            samples[name] = sample
            total = sample.total_w
            loads[name] = total
            energy[name] += total * window_s
        bus_state = self.power_net.solve_chain(loads)
        stride = self.config.trace_stride
        idx = self._tick_index
        if self.trace_sink is not None and (idx + n_ticks) // stride > idx // stride:
            result = self.power_net.integrate(bus_state, n_ticks, tick_ns, emit_every=stride, emit_phase=idx)
            if result.emit_offsets:
                self._emit_records(result, samples, bus_state, self._power_time, tick_ns)
            status = {"ok": 0, "depleted": 1, "max_power": 2}[result.status]
            ticks_done = result.ticks_done
        else:
            status, ticks_done = self.power_net.integrate_fast(bus_state, n_ticks, tick_ns)
        self._tick_index = idx + ticks_done
        self._power_time += ticks_done * tick_ns
        if status == 2:
            raise MaxPowerExceeded(
                f"battery cannot deliver {bus_state.battery_demand_w:.6g} W "
                f"demanded at t={self._power_time}ns"
            )
        return status

    # -- main loop ----------------------------------------------------------------------

    def run(self) -> SimulationSummary:
        cfg = self.config
        dt = cfg.power_timestep_ns
        end = cfg.horizon_ns
        cause: EndCause | None = None
        initial_soc = self.power_net.battery.soc
        while cause is None and self._power_time < end:
            p_time = self._power_time
            # Whole ticks until the next functional activity integrate as one
            # constant-power window; otherwise take a single (possibly
            # partial) tick.
            activity = self._next_activity()
            limit = end if activity is None else min(activity, end)
            n_ticks = (limit - p_time) // dt
            if n_ticks >= 1:
                tick_ns = dt
                target = p_time + n_ticks * dt
            else:
                n_ticks = 1
                target = min(p_time + dt, end)
                tick_ns = target - p_time
            f_time, halt_time = self._advance_functional(target)
            if halt_time is not None:
                # Integrate the tail up to the halt instant, then stop.
                tail = halt_time - p_time
                if tail > 0:
                    status = self._power_window(1, tail)
                    if status == 1:
                        cause = EndCause.BATTERY_DEPLETED
                        break
                cause = EndCause.CORE_HALTED
                break
            status = self._power_window(n_ticks, tick_ns)
            if status == 1:
                cause = EndCause.BATTERY_DEPLETED
            else:
                self.align(f_time, self._power_time)
        if cause is None:
            cause = EndCause.HORIZON_REACHED
        end_time = self._power_time
        avg_power = self.power_net.battery_energy_j / ns_to_s(end_time) if end_time else 0.0
        return SimulationSummary(
            end_time_ns=end_time,
            end_cause=cause,
            initial_soc=initial_soc,
            final_soc=self.power_net.battery.soc,
            avg_battery_power_w=avg_power,
            battery_energy_j=self.power_net.battery_energy_j,
            converter_efficiency={name: self.power_net.mean_efficiency(name) for name in self.power_net.converters},
            sampled_energy_j=dict(self.sampled_energy_j),
            power_ticks=self._tick_index,
        )
