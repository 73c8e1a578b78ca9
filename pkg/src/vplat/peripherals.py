"""Peripheral models wired to both buses: functional registers + PSM power.

The microphone produces one deterministic sample per period into a
drop-oldest FIFO and reports 120/160 uA (idle/sampling) to the power net.
Sample production is evaluated lazily from the timeline — counters and
FIFO contents are pure arithmetic over (config, current time) — so hour
scale simulations pay nothing per sample.

The power controller is the core's window to the platform: a register to
switch power states (sleep / active / cluster) and a blocking WAIT_EVENT
register that parks the core until the microphone's next full buffer.
"""

from __future__ import annotations

from typing import Callable

from .bus import BusRequest, BusResponse
from .common import SEC, PowerSample, SimulationError, ns_to_s
from .events import Event, EventQueue
from .power import Psm

MIC_IDLE = "IDLE"
MIC_ACTIVE = "ACTIVE"

# Register offsets (word aligned).
MIC_REG_DATA = 0x0
MIC_REG_STATUS = 0x4
MIC_REG_CTRL = 0x8
MIC_REG_OVERFLOW = 0xC

SYSCTL_REG_POWER_STATE = 0x0
SYSCTL_REG_WAIT_EVENT = 0x4

_MASK64 = (1 << 64) - 1


def _sample_value(seed: int, index: int) -> int:
    """Deterministic 16-bit sample for a given absolute sample index."""
    z = (seed + index * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & 0xFFFF


class Microphone:
    """Audio sensor: sample FIFO over the functional bus, PSM on the power bus."""

    def __init__(
        self,
        sample_rate_hz: int,
        fifo_depth: int,
        buffer_len: int,
        seed: int,
        i_active_a: float,
        i_idle_a: float,
        supply_v: float,
        clock: Callable[[], int] | None = None,
    ):
        if sample_rate_hz <= 0:
            raise ValueError(f"sample_rate_hz must be > 0, got {sample_rate_hz}")
        if fifo_depth < 1 or buffer_len < 1:
            raise ValueError("fifo_depth and buffer_len must be >= 1")
        self.sample_rate_hz = sample_rate_hz
        self.fifo_depth = fifo_depth
        self.buffer_len = buffer_len
        self.seed = seed
        self.psm = Psm({MIC_ACTIVE: i_active_a, MIC_IDLE: i_idle_a}, supply_v, MIC_IDLE)
        self._clock = clock or (lambda: 0)
        self.base = 0  # region base, assigned when registered on the bus
        self.sampling = False
        self._start_ns = 0
        self._produced_base = 0  # samples finished in earlier sampling sessions
        self._consumed = 0  # popped + dropped
        self.overflow_count = 0
        self._energy_j = 0.0
        self._last_power_ns = 0  # integration frontier (moves at state changes)
        self._window_start_ns = 0  # last power-sample boundary

    # -- timeline arithmetic -------------------------------------------------------

    def produced(self, now_ns: int) -> int:
        """Total samples produced up to `now_ns` (cumulative over sessions)."""
        if not self.sampling:
            return self._produced_base
        return self._produced_base + (now_ns - self._start_ns) * self.sample_rate_hz // SEC

    def ready_buffers(self, now_ns: int) -> int:
        """Number of full `buffer_len` blocks accumulated so far."""
        return self.produced(now_ns) // self.buffer_len

    def next_ready_time(self, now_ns: int) -> int | None:
        """Time the next full buffer completes, or None while stopped."""
        if not self.sampling:
            return None
        needed = (self.ready_buffers(now_ns) + 1) * self.buffer_len - self._produced_base
        return self._start_ns + -(-needed * SEC // self.sample_rate_hz)

    def _sync_fifo(self, now_ns: int) -> None:
        # Drop-oldest: anything beyond the FIFO depth was overwritten.
        over = self.produced(now_ns) - self._consumed - self.fifo_depth
        if over > 0:
            self.overflow_count += over
            self._consumed += over

    def fill(self, now_ns: int) -> int:
        self._sync_fifo(now_ns)
        return self.produced(now_ns) - self._consumed

    # -- functional control --------------------------------------------------------

    def start(self, now_ns: int) -> None:
        if self.sampling:
            return
        self._integrate_power(now_ns)
        self.sampling = True
        self._start_ns = now_ns
        self.psm.set_state(MIC_ACTIVE)

    def stop(self, now_ns: int) -> None:
        if not self.sampling:
            return
        self._sync_fifo(now_ns)
        self._produced_base = self.produced(now_ns)
        self._integrate_power(now_ns)
        self.sampling = False
        self.psm.set_state(MIC_IDLE)

    def handle(self, req: BusRequest) -> BusResponse:
        """Register semantics over the functional bus."""
        now = self._clock()
        offset = req.address - self.base
        if req.write:
            if offset == MIC_REG_CTRL:
                if req.data & 1:
                    self.start(now)
                else:
                    self.stop(now)
                return BusResponse()
            return BusResponse(error=True)
        if offset == MIC_REG_DATA:
            if self.fill(now) == 0:
                return BusResponse(error=True)
            value = _sample_value(self.seed, self._consumed)
            self._consumed += 1
            return BusResponse(data=value)
        if offset == MIC_REG_STATUS:
            return BusResponse(data=self.fill(now))
        if offset == MIC_REG_CTRL:
            return BusResponse(data=1 if self.sampling else 0)
        if offset == MIC_REG_OVERFLOW:
            self._sync_fifo(now)
            return BusResponse(data=self.overflow_count)
        return BusResponse(error=True)

    # -- power model -----------------------------------------------------------------

    def _integrate_power(self, now_ns: int) -> None:
        if now_ns > self._last_power_ns:
            self._energy_j += self.psm.power_w() * ns_to_s(now_ns - self._last_power_ns)
            self._last_power_ns = now_ns

    def sample_window(self, window_ns: int) -> PowerSample:
        """Average PSM power over the elapsed tick window."""
        boundary = self._window_start_ns + window_ns
        self._integrate_power(boundary)
        self._window_start_ns = boundary
        window_s = ns_to_s(window_ns)
        sample = PowerSample(
            dynamic_w=self._energy_j / window_s,
            leakage_w=0.0,
            state_tag=self.psm.state,
        )
        self._energy_j = 0.0
        return sample


class PowerController:
    """Memory-mapped sleep/cluster control and blocking wait-for-data port.

    A read of WAIT_EVENT returns (and consumes) the number of microphone
    buffers completed since the last successful wait; with none pending it
    parks the core and schedules a wake-up event for the next buffer
    boundary. The data-ready wake-up is the one cross-component event in
    the system, so it goes through the kernel's event queue.
    """

    EVENT_TARGET = "sysctl"

    def __init__(self, core, mic: Microphone | None, queue: EventQueue, clock: Callable[[], int]):
        self.core = core
        self.mic = mic
        self.queue = queue
        self._clock = clock
        self.base = 0  # region base, assigned when registered on the bus
        self._waited_buffers = 0
        self._armed_at: int | None = None

    _STATE_CODES = {"SLEEP_WAIT": 0, "ACTIVE": 1, "CLUSTER_ACTIVE": 2}
    _CODE_STATES = {v: k for k, v in _STATE_CODES.items()}

    def handle(self, req: BusRequest) -> BusResponse:
        offset = req.address - self.base
        if req.write:
            if offset == SYSCTL_REG_POWER_STATE:
                state = self._CODE_STATES.get(req.data & 0x3)
                if state is None or self.core is None:
                    return BusResponse(error=True)
                self.core.set_power_state(state)
                return BusResponse()
            return BusResponse(error=True)
        if offset == SYSCTL_REG_POWER_STATE:
            if self.core is None:
                return BusResponse(error=True)
            return BusResponse(data=self._STATE_CODES[self.core.power_state])
        if offset == SYSCTL_REG_WAIT_EVENT:
            return self._wait_event()
        return BusResponse(error=True)

    def _wait_event(self) -> BusResponse:
        if self.mic is None:
            return BusResponse(error=True)
        now = self._clock()
        available = self.mic.ready_buffers(now) - self._waited_buffers
        if available > 0:
            self._waited_buffers += available
            return BusResponse(data=available)
        wake = self.mic.next_ready_time(now)
        if wake is not None and self._armed_at != wake:
            self.queue.schedule(wake, self.EVENT_TARGET, payload="data_ready")
            self._armed_at = wake
        return BusResponse(block=True, block_until=wake)

    def on_event(self, event: Event) -> None:
        if event.payload != "data_ready":
            raise SimulationError(f"unexpected event payload {event.payload!r}")
        self._armed_at = None
        if self.core is not None:
            self.core.unblock()
