"""Phase-scripted workload core.

Replays the power-state timeline of the audio-filtering application as a
deterministic script: each interval sleeps until the sensor buffer is
ready, runs the filter as `tiles` compute tiles (each opening with a short
power spike at the inner-loop start), then sleeps until the next interval.

The script is exact in integer nanoseconds, so energy accounting is a sum
of rectangle areas with no quadrature error. This is the default core for
the design-space exploration runs; the instruction-set simulator covers
instruction-accurate experiments.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import Mapping

from .common import CLUSTER_ACTIVE, CORE_STATES, SLEEP_WAIT, PowerSample, ns_to_s


@dataclass(frozen=True)
class PhaseScript:
    interval_ns: int
    taps: int
    tiles: int
    per_tap_time_ns: int
    spike_time_ns: int
    ready_offset_ns: int
    spike_power_w: float
    compute_power_w: float
    wait_power_w: float
    leakage_w: Mapping[str, float] = field(default_factory=dict)

    @property
    def active_ns(self) -> int:
        return self.taps * self.per_tap_time_ns

    def __post_init__(self):
        if self.taps < 1 or self.tiles < 1 or self.per_tap_time_ns < 1:
            raise ValueError("taps, tiles and per_tap_time must be >= 1")
        if self.active_ns >= self.interval_ns:
            raise ValueError(
                f"compute window {self.active_ns}ns must fit in the interval {self.interval_ns}ns"
            )
        if self.ready_offset_ns < 0 or self.ready_offset_ns + self.active_ns > self.interval_ns:
            raise ValueError("ready_offset + compute window exceeds the interval")
        if self.active_ns % self.tiles:
            raise ValueError(f"compute window {self.active_ns}ns must divide evenly into {self.tiles} tiles")
        tile_ns = self.active_ns // self.tiles
        if not 0 <= self.spike_time_ns <= tile_ns:
            raise ValueError(f"spike time {self.spike_time_ns}ns must fit in one tile ({tile_ns}ns)")
        for value in (self.spike_power_w, self.compute_power_w, self.wait_power_w):
            if value < 0:
                raise ValueError("script powers must be >= 0")
        for state, leak in self.leakage_w.items():
            if state not in CORE_STATES:
                raise ValueError(f"unknown power state in leakage table: {state!r}")
            if leak < 0:
                raise ValueError(f"leakage for {state} must be >= 0")

    def segments(self) -> list[tuple[int, int, str, float, float]]:
        """Piecewise-constant timeline of one interval.

        Returns (start_offset, end_offset, state, dynamic_w, leakage_w)
        tuples covering [0, interval) without gaps.
        """
        leak_sleep = self.leakage_w.get(SLEEP_WAIT, 0.0)
        leak_cluster = self.leakage_w.get(CLUSTER_ACTIVE, 0.0)
        segs = []
        ready = self.ready_offset_ns
        if ready > 0:
            segs.append((0, ready, SLEEP_WAIT, self.wait_power_w, leak_sleep))
        tile_ns = self.active_ns // self.tiles
        for i in range(self.tiles):
            t0 = ready + i * tile_ns
            if self.spike_time_ns > 0:
                segs.append((t0, t0 + self.spike_time_ns, CLUSTER_ACTIVE, self.spike_power_w, leak_cluster))
            if self.spike_time_ns < tile_ns:
                segs.append((t0 + self.spike_time_ns, t0 + tile_ns, CLUSTER_ACTIVE, self.compute_power_w, leak_cluster))
        end_active = ready + self.active_ns
        if end_active < self.interval_ns:
            segs.append((end_active, self.interval_ns, SLEEP_WAIT, self.wait_power_w, leak_sleep))
        return segs

    def mean_power_w(self) -> float:
        """Average total power over one interval (dynamic + leakage)."""
        energy = 0.0
        for start, end, _state, dyn, leak in self.segments():
            energy += (dyn + leak) * ns_to_s(end - start)
        return energy / ns_to_s(self.interval_ns)


class PhaseCore:
    """Core driven by a PhaseScript; never faults, never halts."""

    def __init__(self, script: PhaseScript):
        self.script = script
        self._segs = script.segments()
        self._starts = [seg[0] for seg in self._segs]
        self.time_ns = 0
        self._dyn_j = 0.0
        self._leak_j = 0.0
        self.total_dynamic_j = 0.0
        self.halted = False

    def _segment_at(self, offset_ns: int) -> tuple[int, int, str, float, float]:
        return self._segs[bisect.bisect_right(self._starts, offset_ns) - 1]

    @property
    def state(self) -> str:
        _k, off = divmod(self.time_ns, self.script.interval_ns)
        return self._segment_at(off)[2]

    def step_until(self, t: int) -> int:
        """Advance the script to time t; returns the next segment boundary."""
        interval = self.script.interval_ns
        now = self.time_ns
        while now < t:
            k, off = divmod(now, interval)
            seg = self._segment_at(off)
            stop = min(t, k * interval + seg[1])
            span_s = ns_to_s(stop - now)
            self._dyn_j += seg[3] * span_s
            self._leak_j += seg[4] * span_s
            now = stop
        self.time_ns = now
        return self.next_activity()

    def next_activity(self) -> int:
        """Absolute time of the next power-state or power-level change."""
        k, off = divmod(self.time_ns, self.script.interval_ns)
        return k * self.script.interval_ns + self._segment_at(off)[1]

    def sample_window(self, window_ns: int) -> PowerSample:
        """Average power over the elapsed tick window; resets the accumulators."""
        window_s = ns_to_s(window_ns)
        sample = PowerSample(
            dynamic_w=self._dyn_j / window_s,
            leakage_w=self._leak_j / window_s,
            state_tag=self.state,
        )
        self.total_dynamic_j += self._dyn_j
        self._dyn_j = 0.0
        self._leak_j = 0.0
        return sample
