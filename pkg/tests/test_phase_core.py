import math

import pytest

from vplat.common import CLUSTER_ACTIVE, MS, SLEEP_WAIT, US, ns_to_s
from vplat.phase_core import PhaseCore, PhaseScript


def make_script(**overrides):
    params = dict(
        interval_ns=50 * MS,
        taps=40,
        tiles=4,
        per_tap_time_ns=150 * US,
        spike_time_ns=200 * US,
        ready_offset_ns=16 * MS,
        spike_power_w=0.0295,
        compute_power_w=0.0115,
        wait_power_w=0.0024,
        leakage_w={SLEEP_WAIT: 0.0008, CLUSTER_ACTIVE: 0.0015},
    )
    params.update(overrides)
    return PhaseScript(**params)


def rectangle_energy(script, span_ns):
    """Independent piecewise-constant integration over [0, span)."""
    total = 0.0
    segs = script.segments()
    t = 0
    while t < span_ns:
        offset = t % script.interval_ns
        for start, end, _state, dyn, leak in segs:
            if start <= offset < end:
                step = min(end - offset, span_ns - t)
                total += (dyn + leak) * ns_to_s(step)
                t += step
                break
    return total


class TestScript:
    def test_validation(self):
        with pytest.raises(ValueError):
            make_script(interval_ns=5 * MS)  # compute does not fit
        with pytest.raises(ValueError):
            make_script(ready_offset_ns=45 * MS)  # ready + active > interval
        with pytest.raises(ValueError):
            make_script(tiles=7)  # active not divisible into tiles
        with pytest.raises(ValueError):
            make_script(spike_time_ns=2 * MS)  # spike longer than a tile
        with pytest.raises(ValueError):
            make_script(taps=0)

    def test_segments_cover_interval(self):
        script = make_script()
        segs = script.segments()
        assert segs[0][0] == 0
        assert segs[-1][1] == script.interval_ns
        for left, right in zip(segs, segs[1:]):
            assert left[1] == right[0]

    def test_tiles_one_has_single_spike(self):
        script = make_script(tiles=1)
        spikes = [s for s in script.segments() if s[3] == script.spike_power_w and s[2] == CLUSTER_ACTIVE]
        assert len(spikes) == 1

    def test_spike_count_matches_tiles(self):
        script = make_script(tiles=4)
        spikes = [s for s in script.segments() if s[3] == script.spike_power_w and s[2] == CLUSTER_ACTIVE]
        assert len(spikes) == 4

    def test_halving_taps_halves_compute_window_and_lowers_power(self):
        full = make_script(taps=40)
        half = make_script(taps=20)
        assert half.active_ns * 2 == full.active_ns
        assert half.mean_power_w() < full.mean_power_w()

    def test_mean_power_monotone_in_taps(self):
        powers = [make_script(taps=taps).mean_power_w() for taps in (8, 16, 24, 32, 40)]
        assert all(b > a for a, b in zip(powers, powers[1:]))

    def test_mean_power_monotone_in_rate(self):
        powers = [
            make_script(interval_ns=interval).mean_power_w()
            for interval in (200 * MS, 100 * MS, 50 * MS, 25 * MS)
        ]
        assert all(b > a for a, b in zip(powers, powers[1:]))


class TestPhaseCore:
    def test_first_event_is_data_ready_time(self):
        core = PhaseCore(make_script())
        assert core.step_until(0) == 16 * MS
        assert core.state == SLEEP_WAIT

    def test_step_is_idempotent_at_same_time(self):
        core = PhaseCore(make_script())
        first = core.step_until(10 * MS)
        second = core.step_until(10 * MS)
        assert first == second
        assert core.time_ns == 10 * MS

    def test_state_timeline(self):
        script = make_script()
        core = PhaseCore(script)
        core.step_until(16 * MS)  # at compute start
        assert core.state == CLUSTER_ACTIVE
        core.step_until(16 * MS + script.active_ns)
        assert core.state == SLEEP_WAIT

    def test_energy_matches_rectangle_oracle(self):
        script = make_script()
        core = PhaseCore(script)
        span = 3 * script.interval_ns + 7 * MS
        core.step_until(span)
        sample = core.sample_window(span)
        measured = (sample.dynamic_w + sample.leakage_w) * ns_to_s(span)
        assert math.isclose(measured, rectangle_energy(script, span), rel_tol=1e-12)

    def test_windowed_sampling_is_additive(self):
        script = make_script()
        whole = PhaseCore(script)
        parts = PhaseCore(script)
        span = 2 * script.interval_ns
        whole.step_until(span)
        total_once = whole.sample_window(span).total_w * ns_to_s(span)
        total_split = 0.0
        window = 10 * MS
        for k in range(span // window):
            parts.step_until((k + 1) * window)
            total_split += parts.sample_window(window).total_w * ns_to_s(window)
        assert math.isclose(total_once, total_split, rel_tol=1e-12)

    def test_next_activity_strictly_future(self):
        core = PhaseCore(make_script())
        t = 0
        for _ in range(200):
            nxt = core.step_until(t)
            assert nxt > t
            t = nxt
