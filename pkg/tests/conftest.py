import copy

import pytest

from vplat.common import MS, SEC, US


def minimal_config(**kernel) -> dict:
    """A small, fast platform: phase core + mic, unity converters, flat battery."""
    cfg = {
        "label": "test",
        "kernel": {"power_timestep": 100 * US, "horizon": SEC, "trace_stride": 1, **kernel},
        "core": {
            "kind": "phase",
            "phase": {
                "interval": 10 * MS,
                "taps": 10,
                "tiles": 2,
                "per_tap_time": 100 * US,
                "spike_time": 100 * US,
                "ready_offset": 2 * MS,
                "spike_power_w": 0.010,
                "compute_power_w": 0.004,
                "wait_power_w": 0.001,
                "leakage_w": {"SLEEP_WAIT": 0.0002, "ACTIVE": 0.0004, "CLUSTER_ACTIVE": 0.0006},
            },
        },
        "bus": {
            "regions": [
                {"name": "mic", "base": 0x4000_0000, "size": 4096},
                {"name": "sysctl", "base": 0x4001_0000, "size": 4096},
            ]
        },
        "mic": {
            "sample_rate_hz": 16_000,
            "fifo_depth": 512,
            "buffer_len": 256,
            "seed": 11,
            "i_active_a": 160e-6,
            "i_idle_a": 120e-6,
            "autostart": True,
        },
        "power": {
            "bus_v": 3.3,
            "battery": {
                "capacity_mah": 32.0,
                "initial_soc": 1.0,
                "voc": {"soc": [0.0, 1.0], "volts": [3.8, 3.8]},
                "rs": {"soc": [0.0, 1.0], "ohms": [0.0, 0.0]},
            },
            "converters": {
                "batt_dcdc": {
                    "model": "ideal",
                    "v_out": 3.3,
                    "placement": "battery_to_bus",
                    "lut": {"i_out_a": [0.0, 1.0], "eta": [1.0, 1.0]},
                },
                "core_dcdc": {
                    "model": "ideal",
                    "v_out": 1.8,
                    "placement": "bus_to_rail",
                    "lut": {"i_out_a": [0.0, 1.0], "eta": [1.0, 1.0]},
                },
            },
            "loads": {"core": "core_dcdc", "mic": "bus"},
        },
    }
    return copy.deepcopy(cfg)


@pytest.fixture
def base_dict():
    return minimal_config()
