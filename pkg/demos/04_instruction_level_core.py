"""
Instruction-level simulation: a real program on the RV32IM core
===============================================================

Assembles a small firmware image by hand (no toolchain needed): the
program waits for the microphone's data-ready event (parking the core in
SLEEP_WAIT), raises the cluster power state, reads and accumulates a few
samples over the functional bus, then halts. The kernel couples every
instruction's cycle and energy cost to the power network.
"""

from vplat import MS, config_from_dict, build_platform
from vplat.config import default_config_raw

# -- minimal instruction encoders ------------------------------------------------


def i_type(imm, rs1, f3, rd, op):
    return ((imm & 0xFFF) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | op


def addi(rd, rs1, imm):
    return i_type(imm, rs1, 0, rd, 0x13)


def lw(rd, rs1, imm):
    return i_type(imm, rs1, 2, rd, 0x03)


def sw(rs2, rs1, imm):
    imm &= 0xFFF
    return ((imm >> 5) << 25) | (rs2 << 20) | (rs1 << 15) | (2 << 12) | ((imm & 0x1F) << 7) | 0x23


def lui(rd, imm20):
    return ((imm20 & 0xFFFFF) << 12) | (rd << 7) | 0x37


def add(rd, rs1, rs2):
    return (rs2 << 20) | (rs1 << 15) | (rd << 7) | 0x33


def bne(rs1, rs2, off):
    word = 0x63 | (1 << 12) | (rs2 << 20) | (rs1 << 15)
    word |= ((off >> 12) & 1) << 31 | ((off >> 5) & 0x3F) << 25
    word |= ((off >> 1) & 0xF) << 8 | ((off >> 11) & 1) << 7
    return word


EBREAK = 0x00100073

program = [
    lui(1, 0x40010),  # x1 = sysctl base
    lui(2, 0x40000),  # x2 = mic base
    lw(3, 1, 4),      # WAIT_EVENT: parks the core until a buffer is ready
    addi(4, 0, 2),
    sw(4, 1, 0),      # power state := CLUSTER_ACTIVE
    addi(5, 0, 8),    # read 8 samples
    add(6, 0, 0),     # checksum
    lw(7, 2, 0),      # mic DATA
    add(6, 6, 7),
    addi(5, 5, -1),
    bne(5, 0, -12),   # loop over the three instructions above
    addi(4, 0, 1),
    sw(4, 1, 0),      # power state := ACTIVE
    EBREAK,
]

raw = default_config_raw()
raw["core"] = {"kind": "iss", "iss": {"clock_hz": 240_000_000}}
raw["kernel"]["horizon"] = 100 * MS
raw["kernel"]["trace_stride"] = 10**9

platform = build_platform(config_from_dict(raw))
platform.core.load_program(b"".join(w.to_bytes(4, "little") for w in program))
summary = platform.run()

core = platform.core
print(f"end cause            : {summary.end_cause.value}")
print(f"halted at            : {core.time_ns / 1e6:.3f} ms (slept until the 16 ms buffer boundary)")
print(f"instructions retired : {core.instret}")
print(f"cycles               : {core.cycle_count} (includes bus latency per mmio access)")
print(f"sample checksum (x6) : {core.regs[6]:#010x}")
print(f"instruction energy   : {core.total_dynamic_j * 1e12:.1f} pJ")
print(f"battery energy       : {summary.battery_energy_j * 1e6:.2f} uJ over {summary.end_time_ns / 1e6:.1f} ms")
