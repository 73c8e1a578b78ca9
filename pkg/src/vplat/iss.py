"""Minimal RV32IM instruction-set simulator with cycle and energy annotation.

Scope: the RV32IM unprivileged subset (LUI, AUIPC, JAL/JALR, branches,
byte/half/word loads and stores, ALU immediate/register ops, the M
multiply/divide family) plus EBREAK as the halt instruction. Little
endian, no compressed instructions, no CSRs, no interrupts.

Each executed instruction charges cycles and energy from per-class tables,
so the timing/energy model is a pure function of the executed instruction
stream. Loads and stores that fall into the MMIO window are turned into
functional-bus requests; everything else hits flat core-local memory.
A bus handler may answer with a blocking response, which parks the core in
SLEEP_WAIT without advancing the program counter; the instruction re-issues
when the core is woken (the wait-for-data idiom of the modeled firmware).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

from .bus import BusRequest, BusResponse
from .common import ACTIVE, CORE_STATES, SLEEP_WAIT, PowerSample, SimulationError, ns_to_s

MASK32 = 0xFFFFFFFF
INT_MIN = 0x80000000

# Instruction classes used by the cycle/energy tables.
CLS_ALU = "alu"
CLS_MUL = "mul"
CLS_DIV = "div"
CLS_LOAD = "load"
CLS_STORE = "store"
CLS_BRANCH_TAKEN = "branch_taken"
CLS_BRANCH_NOT_TAKEN = "branch_not_taken"
CLS_JUMP = "jump"
INSTRUCTION_CLASSES = (
    CLS_ALU,
    CLS_MUL,
    CLS_DIV,
    CLS_LOAD,
    CLS_STORE,
    CLS_BRANCH_TAKEN,
    CLS_BRANCH_NOT_TAKEN,
    CLS_JUMP,
)

# Invented defaults, documented as calibration knobs: the modeled SoC's
# microarchitectural numbers are not public.
DEFAULT_CYCLE_TABLE = {
    CLS_ALU: 1,
    CLS_MUL: 1,
    CLS_DIV: 35,
    CLS_LOAD: 2,
    CLS_STORE: 2,
    CLS_BRANCH_TAKEN: 2,
    CLS_BRANCH_NOT_TAKEN: 1,
    CLS_JUMP: 2,
}
DEFAULT_ENERGY_TABLE = {
    CLS_ALU: 8e-12,
    CLS_MUL: 14e-12,
    CLS_DIV: 45e-12,
    CLS_LOAD: 16e-12,
    CLS_STORE: 16e-12,
    CLS_BRANCH_TAKEN: 9e-12,
    CLS_BRANCH_NOT_TAKEN: 9e-12,
    CLS_JUMP: 10e-12,
}
DEFAULT_LEAKAGE_TABLE = {SLEEP_WAIT: 0.0008, ACTIVE: 0.001, "CLUSTER_ACTIVE": 0.0015}


class CoreFault(SimulationError):
    """Illegal instruction, misaligned or unmapped access, or bus error."""

    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


ILLEGAL = "illegal_instruction"
MISALIGNED = "misaligned_access"
UNMAPPED = "unmapped_access"
BUS_ERROR = "bus_error"


@dataclass(frozen=True)
class IssConfig:
    clock_hz: int = 240_000_000
    cycle_table: Mapping[str, int] = field(default_factory=lambda: dict(DEFAULT_CYCLE_TABLE))
    energy_table: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_ENERGY_TABLE))
    leakage_w: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_LEAKAGE_TABLE))
    bus_latency_cycles: int = 10
    memory_base: int = 0x8000_0000
    memory_size: int = 1 << 20
    mmio_base: int = 0x4000_0000
    mmio_size: int = 1 << 17

    def __post_init__(self):
        if self.clock_hz <= 0:
            raise ValueError(f"clock_hz must be > 0, got {self.clock_hz}")
        for cls in INSTRUCTION_CLASSES:
            if self.cycle_table.get(cls, 0) < 1:
                raise ValueError(f"cycle_table[{cls}] must be >= 1")
            if self.energy_table.get(cls, -1.0) < 0:
                raise ValueError(f"energy_table[{cls}] must be >= 0")
        for state in CORE_STATES:
            if self.leakage_w.get(state, -1.0) < 0:
                raise ValueError(f"leakage_w[{state}] must be >= 0")
        if self.memory_size <= 0 or self.mmio_size <= 0:
            raise ValueError("memory and mmio sizes must be > 0")
        mem_end = self.memory_base + self.memory_size
        mmio_end = self.mmio_base + self.mmio_size
        if self.memory_base < mmio_end and self.mmio_base < mem_end:
            raise ValueError("memory and mmio regions must be disjoint")
        if self.bus_latency_cycles < 0:
            raise ValueError("bus_latency_cycles must be >= 0")


def _sext(value: int, bits: int) -> int:
    sign = 1 << (bits - 1)
    return (value ^ sign) - sign


def _signed(u: int) -> int:
    return u - (1 << 32) if u & INT_MIN else u


def _i_imm(w: int) -> int:
    return _sext(w >> 20, 12)


def _s_imm(w: int) -> int:
    return _sext(((w >> 25) << 5) | ((w >> 7) & 0x1F), 12)


def _b_imm(w: int) -> int:
    imm = ((w >> 31) << 12) | (((w >> 7) & 1) << 11) | (((w >> 25) & 0x3F) << 5) | (((w >> 8) & 0xF) << 1)
    return _sext(imm, 13)


def _j_imm(w: int) -> int:
    imm = ((w >> 31) << 20) | (((w >> 12) & 0xFF) << 12) | (((w >> 20) & 1) << 11) | (((w >> 21) & 0x3FF) << 1)
    return _sext(imm, 21)


class _Blocked(Exception):
    """Internal: a bus handler parked the core; re-issue on wake."""

    def __init__(self, wake_hint):
        self.wake_hint = wake_hint


class RiscvCore:
    """RV32IM core exposing the step_until / power-sample contract."""

    def __init__(self, config: IssConfig | None = None, bus_callback: Callable[[BusRequest], BusResponse] | None = None):
        self.cfg = config or IssConfig()
        self.mem = bytearray(self.cfg.memory_size)
        self.regs = [0] * 32
        self.pc = self.cfg.memory_base
        self.bus_callback = bus_callback
        self.cycle_count = 0
        self.instret = 0
        self.time_ns = 0
        self._slept_ns = 0
        self.power_state = ACTIVE
        self.halted = False
        self.blocked = False
        self._wake_hint: int | None = None
        self._dyn_j = 0.0
        self._leak_j = 0.0
        self.total_dynamic_j = 0.0

    # -- program / memory helpers -------------------------------------------------

    def load_program(self, image: bytes) -> None:
        """Place a flat little-endian binary at memory_base; entry = memory_base."""
        if len(image) > self.cfg.memory_size:
            raise ValueError(f"program of {len(image)} bytes exceeds memory size {self.cfg.memory_size}")
        self.mem[: len(image)] = image
        self.pc = self.cfg.memory_base

    def poke_word(self, address: int, value: int) -> None:
        off = address - self.cfg.memory_base
        self.mem[off : off + 4] = (value & MASK32).to_bytes(4, "little")

    def peek_word(self, address: int) -> int:
        off = address - self.cfg.memory_base
        return int.from_bytes(self.mem[off : off + 4], "little")

    # -- timing / power accounting ------------------------------------------------

    def _sync_time(self) -> None:
        new_time = self._slept_ns + self.cycle_count * 1_000_000_000 // self.cfg.clock_hz
        if new_time > self.time_ns:
            self._leak_j += self.cfg.leakage_w.get(self.power_state, 0.0) * ns_to_s(new_time - self.time_ns)
            self.time_ns = new_time

    def _sleep_to(self, t: int) -> None:
        if t > self.time_ns:
            self._leak_j += self.cfg.leakage_w.get(self.power_state, 0.0) * ns_to_s(t - self.time_ns)
            self._slept_ns += t - self.time_ns
            self.time_ns = t

    def set_power_state(self, state: str) -> None:
        if state not in CORE_STATES:
            raise ValueError(f"unknown power state {state!r}")
        self.power_state = state

    def _charge(self, cls: str) -> None:
        self.cycle_count += self.cfg.cycle_table[cls]
        energy = self.cfg.energy_table[cls]
        self._dyn_j += energy
        self.total_dynamic_j += energy
        self.instret += 1

    def sample_window(self, window_ns: int) -> PowerSample:
        window_s = ns_to_s(window_ns)
        sample = PowerSample(
            dynamic_w=self._dyn_j / window_s,
            leakage_w=self._leak_j / window_s,
            state_tag=self.power_state,
        )
        self._dyn_j = 0.0
        self._leak_j = 0.0
        return sample

    # -- execution ----------------------------------------------------------------

    def step_until(self, t: int) -> int | None:
        """Run until internal time >= t, a block, or a halt.

        Returns the timestamp of the core's next internal event (>= t when
        runnable, the wake hint when blocked) or None when halted or
        blocked with no self-known wake-up.
        """
        while self.time_ns < t:
            if self.halted or self.blocked:
                break
            self._execute_one()
        if self.blocked:
            self._sleep_to(t)
        if self.halted:
            return None
        if self.blocked:
            return self._wake_hint if (self._wake_hint or 0) >= t else None
        return self.time_ns

    def next_activity(self) -> int | None:
        """Earliest future time execution or power rates may change by itself."""
        if self.halted:
            return None
        if self.blocked:
            return self._wake_hint
        return self.time_ns

    def unblock(self) -> None:
        """Wake a core parked on a blocking bus response."""
        if self.blocked:
            self.blocked = False
            self._wake_hint = None
            self.set_power_state(ACTIVE)

    def handle_bus_response(self, resp: BusResponse) -> int:
        """Account a bus response; returns the read payload.

        Response latency converts to core cycles (rounded up) on top of the
        configured per-transaction bus latency.
        """
        if resp.error:
            raise CoreFault(BUS_ERROR, f"bus error response at pc {self.pc:#010x}")
        extra = -(-resp.latency_ns * self.cfg.clock_hz // 1_000_000_000) if resp.latency_ns else 0
        self.cycle_count += self.cfg.bus_latency_cycles + extra
        return resp.data & MASK32

    def _bus_access(self, address: int, width: int, write: bool, value: int = 0) -> int:
        if self.bus_callback is None:
            raise CoreFault(UNMAPPED, f"mmio access at {address:#010x} with no bus attached")
        req = BusRequest(address=address, write=write, data=value & MASK32, width=width)
        resp = self.bus_callback(req)
        if resp.block:
            raise _Blocked(resp.block_until)
        return self.handle_bus_response(resp)

    def _in_memory(self, address: int, width: int) -> bool:
        return self.cfg.memory_base <= address and address + width <= self.cfg.memory_base + self.cfg.memory_size

    def _in_mmio(self, address: int, width: int) -> bool:
        return self.cfg.mmio_base <= address and address + width <= self.cfg.mmio_base + self.cfg.mmio_size

    def _load(self, address: int, width: int) -> int:
        if address % width:
            raise CoreFault(MISALIGNED, f"misaligned {width}-byte load at {address:#010x}")
        if self._in_memory(address, width):
            off = address - self.cfg.memory_base
            return int.from_bytes(self.mem[off : off + width], "little")
        if self._in_mmio(address, width):
            return self._bus_access(address, width, write=False) & ((1 << (8 * width)) - 1)
        raise CoreFault(UNMAPPED, f"load from unmapped address {address:#010x}")

    def _store(self, address: int, width: int, value: int) -> None:
        if address % width:
            raise CoreFault(MISALIGNED, f"misaligned {width}-byte store at {address:#010x}")
        if self._in_memory(address, width):
            off = address - self.cfg.memory_base
            self.mem[off : off + width] = (value & ((1 << (8 * width)) - 1)).to_bytes(width, "little")
            return
        if self._in_mmio(address, width):
            self._bus_access(address, width, write=True, value=value)
            return
        raise CoreFault(UNMAPPED, f"store to unmapped address {address:#010x}")

    def _fetch(self) -> int:
        if self.pc % 4:
            raise CoreFault(MISALIGNED, f"misaligned fetch at {self.pc:#010x}")
        if not self._in_memory(self.pc, 4):
            raise CoreFault(UNMAPPED, f"fetch from unmapped address {self.pc:#010x}")
        off = self.pc - self.cfg.memory_base
        return int.from_bytes(self.mem[off : off + 4], "little")

    def _set(self, rd: int, value: int) -> None:
        if rd:
            self.regs[rd] = value & MASK32

    def _jump_to(self, target: int) -> None:
        if target % 4:
            raise CoreFault(MISALIGNED, f"jump/branch to misaligned address {target:#010x}")
        self.pc = target & MASK32

    def _execute_one(self) -> None:
        w = self._fetch()
        pc = self.pc
        opcode = w & 0x7F
        rd = (w >> 7) & 0x1F
        f3 = (w >> 12) & 0x7
        rs1 = (w >> 15) & 0x1F
        rs2 = (w >> 20) & 0x1F
        f7 = w >> 25
        regs = self.regs
        try:
            if opcode == 0x13:  # ALU immediate
                a = regs[rs1]
                imm = _i_imm(w)
                if f3 == 0:
                    self._set(rd, a + imm)
                elif f3 == 2:
                    self._set(rd, 1 if _signed(a) < imm else 0)
                elif f3 == 3:
                    self._set(rd, 1 if a < (imm & MASK32) else 0)
                elif f3 == 4:
                    self._set(rd, a ^ (imm & MASK32))
                elif f3 == 6:
                    self._set(rd, a | (imm & MASK32))
                elif f3 == 7:
                    self._set(rd, a & (imm & MASK32))
                elif f3 == 1 and f7 == 0x00:
                    self._set(rd, a << rs2)
                elif f3 == 5 and f7 == 0x00:
                    self._set(rd, a >> rs2)
                elif f3 == 5 and f7 == 0x20:
                    self._set(rd, _signed(a) >> rs2)
                else:
                    raise CoreFault(ILLEGAL, f"illegal instruction {w:#010x} at {pc:#010x}")
                self.pc = (pc + 4) & MASK32
                self._charge(CLS_ALU)
            elif opcode == 0x33:  # ALU register / M extension
                a = regs[rs1]
                b = regs[rs2]
                if f7 == 0x01:
                    sa, sb = _signed(a), _signed(b)
                    if f3 == 0:
                        self._set(rd, a * b)
                        cls = CLS_MUL
                    elif f3 == 1:
                        self._set(rd, (sa * sb) >> 32)
                        cls = CLS_MUL
                    elif f3 == 2:
                        self._set(rd, (sa * b) >> 32)
                        cls = CLS_MUL
                    elif f3 == 3:
                        self._set(rd, (a * b) >> 32)
                        cls = CLS_MUL
                    elif f3 == 4:  # DIV
                        if b == 0:
                            q = MASK32
                        elif a == INT_MIN and sb == -1:
                            q = INT_MIN
                        else:
                            q = abs(sa) // abs(sb)
                            q = -q if (sa < 0) != (sb < 0) else q
                        self._set(rd, q)
                        cls = CLS_DIV
                    elif f3 == 5:  # DIVU
                        self._set(rd, MASK32 if b == 0 else a // b)
                        cls = CLS_DIV
                    elif f3 == 6:  # REM
                        if b == 0:
                            r = sa
                        elif a == INT_MIN and sb == -1:
                            r = 0
                        else:
                            q = abs(sa) // abs(sb)
                            q = -q if (sa < 0) != (sb < 0) else q
                            r = sa - sb * q
                        self._set(rd, r)
                        cls = CLS_DIV
                    else:  # REMU
                        self._set(rd, a if b == 0 else a % b)
                        cls = CLS_DIV
                elif f7 == 0x00:
                    if f3 == 0:
                        self._set(rd, a + b)
                    elif f3 == 1:
                        self._set(rd, a << (b & 0x1F))
                    elif f3 == 2:
                        self._set(rd, 1 if _signed(a) < _signed(b) else 0)
                    elif f3 == 3:
                        self._set(rd, 1 if a < b else 0)
                    elif f3 == 4:
                        self._set(rd, a ^ b)
                    elif f3 == 5:
                        self._set(rd, a >> (b & 0x1F))
                    elif f3 == 6:
                        self._set(rd, a | b)
                    else:
                        self._set(rd, a & b)
                    cls = CLS_ALU
                elif f7 == 0x20 and f3 == 0:
                    self._set(rd, a - b)
                    cls = CLS_ALU
                elif f7 == 0x20 and f3 == 5:
                    self._set(rd, _signed(a) >> (b & 0x1F))
                    cls = CLS_ALU
                else:
                    raise CoreFault(ILLEGAL, f"illegal instruction {w:#010x} at {pc:#010x}")
                self.pc = (pc + 4) & MASK32
                self._charge(cls)
            elif opcode == 0x03:  # loads
                address = (regs[rs1] + _i_imm(w)) & MASK32
                if f3 == 0:
                    self._set(rd, _sext(self._load(address, 1), 8))
                elif f3 == 1:
                    self._set(rd, _sext(self._load(address, 2), 16))
                elif f3 == 2:
                    self._set(rd, self._load(address, 4))
                elif f3 == 4:
                    self._set(rd, self._load(address, 1))
                elif f3 == 5:
                    self._set(rd, self._load(address, 2))
                else:
                    raise CoreFault(ILLEGAL, f"illegal instruction {w:#010x} at {pc:#010x}")
                self.pc = (pc + 4) & MASK32
                self._charge(CLS_LOAD)
            elif opcode == 0x23:  # stores
                address = (regs[rs1] + _s_imm(w)) & MASK32
                if f3 == 0:
                    self._store(address, 1, regs[rs2])
                elif f3 == 1:
                    self._store(address, 2, regs[rs2])
                elif f3 == 2:
                    self._store(address, 4, regs[rs2])
                else:
                    raise CoreFault(ILLEGAL, f"illegal instruction {w:#010x} at {pc:#010x}")
                self.pc = (pc + 4) & MASK32
                self._charge(CLS_STORE)
            elif opcode == 0x63:  # branches
                a, b = regs[rs1], regs[rs2]
                if f3 == 0:
                    taken = a == b
                elif f3 == 1:
                    taken = a != b
                elif f3 == 4:
                    taken = _signed(a) < _signed(b)
                elif f3 == 5:
                    taken = _signed(a) >= _signed(b)
                elif f3 == 6:
                    taken = a < b
                elif f3 == 7:
                    taken = a >= b
                else:
                    raise CoreFault(ILLEGAL, f"illegal instruction {w:#010x} at {pc:#010x}")
                if taken:
                    self._jump_to(pc + _b_imm(w))
                    self._charge(CLS_BRANCH_TAKEN)
                else:
                    self.pc = (pc + 4) & MASK32
                    self._charge(CLS_BRANCH_NOT_TAKEN)
            elif opcode == 0x37:  # LUI
                self._set(rd, w & 0xFFFFF000)
                self.pc = (pc + 4) & MASK32
                self._charge(CLS_ALU)
            elif opcode == 0x17:  # AUIPC
                self._set(rd, pc + (w & 0xFFFFF000))
                self.pc = (pc + 4) & MASK32
                self._charge(CLS_ALU)
            elif opcode == 0x6F:  # JAL
                self._jump_to(pc + _j_imm(w))
                self._set(rd, pc + 4)
                self._charge(CLS_JUMP)
            elif opcode == 0x67 and f3 == 0:  # JALR
                target = (regs[rs1] + _i_imm(w)) & ~1
                self._jump_to(target)
                self._set(rd, pc + 4)
                self._charge(CLS_JUMP)
            elif w == 0x00100073:  # EBREAK: halt, no cycle cost
                self.halted = True
            else:
                raise CoreFault(ILLEGAL, f"illegal instruction {w:#010x} at {pc:#010x}")
        except _Blocked as blocked:
            # Park without charging; the instruction re-issues on wake.
            self.blocked = True
            self._wake_hint = blocked.wake_hint
            self.set_power_state(SLEEP_WAIT)
            return
        self._sync_time()
