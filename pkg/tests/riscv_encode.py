"""Hand encoders for RV32IM instruction words, used to build test programs.

No external toolchain: programs are assembled from these helpers and a tiny
two-pass label resolver.
"""

from __future__ import annotations


def _r(f7, rs2, rs1, f3, rd, op):
    return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | op


def _i(imm, rs1, f3, rd, op):
    return ((imm & 0xFFF) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | op


def _s(imm, rs2, rs1, f3, op):
    return (((imm >> 5) & 0x7F) << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | ((imm & 0x1F) << 7) | op


def _b(imm, rs2, rs1, f3):
    word = 0x63
    word |= ((imm >> 12) & 1) << 31
    word |= ((imm >> 5) & 0x3F) << 25
    word |= (rs2 << 20) | (rs1 << 15) | (f3 << 12)
    word |= ((imm >> 1) & 0xF) << 8
    word |= ((imm >> 11) & 1) << 7
    return word


def _u(imm20, rd, op):
    return ((imm20 & 0xFFFFF) << 12) | (rd << 7) | op


def _j(imm, rd):
    word = 0x6F | (rd << 7)
    word |= ((imm >> 20) & 1) << 31
    word |= ((imm >> 1) & 0x3FF) << 21
    word |= ((imm >> 11) & 1) << 20
    word |= ((imm >> 12) & 0xFF) << 12
    return word


def lui(rd, imm20):
    return _u(imm20, rd, 0x37)


def auipc(rd, imm20):
    return _u(imm20, rd, 0x17)


def jal(rd, offset):
    return _j(offset, rd)


def jalr(rd, rs1, imm):
    return _i(imm, rs1, 0, rd, 0x67)


def beq(rs1, rs2, off):
    return _b(off, rs2, rs1, 0)


def bne(rs1, rs2, off):
    return _b(off, rs2, rs1, 1)


def blt(rs1, rs2, off):
    return _b(off, rs2, rs1, 4)


def bge(rs1, rs2, off):
    return _b(off, rs2, rs1, 5)


def bltu(rs1, rs2, off):
    return _b(off, rs2, rs1, 6)


def bgeu(rs1, rs2, off):
    return _b(off, rs2, rs1, 7)


def lb(rd, rs1, imm):
    return _i(imm, rs1, 0, rd, 0x03)


def lh(rd, rs1, imm):
    return _i(imm, rs1, 1, rd, 0x03)


def lw(rd, rs1, imm):
    return _i(imm, rs1, 2, rd, 0x03)


def lbu(rd, rs1, imm):
    return _i(imm, rs1, 4, rd, 0x03)


def lhu(rd, rs1, imm):
    return _i(imm, rs1, 5, rd, 0x03)


def sb(rs2, rs1, imm):
    return _s(imm, rs2, rs1, 0, 0x23)


def sh(rs2, rs1, imm):
    return _s(imm, rs2, rs1, 1, 0x23)


def sw(rs2, rs1, imm):
    return _s(imm, rs2, rs1, 2, 0x23)


def addi(rd, rs1, imm):
    return _i(imm, rs1, 0, rd, 0x13)


def slti(rd, rs1, imm):
    return _i(imm, rs1, 2, rd, 0x13)


def sltiu(rd, rs1, imm):
    return _i(imm, rs1, 3, rd, 0x13)


def xori(rd, rs1, imm):
    return _i(imm, rs1, 4, rd, 0x13)


def ori(rd, rs1, imm):
    return _i(imm, rs1, 6, rd, 0x13)


def andi(rd, rs1, imm):
    return _i(imm, rs1, 7, rd, 0x13)


def slli(rd, rs1, shamt):
    return _i(shamt, rs1, 1, rd, 0x13)


def srli(rd, rs1, shamt):
    return _i(shamt, rs1, 5, rd, 0x13)


def srai(rd, rs1, shamt):
    return _i(0x400 | shamt, rs1, 5, rd, 0x13)


def add(rd, rs1, rs2):
    return _r(0x00, rs2, rs1, 0, rd, 0x33)


def sub(rd, rs1, rs2):
    return _r(0x20, rs2, rs1, 0, rd, 0x33)


def sll(rd, rs1, rs2):
    return _r(0x00, rs2, rs1, 1, rd, 0x33)


def slt(rd, rs1, rs2):
    return _r(0x00, rs2, rs1, 2, rd, 0x33)


def sltu(rd, rs1, rs2):
    return _r(0x00, rs2, rs1, 3, rd, 0x33)


def xor(rd, rs1, rs2):
    return _r(0x00, rs2, rs1, 4, rd, 0x33)


def srl(rd, rs1, rs2):
    return _r(0x00, rs2, rs1, 5, rd, 0x33)


def sra(rd, rs1, rs2):
    return _r(0x20, rs2, rs1, 5, rd, 0x33)


def or_(rd, rs1, rs2):
    return _r(0x00, rs2, rs1, 6, rd, 0x33)


def and_(rd, rs1, rs2):
    return _r(0x00, rs2, rs1, 7, rd, 0x33)


def mul(rd, rs1, rs2):
    return _r(0x01, rs2, rs1, 0, rd, 0x33)


def mulh(rd, rs1, rs2):
    return _r(0x01, rs2, rs1, 1, rd, 0x33)


def mulhsu(rd, rs1, rs2):
    return _r(0x01, rs2, rs1, 2, rd, 0x33)


def mulhu(rd, rs1, rs2):
    return _r(0x01, rs2, rs1, 3, rd, 0x33)


def div(rd, rs1, rs2):
    return _r(0x01, rs2, rs1, 4, rd, 0x33)


def divu(rd, rs1, rs2):
    return _r(0x01, rs2, rs1, 5, rd, 0x33)


def rem(rd, rs1, rs2):
    return _r(0x01, rs2, rs1, 6, rd, 0x33)


def remu(rd, rs1, rs2):
    return _r(0x01, rs2, rs1, 7, rd, 0x33)


EBREAK = 0x00100073


class Asm:
    """Two-pass mini assembler: emit words, mark labels, patch branches."""

    def __init__(self):
        self.words: list[int] = []
        self.labels: dict[str, int] = {}
        self._fixups: list[tuple[int, str, object]] = []

    @property
    def pc(self) -> int:
        return len(self.words) * 4

    def label(self, name: str) -> None:
        self.labels[name] = self.pc

    def emit(self, word: int) -> None:
        self.words.append(word & 0xFFFFFFFF)

    def branch(self, encoder, rs1: int, rs2: int, target: str) -> None:
        self._fixups.append((len(self.words), target, ("b", encoder, rs1, rs2)))
        self.words.append(0)

    def jump(self, rd: int, target: str) -> None:
        self._fixups.append((len(self.words), target, ("j", rd)))
        self.words.append(0)

    def assemble(self) -> bytes:
        for index, target, spec in self._fixups:
            offset = self.labels[target] - index * 4
            if spec[0] == "b":
                _kind, encoder, rs1, rs2 = spec
                self.words[index] = encoder(rs1, rs2, offset)
            else:
                self.words[index] = jal(spec[1], offset)
        return b"".join(word.to_bytes(4, "little") for word in self.words)


def fir_program(coef_addr: int, sample_addr: int, out_addr: int, taps: int, n_samples: int) -> bytes:
    """FIR filter: y[n] = sum_k c[k]*x[n-k] for n in [taps-1, n_samples)."""
    asm = Asm()
    asm.emit(lui(5, coef_addr >> 12))
    asm.emit(addi(5, 5, coef_addr & 0xFFF))
    asm.emit(lui(6, sample_addr >> 12))
    asm.emit(addi(6, 6, sample_addr & 0xFFF))
    asm.emit(lui(7, out_addr >> 12))
    asm.emit(addi(7, 7, out_addr & 0xFFF))
    asm.emit(addi(8, 0, taps - 1))  # n
    asm.emit(addi(13, 0, taps))
    asm.emit(addi(14, 0, n_samples))
    asm.label("outer")
    asm.emit(add(10, 0, 0))  # acc
    asm.emit(add(9, 0, 0))  # k
    asm.label("inner")
    asm.emit(sub(11, 8, 9))
    asm.emit(slli(11, 11, 2))
    asm.emit(add(11, 11, 6))
    asm.emit(lw(11, 11, 0))
    asm.emit(slli(12, 9, 2))
    asm.emit(add(12, 12, 5))
    asm.emit(lw(12, 12, 0))
    asm.emit(mul(11, 11, 12))
    asm.emit(add(10, 10, 11))
    asm.emit(addi(9, 9, 1))
    asm.branch(blt, 9, 13, "inner")
    asm.emit(addi(11, 8, -(taps - 1)))
    asm.emit(slli(11, 11, 2))
    asm.emit(add(11, 11, 7))
    asm.emit(sw(10, 11, 0))
    asm.emit(addi(8, 8, 1))
    asm.branch(blt, 8, 14, "outer")
    asm.emit(EBREAK)
    return asm.assemble()
