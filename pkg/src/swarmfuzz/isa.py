"""Toy instruction set: encoding, decoding, operand ranges and program formats.

Word layout (32 bits, little-endian on disk)::

    [5:0]   opcode  = type << 3 | func
    [9:6]   rd
    [13:10] rs1
    [17:14] rs2
    [29:18] imm     (signed 12-bit)
    [31:30] spare   (ignored by both interpreters)

Every 32-bit word decodes. Words whose type/func pair is unassigned decode
to an ``illegal`` instruction, which raises an illegal-instruction exception
when executed. Fields a format does not use are don't-care bits.
"""
from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

NUM_REGS = 16
WORD_MASK = 0xFFFFFFFF

ITYPES = ("ALU-R", "ALU-I", "LOAD", "STORE", "BRANCH", "SYSTEM")
NUM_TYPES = len(ITYPES)

# mnemonic lists per type, index == func
_TYPE_OPCODES = {
    "ALU-R": ("add", "sub", "and", "or", "xor", "sll", "srl", "mul"),
    "ALU-I": ("addi", "andi", "ori", "xori", "slli", "srli", "srai", "slti"),
    "LOAD": ("lw", "lh", "lhu", "lb", "lbu"),
    "STORE": ("sw", "sh", "sb"),
    "BRANCH": ("beq", "bne", "blt", "bge", "bltu", "bgeu"),
    "SYSTEM": ("csrrw", "csrrs", "csrrc", "ecall", "ebreak", "fence", "mret"),
}

# Operand formats. Text operand order follows the format:
#   R  rd,rs1,rs2      I  rd,rs1,imm     SH rd,rs1,shamt   L  rd,rs1,imm
#   S  rs2,rs1,imm     B  rs1,rs2,skip   C  rd,csr,rs1     Z  rd,rs1,imm (all zero)
_FORMAT = {
    "ALU-R": "R",
    "ALU-I": "I",
    "LOAD": "L",
    "STORE": "S",
    "BRANCH": "B",
}
_SYSTEM_FORMAT = {"csrrw": "C", "csrrs": "C", "csrrc": "C",
                  "ecall": "Z", "ebreak": "Z", "fence": "Z", "mret": "Z"}

# register fields each format reads or writes
FORMAT_REGS = {
    "R": ("rd", "rs1", "rs2"),
    "I": ("rd", "rs1"),
    "SH": ("rd", "rs1"),
    "L": ("rd", "rs1"),
    "S": ("rs1", "rs2"),
    "B": ("rs1", "rs2"),
    "C": ("rd", "rs1"),
    "Z": (),
}

# legal immediate range per format (inclusive); None means no immediate operand
MEM_OFFSET_RANGE = (-128, 127)
FORMAT_IMM_RANGE = {
    "R": None,
    "I": (-2048, 2047),
    "SH": (0, 31),
    "L": MEM_OFFSET_RANGE,
    "S": MEM_OFFSET_RANGE,
    "B": (0, 7),
    "C": (0, 15),
    "Z": None,
}

FIELDS = ("opcode", "rd", "rs1", "rs2", "imm")
FIELD_SHIFT = {"opcode": 0, "rd": 6, "rs1": 10, "rs2": 14, "imm": 18, "spare": 30}
FIELD_WIDTH = {"opcode": 6, "rd": 4, "rs1": 4, "rs2": 4, "imm": 12, "spare": 2}

CSR_NAMES = ("status", "tvec", "epc", "cause", "instret", "scratch", "timer", "custom")
CSR_IDS = {name: i for i, name in enumerate(CSR_NAMES)}


@dataclass(frozen=True)
class OpcodeInfo:
    mnemonic: str
    itype: str
    type_index: int
    func: int
    fmt: str

    @property
    def opcode(self) -> int:
        return self.type_index << 3 | self.func


def _build_table():
    table = {}
    for t, itype in enumerate(ITYPES):
        for func, mn in enumerate(_TYPE_OPCODES[itype]):
            if itype == "SYSTEM":
                fmt = _SYSTEM_FORMAT[mn]
            elif mn in ("slli", "srli", "srai"):
                fmt = "SH"
            else:
                fmt = _FORMAT[itype]
            table[mn] = OpcodeInfo(mn, itype, t, func, fmt)
    return table


OPCODES = _build_table()
OPCODE_BY_VALUE = {info.opcode: info for info in OPCODES.values()}
OPCODES_BY_TYPE = {t: tuple(OPCODES[mn] for mn in _TYPE_OPCODES[t]) for t in ITYPES}


def _get(word: int, name: str) -> int:
    return (word >> FIELD_SHIFT[name]) & ((1 << FIELD_WIDTH[name]) - 1)


def sign_extend(value: int, bits: int) -> int:
    value &= (1 << bits) - 1
    return value - (1 << bits) if value >> (bits - 1) else value


@dataclass(frozen=True)
class Instruction:
    """Decoded view of one encoding word.

    ``info`` is None for unassigned opcodes; such instructions are still
    representable and round-trip through ``encode``.
    """

    encoding: int
    info: Optional[OpcodeInfo]
    rd: int
    rs1: int
    rs2: int
    imm: int

    @property
    def mnemonic(self) -> str:
        return self.info.mnemonic if self.info else "illegal"

    @property
    def itype(self) -> Optional[str]:
        return self.info.itype if self.info else None

    @property
    def fmt(self) -> Optional[str]:
        return self.info.fmt if self.info else None

    @property
    def csr(self) -> int:
        return self.imm & 0xFFF

    def is_canonical(self) -> bool:
        """True when every bit outside the format's operand fields is zero."""
        if self.info is None or _get(self.encoding, "spare"):
            return False
        used = set(FORMAT_REGS[self.fmt])
        for reg in ("rd", "rs1", "rs2"):
            if reg not in used and getattr(self, reg):
                return False
        if FORMAT_IMM_RANGE[self.fmt] is None and self.imm:
            return False
        return True


def decode(word: int) -> Instruction:
    word &= WORD_MASK
    return Instruction(
        encoding=word,
        info=OPCODE_BY_VALUE.get(_get(word, "opcode")),
        rd=_get(word, "rd"),
        rs1=_get(word, "rs1"),
        rs2=_get(word, "rs2"),
        imm=sign_extend(_get(word, "imm"), 12),
    )


def pack(opcode: int, rd: int = 0, rs1: int = 0, rs2: int = 0, imm: int = 0, spare: int = 0) -> int:
    word = 0
    for name, value in (("opcode", opcode), ("rd", rd), ("rs1", rs1), ("rs2", rs2),
                        ("imm", imm), ("spare", spare)):
        word |= (value & ((1 << FIELD_WIDTH[name]) - 1)) << FIELD_SHIFT[name]
    return word


def encode(instr: Instruction) -> int:
    return instr.encoding


def assemble(mnemonic: str, rd: int = 0, rs1: int = 0, rs2: int = 0, imm: int = 0) -> int:
    """Encode a mnemonic with named operand fields."""
    info = OPCODES[mnemonic]
    lo, hi = -2048, 2047
    if not (0 <= rd < NUM_REGS and 0 <= rs1 < NUM_REGS and 0 <= rs2 < NUM_REGS):
        raise ValueError(f"register out of range in {mnemonic}")
    if not lo <= imm <= hi:
        raise ValueError(f"immediate {imm} does not fit 12 bits")
    return pack(info.opcode, rd, rs1, rs2, imm)


def field_value(word: int, name: str) -> int:
    return _get(word, name)


def with_field(word: int, name: str, value: int) -> int:
    mask = ((1 << FIELD_WIDTH[name]) - 1) << FIELD_SHIFT[name]
    return (word & ~mask & WORD_MASK) | ((value << FIELD_SHIFT[name]) & mask)


# -- random generation -------------------------------------------------------

def random_operands(info: OpcodeInfo, rng: np.random.Generator) -> int:
    """Encode ``info`` with operands drawn uniformly from their legal ranges."""
    regs = {r: 0 for r in ("rd", "rs1", "rs2")}
    for r in FORMAT_REGS[info.fmt]:
        regs[r] = int(rng.integers(NUM_REGS))
    imm = 0
    rng_range = FORMAT_IMM_RANGE[info.fmt]
    if rng_range is not None:
        imm = int(rng.integers(rng_range[0], rng_range[1] + 1))
    return pack(info.opcode, imm=imm, **regs)


def random_instruction(rng: np.random.Generator, itype: Optional[str] = None) -> int:
    """A fresh legal instruction word; the type is uniform unless given."""
    if itype is None:
        itype = ITYPES[int(rng.integers(NUM_TYPES))]
    choices = OPCODES_BY_TYPE[itype]
    info = choices[int(rng.integers(len(choices)))]
    return random_operands(info, rng)


# -- programs ----------------------------------------------------------------

@dataclass(frozen=True)
class TestProgram:
    """A fixed-length instruction sequence, stored as encoding words."""

    __test__ = False  # not a pytest class

    id: str
    words: tuple
    origin: object = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "words", tuple(int(w) & WORD_MASK for w in self.words))

    def __len__(self) -> int:
        return len(self.words)

    @property
    def instructions(self) -> tuple:
        return tuple(decode(w) for w in self.words)

    def replace_words(self, words: Iterable[int], new_id: Optional[str] = None, origin=None) -> "TestProgram":
        return TestProgram(new_id or self.id, tuple(words), origin)


def _reg(r: int) -> str:
    return f"x{r}"


def format_instruction(word: int) -> str:
    ins = decode(word)
    if not ins.is_canonical():
        return f".word 0x{ins.encoding:08x}"
    mn, fmt = ins.mnemonic, ins.fmt
    if fmt == "R":
        ops = (_reg(ins.rd), _reg(ins.rs1), _reg(ins.rs2))
    elif fmt in ("I", "SH", "L", "Z"):
        ops = (_reg(ins.rd), _reg(ins.rs1), str(ins.imm))
    elif fmt == "S":
        ops = (_reg(ins.rs2), _reg(ins.rs1), str(ins.imm))
    elif fmt == "B":
        ops = (_reg(ins.rs1), _reg(ins.rs2), str(ins.imm))
    else:  # C
        csr = CSR_NAMES[ins.csr] if ins.csr < len(CSR_NAMES) else f"csr{ins.csr}"
        ops = (_reg(ins.rd), csr, _reg(ins.rs1))
    return f"{mn} {','.join(ops)}"


_REG_RE = re.compile(r"^x(\d+)$")


def _parse_reg(tok: str) -> int:
    m = _REG_RE.match(tok)
    if not m or int(m.group(1)) >= NUM_REGS:
        raise ValueError(f"bad register {tok!r}")
    return int(m.group(1))


def _parse_csr(tok: str) -> int:
    if tok in CSR_IDS:
        return CSR_IDS[tok]
    if tok.startswith("csr"):
        return int(tok[3:])
    return int(tok, 0)


def parse_instruction(line: str) -> int:
    line = line.strip()
    if line.startswith(".word"):
        return int(line.split()[1], 0) & WORD_MASK
    parts = line.split(None, 1)
    mn = parts[0].lower()
    if mn not in OPCODES:
        raise ValueError(f"unknown mnemonic {mn!r}")
    info = OPCODES[mn]
    ops = [t.strip() for t in parts[1].split(",")] if len(parts) > 1 else []
    if len(ops) != 3:
        raise ValueError(f"expected 3 operands: {line!r}")
    a, b, c = ops
    fmt = info.fmt
    if fmt == "R":
        return pack(info.opcode, rd=_parse_reg(a), rs1=_parse_reg(b), rs2=_parse_reg(c))
    if fmt in ("I", "SH", "L", "Z"):
        return pack(info.opcode, rd=_parse_reg(a), rs1=_parse_reg(b), imm=int(c, 0))
    if fmt == "S":
        return pack(info.opcode, rs2=_parse_reg(a), rs1=_parse_reg(b), imm=int(c, 0))
    if fmt == "B":
        return pack(info.opcode, rs1=_parse_reg(a), rs2=_parse_reg(b), imm=int(c, 0))
    return pack(info.opcode, rd=_parse_reg(a), rs1=_parse_reg(c), imm=_parse_csr(b))


def program_to_text(program: TestProgram | Sequence[int]) -> str:
    words = program.words if isinstance(program, TestProgram) else program
    return "".join(format_instruction(w) + "\n" for w in words)


def program_from_text(text: str, program_id: str = "text") -> TestProgram:
    words = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            words.append(parse_instruction(line))
    return TestProgram(program_id, tuple(words))


def program_to_bytes(program: TestProgram | Sequence[int]) -> bytes:
    words = program.words if isinstance(program, TestProgram) else program
    return struct.pack(f"<{len(words)}I", *words)


def program_from_bytes(data: bytes, program_id: str = "bin") -> TestProgram:
    if len(data) % 4:
        raise ValueError("binary program length is not a multiple of 4")
    return TestProgram(program_id, struct.unpack(f"<{len(data) // 4}I", data))
