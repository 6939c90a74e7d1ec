"""Reference interpreter for the toy ISA.

Written independently of the instrumented DUT in ``dut.py``; the two only
share the encoding tables and the trace record types. Straight-line
execution: every slot is visited once unless a taken branch skips it.
"""
from __future__ import annotations

from .arch import (CAUSE_BREAKPOINT, CAUSE_ECALL_M, CAUSE_ECALL_U, CAUSE_ILLEGAL,
                   CAUSE_LOAD_FAULT, CAUSE_LOAD_MISALIGNED, CAUSE_STORE_FAULT,
                   CAUSE_STORE_MISALIGNED, CSR_CAUSE, CSR_CUSTOM, CSR_EPC, CSR_INSTRET,
                   CSR_TIMER, MACHINE, MEM_BYTES, NUM_CSRS, READ_ONLY_CSRS, USER,
                   USER_READABLE_CSRS, ArchTrace, TraceEntry)
from .isa import NUM_REGS, TestProgram, decode

M32 = 0xFFFFFFFF

_WIDTH = {"lw": 4, "lh": 2, "lhu": 2, "lb": 1, "lbu": 1, "sw": 4, "sh": 2, "sb": 1}


def _s32(x: int) -> int:
    x &= M32
    return x - (1 << 32) if x & 0x80000000 else x


class _Trap(Exception):
    def __init__(self, cause: int):
        self.cause = cause


class GoldenModel:
    """Architecturally correct model; one instance per program run."""

    def __init__(self):
        self.x = [0] * NUM_REGS
        self.mem = bytearray(MEM_BYTES)
        self.csr = [0] * NUM_CSRS
        self.priv = MACHINE
        self.committed = 0

    def read_csr(self, cid: int) -> int:
        # timer is a free-running count of committed slots
        return self.committed if cid == CSR_TIMER else self.csr[cid]

    def _load(self, mn: str, addr: int):
        width = _WIDTH[mn]
        if addr % width:
            raise _Trap(CAUSE_LOAD_MISALIGNED)
        if addr + width > MEM_BYTES:
            raise _Trap(CAUSE_LOAD_FAULT)
        raw = int.from_bytes(self.mem[addr:addr + width], "little")
        if mn == "lh":
            val = raw - 0x10000 if raw & 0x8000 else raw
        elif mn == "lb":
            val = raw - 0x100 if raw & 0x80 else raw
        else:
            val = raw
        return raw, val & M32

    def _store(self, mn: str, addr: int, value: int) -> int:
        width = _WIDTH[mn]
        if addr % width:
            raise _Trap(CAUSE_STORE_MISALIGNED)
        if addr + width > MEM_BYTES:
            raise _Trap(CAUSE_STORE_FAULT)
        data = value & ((1 << (8 * width)) - 1)
        self.mem[addr:addr + width] = data.to_bytes(width, "little")
        return data

    def _alu(self, mn: str, a: int, b: int) -> int:
        if mn in ("add", "addi"):
            return a + b
        if mn == "sub":
            return a - b
        if mn in ("and", "andi"):
            return a & b
        if mn in ("or", "ori"):
            return a | b
        if mn in ("xor", "xori"):
            return a ^ b
        if mn in ("sll", "slli"):
            return a << (b & 31)
        if mn in ("srl", "srli"):
            return (a & M32) >> (b & 31)
        if mn == "srai":
            return _s32(a) >> (b & 31)
        if mn == "mul":
            return a * b
        if mn == "slti":
            return int(_s32(a) < _s32(b))
        raise AssertionError(mn)

    def _branch(self, mn: str, a: int, b: int) -> bool:
        if mn == "beq":
            return a == b
        if mn == "bne":
            return a != b
        if mn == "blt":
            return _s32(a) < _s32(b)
        if mn == "bge":
            return _s32(a) >= _s32(b)
        if mn == "bltu":
            return a < b
        return a >= b  # bgeu

    def _csr_op(self, ins):
        mn, cid = ins.mnemonic, ins.csr
        writes = mn == "csrrw" or ins.rs1 != 0
        if cid >= NUM_CSRS:
            raise _Trap(CAUSE_ILLEGAL)
        if self.priv == USER and (writes or cid not in USER_READABLE_CSRS):
            raise _Trap(CAUSE_ILLEGAL)
        if writes and cid in READ_ONLY_CSRS:
            raise _Trap(CAUSE_ILLEGAL)
        old = self.read_csr(cid)
        src = self.x[ins.rs1]
        csr_writes = ()
        if writes:
            if mn == "csrrw":
                new = src
            elif mn == "csrrs":
                new = old | src
            else:
                new = old & ~src & M32
            self.csr[cid] = new
            csr_writes = ((cid, new),)
        return old, csr_writes

    def step(self, pc: int, word: int, n: int):
        """Execute one slot; returns ``(entry, next_pc)``."""
        ins = decode(word)
        mn = ins.mnemonic
        x = self.x
        gpr = None
        csr_writes = ()
        memory = None
        next_pc = pc + 1
        wrote_instret = False
        try:
            if ins.info is None:
                raise _Trap(CAUSE_ILLEGAL)
            t = ins.itype
            if t == "ALU-R":
                gpr = (ins.rd, self._alu(mn, x[ins.rs1], x[ins.rs2]) & M32)
            elif t == "ALU-I":
                gpr = (ins.rd, self._alu(mn, x[ins.rs1], ins.imm & M32) & M32)
            elif t == "LOAD":
                addr = (x[ins.rs1] + ins.imm) & M32
                raw, val = self._load(mn, addr)
                gpr = (ins.rd, val)
                memory = (addr, raw, False)
            elif t == "STORE":
                addr = (x[ins.rs1] + ins.imm) & M32
                data = self._store(mn, addr, x[ins.rs2])
                memory = (addr, data, True)
            elif t == "BRANCH":
                if self._branch(mn, x[ins.rs1], x[ins.rs2]):
                    next_pc = min(pc + 1 + (ins.imm & 7), n)
            elif mn in ("csrrw", "csrrs", "csrrc"):
                old, csr_writes = self._csr_op(ins)
                wrote_instret = any(cid == CSR_INSTRET for cid, _ in csr_writes)
                gpr = (ins.rd, old)
            elif mn == "ecall":
                raise _Trap(CAUSE_ECALL_U if self.priv == USER else CAUSE_ECALL_M)
            elif mn == "ebreak":
                raise _Trap(CAUSE_BREAKPOINT)
            elif mn == "fence":
                self.csr[CSR_CUSTOM] = (self.csr[CSR_CUSTOM] + 1) & M32
                csr_writes = ((CSR_CUSTOM, self.csr[CSR_CUSTOM]),)
            elif mn == "mret":
                if self.priv == USER:
                    raise _Trap(CAUSE_ILLEGAL)
                self.priv = USER
        except _Trap as trap:
            self.csr[CSR_EPC] = pc
            self.csr[CSR_CAUSE] = trap.cause
            self.priv = MACHINE
            entry = TraceEntry(pc, word, exception=trap.cause,
                               csr=((CSR_EPC, pc), (CSR_CAUSE, trap.cause)), privilege=MACHINE)
            self._retire(False)
            return entry, next_pc

        if gpr is not None:
            rd, val = gpr
            if rd == 0:
                gpr = (0, 0)
            else:
                x[rd] = val
        entry = TraceEntry(pc, word, gpr=gpr, csr=csr_writes, privilege=self.priv, memory=memory)
        self._retire(wrote_instret)
        return entry, next_pc

    def _retire(self, wrote_instret: bool):
        self.committed += 1
        if not wrote_instret:
            self.csr[CSR_INSTRET] = (self.csr[CSR_INSTRET] + 1) & M32


def golden_execute(test: TestProgram) -> ArchTrace:
    model = GoldenModel()
    words = test.words
    n = len(words)
    entries = []
    pc = 0
    while pc < n:
        entry, pc = model.step(pc, words[pc], n)
        entries.append(entry)
    return ArchTrace(test.id, tuple(entries))
