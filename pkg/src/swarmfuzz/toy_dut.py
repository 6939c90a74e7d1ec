"""Instrumented toy processor with injected bugs.

Each two-way decision in decode and execute goes through ``_br(site, cond)``,
which marks point ``2*index`` when ``cond`` holds and ``2*index + 1``
otherwise. ``SITES`` is the static registry; every ``_br`` call site names
one of its entries.

Injected bugs (all dormant unless their trigger occurs):

* B1  loads from 0x1000..0x1fff return 0 instead of faulting
* B2  ``mul`` with rs1 == rs2 decodes as ``add``
* B3  machine-mode pure reads of an unimplemented CSR return ``scratch``
* B4  a load right after a store to the same word sees the pre-store word
* B5  ``fence`` with a nonzero immediate is decoded as a nop
* B6  ``ebreak`` does not advance ``instret``
"""
from __future__ import annotations

from .arch import (CAUSE_BREAKPOINT, CAUSE_ECALL_M, CAUSE_ECALL_U, CAUSE_ILLEGAL,
                   CAUSE_LOAD_FAULT, CAUSE_LOAD_MISALIGNED, CAUSE_STORE_FAULT,
                   CAUSE_STORE_MISALIGNED, CSR_CAUSE, CSR_CUSTOM, CSR_EPC, CSR_INSTRET,
                   CSR_SCRATCH, CSR_TIMER, MACHINE, MEM_BYTES, NUM_CSRS, USER, ArchTrace,
                   CoverageMap, TraceEntry)
from .isa import CSR_NAMES, ITYPES, NUM_REGS, TestProgram

M32 = 0xFFFFFFFF
MIRROR_END = 0x2000

SITES = (
    # decode
    "dec.type_valid",
    "dec.alur.is_mul",
    "dec.mul.same_src",
    "dec.alui.is_shift",
    "dec.load.func_valid",
    "dec.store.func_valid",
    "dec.branch.func_valid",
    "dec.sys.func_valid",
    "dec.sys.is_csr",
    "dec.csrrw.rd_zero",
    "dec.csrrs.rs1_zero",
    "dec.csrrc.rs1_zero",
    "dec.fence.imm_zero",
    "dec.spare_bits",
    # operand hazards against the previous commit
    "haz.rs1_raw",
    "haz.rs2_raw",
    "haz.load_use",
    # register-register ALU
    "ex.add.ovf",
    "ex.add.zero",
    "ex.sub.borrow",
    "ex.sub.zero",
    "ex.and.zero",
    "ex.or.zero",
    "ex.or.neg",
    "ex.xor.same",
    "ex.sll.big",
    "ex.sll.noshift",
    "ex.srl.big",
    "ex.srl.neg_src",
    "ex.mul.hi",
    "ex.mul.zero_src",
    "ex.mul.neg_src",
    # register-immediate ALU
    "ex.addi.neg_imm",
    "ex.addi.ovf",
    "ex.addi.zero_src",
    "ex.andi.neg_imm",
    "ex.andi.zero",
    "ex.ori.neg_imm",
    "ex.xori.not",
    "ex.slli.big",
    "ex.slli.ovf",
    "ex.srli.big",
    "ex.srai.neg_src",
    "ex.srai.big",
    "ex.slti.true",
    "ex.slti.neg_src",
    # loads
    "mem.ld.misaligned",
    "mem.ld.range_ok",
    "mem.ld.mirror",
    "mem.ld.fwd_hit",
    "mem.ld.nonzero",
    "ex.lw.neg",
    "ex.lh.sext",
    "ex.lhu.upper_half",
    "ex.lb.sext",
    "ex.lbu.upper_byte",
    # stores
    "mem.st.misaligned",
    "mem.st.range_ok",
    "mem.st.zero_data",
    "mem.st.changes",
    "ex.sw.same_reg",
    "ex.sh.upper_half",
    "ex.sb.upper_byte",
    # branches
    "ex.beq.taken",
    "ex.bne.taken",
    "ex.blt.taken",
    "ex.bge.taken",
    "ex.bltu.taken",
    "ex.bgeu.taken",
    "br.skip_zero",
    "br.clamped",
    # system
    "csr.implemented",
    "csr.user_ok",
    "csr.ro_write",
    "csr.sel.status",
    "csr.sel.tvec",
    "csr.sel.epc",
    "csr.sel.cause",
    "csr.sel.instret",
    "csr.sel.scratch",
    "csr.sel.timer",
    "csr.sel.custom",
    "csr.write_changes",
    "sys.ecall.user",
    "sys.ebreak.user",
    "sys.mret.user",
    # privilege, traps, writeback
    "priv.user.ALU-R",
    "priv.user.ALU-I",
    "priv.user.LOAD",
    "priv.user.STORE",
    "priv.user.BRANCH",
    "priv.user.SYSTEM",
    "trap.from_user",
    "trap.nested",
    "wb.rd_zero",
)
SITE_INDEX = {name: i for i, name in enumerate(SITES)}
NUM_POINTS = 2 * len(SITES)

_LOAD_FUNCS = ("lw", "lh", "lhu", "lb", "lbu")
_STORE_FUNCS = ("sw", "sh", "sb")
_BRANCH_FUNCS = ("beq", "bne", "blt", "bge", "bltu", "bgeu")
_ALUR_FUNCS = ("add", "sub", "and", "or", "xor", "sll", "srl", "mul")
_ALUI_FUNCS = ("addi", "andi", "ori", "xori", "slli", "srli", "srai", "slti")
_SYS_FUNCS = ("csrrw", "csrrs", "csrrc", "ecall", "ebreak", "fence", "mret")
_WIDTH = {"lw": 4, "lh": 2, "lhu": 2, "lb": 1, "lbu": 1, "sw": 4, "sh": 2, "sb": 1}


def coverage_point_count() -> int:
    return NUM_POINTS


def point_id(site: str, taken: bool) -> int:
    return 2 * SITE_INDEX[site] + (0 if taken else 1)


def _neg(v: int) -> bool:
    return bool(v & 0x80000000)


def _s32(v: int) -> int:
    v &= M32
    return v - (1 << 32) if v & 0x80000000 else v


class _Trap(Exception):
    def __init__(self, cause: int):
        self.cause = cause


class InstrumentedCore:
    """Buggy DUT interpreter with branch-coverage instrumentation."""

    def __init__(self):
        self.regs = [0] * NUM_REGS
        self.mem = bytearray(MEM_BYTES)
        self.csrs = [0] * NUM_CSRS
        self.priv = MACHINE
        self.cycles = 0
        self.cov = 0
        self.prev_rd = 0
        self.prev_was_load = False
        self.store_shadow = None  # (word address, pre-store word bytes) of the last commit

    def _br(self, site: str, cond) -> bool:
        cond = bool(cond)
        self.cov |= 1 << (2 * SITE_INDEX[site] + (0 if cond else 1))
        return cond

    # -- stages ------------------------------------------------------------

    def _decode(self, word: int):
        """Returns ``(mnemonic, itype, rd, rs1, rs2, imm)``; raises on illegal opcodes."""
        br = self._br
        opc = word & 0x3F
        typ, func = opc >> 3, opc & 7
        rd = (word >> 6) & 0xF
        rs1 = (word >> 10) & 0xF
        rs2 = (word >> 14) & 0xF
        imm = (word >> 18) & 0xFFF
        if imm & 0x800:
            imm -= 0x1000
        br("dec.spare_bits", word >> 30)
        if not br("dec.type_valid", typ < len(ITYPES)):
            raise _Trap(CAUSE_ILLEGAL)
        itype = ITYPES[typ]
        if itype == "ALU-R":
            mn = _ALUR_FUNCS[func]
            if br("dec.alur.is_mul", mn == "mul") and br("dec.mul.same_src", rs1 == rs2):
                mn = "add"  # B2: squaring collapses onto the adder path
        elif itype == "ALU-I":
            mn = _ALUI_FUNCS[func]
            br("dec.alui.is_shift", mn in ("slli", "srli", "srai"))
        elif itype == "LOAD":
            if not br("dec.load.func_valid", func < len(_LOAD_FUNCS)):
                raise _Trap(CAUSE_ILLEGAL)
            mn = _LOAD_FUNCS[func]
        elif itype == "STORE":
            if not br("dec.store.func_valid", func < len(_STORE_FUNCS)):
                raise _Trap(CAUSE_ILLEGAL)
            mn = _STORE_FUNCS[func]
        elif itype == "BRANCH":
            if not br("dec.branch.func_valid", func < len(_BRANCH_FUNCS)):
                raise _Trap(CAUSE_ILLEGAL)
            mn = _BRANCH_FUNCS[func]
        else:
            if not br("dec.sys.func_valid", func < len(_SYS_FUNCS)):
                raise _Trap(CAUSE_ILLEGAL)
            mn = _SYS_FUNCS[func]
            if br("dec.sys.is_csr", func < 3):
                if mn == "csrrw":
                    br("dec.csrrw.rd_zero", rd == 0)
                elif mn == "csrrs":
                    br("dec.csrrs.rs1_zero", rs1 == 0)
                else:
                    br("dec.csrrc.rs1_zero", rs1 == 0)
            elif mn == "fence" and not br("dec.fence.imm_zero", imm == 0):
                mn = "nop"  # B5
        return mn, itype, rd, rs1, rs2, imm

    def _hazards(self, itype: str, rs1: int, rs2: int):
        if itype == "SYSTEM":
            return
        br = self._br
        raw1 = br("haz.rs1_raw", self.prev_rd != 0 and rs1 == self.prev_rd)
        raw2 = False
        if itype in ("ALU-R", "STORE", "BRANCH"):
            raw2 = br("haz.rs2_raw", self.prev_rd != 0 and rs2 == self.prev_rd)
        if self.prev_was_load:
            br("haz.load_use", raw1 or raw2)

    def _alu_r(self, mn: str, a: int, b: int) -> int:
        br = self._br
        if mn == "add":
            r = (a + b) & M32
            br("ex.add.ovf", _neg(a) == _neg(b) and _neg(r) != _neg(a))
            br("ex.add.zero", r == 0)
        elif mn == "sub":
            r = (a - b) & M32
            br("ex.sub.borrow", a < b)
            br("ex.sub.zero", r == 0)
        elif mn == "and":
            r = a & b
            br("ex.and.zero", r == 0)
        elif mn == "or":
            r = a | b
            br("ex.or.zero", r == 0)
            br("ex.or.neg", _neg(r))
        elif mn == "xor":
            r = a ^ b
            br("ex.xor.same", a == b)
        elif mn == "sll":
            sh = b & 31
            br("ex.sll.big", sh >= 16)
            br("ex.sll.noshift", sh == 0)
            r = (a << sh) & M32
        elif mn == "srl":
            sh = b & 31
            br("ex.srl.big", sh >= 16)
            br("ex.srl.neg_src", _neg(a))
            r = a >> sh
        else:  # mul
            p = a * b
            br("ex.mul.hi", p >> 32)
            br("ex.mul.zero_src", a == 0 or b == 0)
            br("ex.mul.neg_src", _neg(a) or _neg(b))
            r = p & M32
        return r

    def _alu_i(self, mn: str, a: int, imm: int) -> int:
        br = self._br
        b = imm & M32
        if mn == "addi":
            r = (a + b) & M32
            br("ex.addi.neg_imm", imm < 0)
            br("ex.addi.ovf", _neg(a) == _neg(b) and _neg(r) != _neg(a))
            br("ex.addi.zero_src", a == 0)
        elif mn == "andi":
            r = a & b
            br("ex.andi.neg_imm", imm < 0)
            br("ex.andi.zero", r == 0)
        elif mn == "ori":
            r = a | b
            br("ex.ori.neg_imm", imm < 0)
        elif mn == "xori":
            r = a ^ b
            br("ex.xori.not", imm == -1)
        elif mn == "slli":
            sh = imm & 31
            br("ex.slli.big", sh >= 16)
            br("ex.slli.ovf", (a << sh) >> 32)
            r = (a << sh) & M32
        elif mn == "srli":
            sh = imm & 31
            br("ex.srli.big", sh >= 16)
            r = a >> sh
        elif mn == "srai":
            sh = imm & 31
            br("ex.srai.neg_src", _neg(a))
            br("ex.srai.big", sh >= 16)
            r = (_s32(a) >> sh) & M32
        else:  # slti
            br("ex.slti.neg_src", _neg(a))
            r = int(br("ex.slti.true", _s32(a) < imm))
        return r

    def _load(self, mn: str, addr: int):
        br = self._br
        width = _WIDTH[mn]
        if br("mem.ld.misaligned", addr % width):
            raise _Trap(CAUSE_LOAD_MISALIGNED)
        # B1: the decoder only rejects addresses past the mirror window
        if not br("mem.ld.range_ok", addr < MIRROR_END):
            raise _Trap(CAUSE_LOAD_FAULT)
        if br("mem.ld.mirror", addr >= MEM_BYTES):
            raw = 0
        else:
            data = self.mem
            shadow = self.store_shadow
            if br("mem.ld.fwd_hit", shadow is not None and shadow[0] == addr >> 2):
                # B4: the bypass hands back the word as it was before the store
                base = addr & ~3
                data = bytearray(self.mem)
                data[base:base + 4] = shadow[1]
            raw = int.from_bytes(data[addr:addr + width], "little")
        br("mem.ld.nonzero", raw != 0)
        if mn == "lw":
            br("ex.lw.neg", _neg(raw))
            val = raw
        elif mn == "lh":
            val = raw - 0x10000 if br("ex.lh.sext", raw & 0x8000) else raw
        elif mn == "lhu":
            br("ex.lhu.upper_half", addr & 2)
            val = raw
        elif mn == "lb":
            val = raw - 0x100 if br("ex.lb.sext", raw & 0x80) else raw
        else:
            br("ex.lbu.upper_byte", addr & 3 == 3)
            val = raw
        return raw, val & M32

    def _store(self, mn: str, addr: int, value: int, same_reg: bool):
        br = self._br
        width = _WIDTH[mn]
        if br("mem.st.misaligned", addr % width):
            raise _Trap(CAUSE_STORE_MISALIGNED)
        if not br("mem.st.range_ok", addr + width <= MEM_BYTES):
            raise _Trap(CAUSE_STORE_FAULT)
        data = value & ((1 << (8 * width)) - 1)
        br("mem.st.zero_data", data == 0)
        if mn == "sw":
            br("ex.sw.same_reg", same_reg)
        elif mn == "sh":
            br("ex.sh.upper_half", addr & 2)
        else:
            br("ex.sb.upper_byte", addr & 3 == 3)
        base = addr & ~3
        old_word = bytes(self.mem[base:base + 4])
        new = data.to_bytes(width, "little")
        br("mem.st.changes", bytes(self.mem[addr:addr + width]) != new)
        self.mem[addr:addr + width] = new
        return data, (addr >> 2, old_word)

    def _branch(self, mn: str, a: int, b: int) -> bool:
        if mn == "beq":
            cond = a == b
        elif mn == "bne":
            cond = a != b
        elif mn == "blt":
            cond = _s32(a) < _s32(b)
        elif mn == "bge":
            cond = _s32(a) >= _s32(b)
        elif mn == "bltu":
            cond = a < b
        else:
            cond = a >= b
        return self._br(f"ex.{mn}.taken", cond)

    def _csr(self, mn: str, rd: int, rs1: int, cid: int):
        br = self._br
        writes = mn == "csrrw" or rs1 != 0
        user = self.priv == USER
        if not br("csr.implemented", cid < NUM_CSRS):
            if not writes and not user:
                # B3: unimplemented ids fall through to the scratch register
                return self.csrs[CSR_SCRATCH], ()
            raise _Trap(CAUSE_ILLEGAL)
        if user and not br("csr.user_ok", not writes and cid in (CSR_INSTRET, CSR_TIMER)):
            raise _Trap(CAUSE_ILLEGAL)
        for i, name in enumerate(CSR_NAMES):
            br(f"csr.sel.{name}", cid == i)
        if writes and br("csr.ro_write", cid == CSR_TIMER):
            raise _Trap(CAUSE_ILLEGAL)
        old = self.cycles if cid == CSR_TIMER else self.csrs[cid]
        if not writes:
            return old, ()
        src = self.regs[rs1]
        if mn == "csrrw":
            new = src
        elif mn == "csrrs":
            new = old | src
        else:
            new = old & ~src & M32
        br("csr.write_changes", new != old)
        self.csrs[cid] = new
        return old, ((cid, new),)

    # -- one slot ----------------------------------------------------------

    def step(self, pc: int, word: int, n: int):
        br = self._br
        regs = self.regs
        gpr = None
        csr_writes = ()
        memory = None
        next_pc = pc + 1
        shadow = None
        bump_instret = True
        rd_written = 0
        was_load = False
        try:
            mn, itype, rd, rs1, rs2, imm = self._decode(word)
            br(f"priv.user.{itype}", self.priv == USER)
            self._hazards(itype, rs1, rs2)
            if itype == "ALU-R":
                gpr = (rd, self._alu_r(mn, regs[rs1], regs[rs2]))
            elif itype == "ALU-I":
                gpr = (rd, self._alu_i(mn, regs[rs1], imm))
            elif itype == "LOAD":
                addr = (regs[rs1] + imm) & M32
                raw, val = self._load(mn, addr)
                gpr = (rd, val)
                memory = (addr, raw, False)
                was_load = True
            elif itype == "STORE":
                addr = (regs[rs1] + imm) & M32
                data, shadow = self._store(mn, addr, regs[rs2], rs1 == rs2)
                memory = (addr, data, True)
            elif itype == "BRANCH":
                if self._branch(mn, regs[rs1], regs[rs2]):
                    skip = imm & 7
                    br("br.skip_zero", skip == 0)
                    target = pc + 1 + skip
                    next_pc = n if br("br.clamped", target > n) else target
            elif mn in ("csrrw", "csrrs", "csrrc"):
                old, csr_writes = self._csr(mn, rd, rs1, imm & 0xFFF)
                if any(cid == CSR_INSTRET for cid, _ in csr_writes):
                    bump_instret = False
                gpr = (rd, old)
            elif mn == "ecall":
                raise _Trap(CAUSE_ECALL_U if br("sys.ecall.user", self.priv == USER) else CAUSE_ECALL_M)
            elif mn == "ebreak":
                br("sys.ebreak.user", self.priv == USER)
                bump_instret = False  # B6
                raise _Trap(CAUSE_BREAKPOINT)
            elif mn == "fence":
                self.csrs[CSR_CUSTOM] = (self.csrs[CSR_CUSTOM] + 1) & M32
                csr_writes = ((CSR_CUSTOM, self.csrs[CSR_CUSTOM]),)
            elif mn == "mret":
                if br("sys.mret.user", self.priv == USER):
                    raise _Trap(CAUSE_ILLEGAL)
                self.priv = USER
            # "nop" (B5) falls through with no effect
        except _Trap as trap:
            br("trap.from_user", self.priv == USER)
            br("trap.nested", self.csrs[CSR_CAUSE] != 0)
            self.csrs[CSR_EPC] = pc
            self.csrs[CSR_CAUSE] = trap.cause
            self.priv = MACHINE
            entry = TraceEntry(pc, word, exception=trap.cause,
                               csr=((CSR_EPC, pc), (CSR_CAUSE, trap.cause)), privilege=MACHINE)
            self._commit(bump_instret, 0, False, None)
            return entry, next_pc

        if gpr is not None:
            rd, val = gpr
            if br("wb.rd_zero", rd == 0):
                gpr = (0, 0)
            else:
                regs[rd] = val
                rd_written = rd
        entry = TraceEntry(pc, word, gpr=gpr, csr=csr_writes, privilege=self.priv, memory=memory)
        self._commit(bump_instret, rd_written, was_load, shadow)
        return entry, next_pc

    def _commit(self, bump_instret: bool, rd_written: int, was_load: bool, shadow):
        self.cycles += 1
        if bump_instret:
            self.csrs[CSR_INSTRET] = (self.csrs[CSR_INSTRET] + 1) & M32
        self.prev_rd = rd_written
        self.prev_was_load = was_load
        self.store_shadow = shadow


def simulate(test: TestProgram):
    """Run ``test`` on the DUT from reset; returns ``(CoverageMap, ArchTrace)``."""
    core = InstrumentedCore()
    words = test.words
    n = len(words)
    entries = []
    pc = 0
    while pc < n:
        entry, pc = core.step(pc, words[pc], n)
        entries.append(entry)
    return CoverageMap(NUM_POINTS, core.cov), ArchTrace(test.id, tuple(entries))
