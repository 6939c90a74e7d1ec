"""Differential detection: DUT trace vs golden trace, per committed instruction."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from typing import Any, Iterable, Optional

from .arch import (CAUSE_ILLEGAL, CAUSE_LOAD_FAULT, CSR_CUSTOM, CSR_INSTRET, NUM_CSRS,
                   TRACE_FIELDS, ArchTrace)
from .isa import decode

BUG_IDS = ("B1", "B2", "B3", "B4", "B5", "B6")

BUG_DESCRIPTIONS = {
    "B1": "loads from the 0x1000-0x1fff window return 0 instead of an access fault",
    "B2": "mul with rs1 == rs2 is decoded as add",
    "B3": "pure reads of unimplemented CSRs return scratch instead of trapping",
    "B4": "a load right after a store to the same word returns the pre-store value",
    "B5": "fence with a nonzero immediate is decoded as a nop",
    "B6": "ebreak does not advance instret",
}

_LOADS = frozenset({"lw", "lh", "lhu", "lb", "lbu"})
_CSR_OPS = frozenset({"csrrw", "csrrs", "csrrc"})


class TraceContractError(ValueError):
    """Traces passed to the comparator do not belong together."""


@dataclass(frozen=True)
class Mismatch:
    test_id: str
    instruction_index: int
    field: str
    dut_value: Any
    golden_value: Any
    encoding: Optional[int] = None
    cascading: bool = False
    matched_bug: Optional[str] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def compare_traces(dut: ArchTrace, golden: ArchTrace) -> list:
    """Field-by-field comparison; empty iff the traces are identical.

    Mismatches at the first divergent instruction are primary. Everything
    after it is flagged ``cascading`` since downstream state is tainted.
    """
    if dut.test_id != golden.test_id:
        raise TraceContractError(f"trace ids differ: {dut.test_id!r} vs {golden.test_id!r}")
    out = []
    first = None
    for i, (d, g) in enumerate(zip(dut.entries, golden.entries)):
        if d == g:
            continue
        if first is None:
            first = i
        casc = i > first
        if d.field("commit") != g.field("commit"):
            out.append(Mismatch(dut.test_id, i, "commit", d.field("commit"), g.field("commit"),
                                g.encoding, casc))
            continue
        for name in TRACE_FIELDS[1:]:
            dv, gv = d.field(name), g.field(name)
            if dv != gv:
                out.append(Mismatch(dut.test_id, i, name, dv, gv, g.encoding, casc))
    n = min(len(dut), len(golden))
    if len(dut) != len(golden):
        dv = dut[n].field("commit") if n < len(dut) else None
        gv = golden[n].field("commit") if n < len(golden) else None
        enc = golden[n].encoding if n < len(golden) else None
        out.append(Mismatch(dut.test_id, n, "commit", dv, gv, enc, first is not None and n > first))
    return [replace(m, matched_bug=classify(m)) for m in out]


def classify(m: Mismatch) -> Optional[str]:
    """Map a mismatch onto the injected-bug catalog by its signature."""
    if m.encoding is None:
        return None
    ins = decode(m.encoding)
    mn = ins.mnemonic
    f, dv, gv = m.field, m.dut_value, m.golden_value
    if mn in _LOADS:
        if f == "exception" and gv == CAUSE_LOAD_FAULT and dv is None:
            return "B1"
        if f in ("gpr", "memory") and dv is not None and gv is not None:
            return "B4"
        return None
    if mn == "mul" and f == "gpr" and ins.rs1 == ins.rs2:
        return "B2"
    if mn in _CSR_OPS:
        if (f == "exception" and gv == CAUSE_ILLEGAL and dv is None
                and ins.csr >= NUM_CSRS and mn != "csrrw" and ins.rs1 == 0):
            return "B3"
        if f in ("gpr", "csr") and ins.csr == CSR_INSTRET and dv is not None and gv is not None:
            return "B6"
        return None
    if mn == "fence" and f == "csr" and any(cid == CSR_CUSTOM for cid, _ in gv):
        return "B5"
    return None


def detected_bugs(mismatches: Iterable[Mismatch]) -> set:
    """Bugs credited by a trace: classifications of its primary mismatches."""
    return {m.matched_bug for m in mismatches if not m.cascading and m.matched_bug}


def check_program(test):
    """Run DUT and golden on ``test`` and compare."""
    from .toy_dut import simulate
    from .golden import golden_execute
    _, dut_trace = simulate(test)
    return compare_traces(dut_trace, golden_execute(test))
