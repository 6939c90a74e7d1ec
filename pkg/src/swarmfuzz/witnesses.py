"""Minimal trigger programs for the six injected DUT bugs.

Each witness is padded with ``addi x0,x0,0`` to the default program length.
``verify`` runs them through the differential detector and checks that the
expected bug, and only that bug, is credited.
"""
from __future__ import annotations

from dataclasses import dataclass

from .detector import BUG_IDS, check_program, detected_bugs
from .isa import TestProgram, program_from_text

PAD = "addi x0,x0,0"
LENGTH = 20

WITNESS_SOURCE = {
    # build 0x1000 (first byte past data memory) and load from it
    "B1": """
        addi x1,x0,2047
        addi x1,x1,2047
        addi x1,x1,2
        lw x2,x1,0
    """,
    "B2": """
        addi x1,x0,3
        mul x2,x1,x1
    """,
    # id 9 is unimplemented
    "B3": """
        csrrs x1,csr9,x0
    """,
    "B4": """
        addi x1,x0,5
        sw x1,x0,0
        lw x2,x0,0
    """,
    "B5": """
        fence x0,x0,1
    """,
    # the explicit instret write exposes the count ebreak failed to add
    "B6": """
        ebreak x0,x0,0
        csrrs x0,instret,x1
    """,
}


def witness(bug: str, length: int = LENGTH) -> TestProgram:
    prog = program_from_text(WITNESS_SOURCE[bug], f"witness-{bug}")
    pad = program_from_text(PAD).words[0]
    if len(prog) > length:
        raise ValueError(f"witness {bug} longer than {length}")
    return prog.replace_words(prog.words + (pad,) * (length - len(prog)))


def witnesses() -> dict:
    return {b: witness(b) for b in BUG_IDS}


@dataclass
class WitnessStatus:
    bug: str
    detected: set
    n_mismatches: int

    @property
    def ok(self) -> bool:
        return self.detected == {self.bug}

    def line(self) -> str:
        got = ",".join(sorted(self.detected)) or "none"
        return f"{self.bug}: {'ok' if self.ok else 'FAIL'} (classified {got}, {self.n_mismatches} mismatches)"


def verify(programs: dict | None = None) -> list:
    programs = witnesses() if programs is None else programs
    out = []
    for bug, prog in programs.items():
        ms = check_program(prog)
        out.append(WitnessStatus(bug, detected_bugs(ms), len(ms)))
    return out
