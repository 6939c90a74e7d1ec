"""Architectural state records shared by the DUT and the golden model."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

MEM_BYTES = 4096

MACHINE = "M"
USER = "U"

# exception causes
CAUSE_ILLEGAL = 2
CAUSE_BREAKPOINT = 3
CAUSE_LOAD_MISALIGNED = 4
CAUSE_LOAD_FAULT = 5
CAUSE_STORE_MISALIGNED = 6
CAUSE_STORE_FAULT = 7
CAUSE_ECALL_U = 8
CAUSE_ECALL_M = 11

CSR_STATUS, CSR_TVEC, CSR_EPC, CSR_CAUSE, CSR_INSTRET, CSR_SCRATCH, CSR_TIMER, CSR_CUSTOM = range(8)
NUM_CSRS = 8
READ_ONLY_CSRS = frozenset({CSR_TIMER})
USER_READABLE_CSRS = frozenset({CSR_INSTRET, CSR_TIMER})

TRACE_FIELDS = ("commit", "exception", "gpr", "csr", "privilege", "memory")


@dataclass(frozen=True)
class TraceEntry:
    """Architectural effects of one committed instruction.

    ``gpr`` is ``(index, value)`` or None; writes to x0 record value 0.
    ``csr`` is a tuple of explicit ``(id, value)`` writes in program order.
    ``memory`` is ``(address, data, is_store)`` or None.
    """

    pc: int
    encoding: int
    exception: Optional[int] = None
    gpr: Optional[tuple] = None
    csr: tuple = ()
    privilege: str = MACHINE
    memory: Optional[tuple] = None

    def field(self, name: str):
        if name == "commit":
            return (self.pc, self.encoding)
        if name == "exception":
            return self.exception
        if name == "gpr":
            return self.gpr
        if name == "csr":
            return self.csr
        if name == "privilege":
            return self.privilege
        if name == "memory":
            return self.memory
        raise KeyError(name)


@dataclass(frozen=True)
class ArchTrace:
    test_id: str
    entries: tuple

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]


class CoverageMap:
    """Set of covered point ids, stored as an integer bitmap."""

    __slots__ = ("bits", "total_points")

    def __init__(self, total_points: int, bits: int = 0):
        self.total_points = total_points
        self.bits = bits

    def __len__(self) -> int:
        return self.bits.bit_count()

    count = __len__

    def __contains__(self, point: int) -> bool:
        return bool(self.bits >> point & 1)

    def __eq__(self, other) -> bool:
        return (isinstance(other, CoverageMap) and self.bits == other.bits
                and self.total_points == other.total_points)

    def __repr__(self) -> str:
        return f"CoverageMap({len(self)}/{self.total_points})"

    def points(self) -> list:
        out, bits, i = [], self.bits, 0
        while bits:
            if bits & 1:
                out.append(i)
            bits >>= 1
            i += 1
        return out

    def union(self, other: "CoverageMap") -> "CoverageMap":
        return CoverageMap(self.total_points, self.bits | other.bits)

    def update(self, other: "CoverageMap") -> int:
        """In-place union; returns the number of newly covered points."""
        new = other.bits & ~self.bits
        self.bits |= other.bits
        return new.bit_count()

    def copy(self) -> "CoverageMap":
        return CoverageMap(self.total_points, self.bits)
