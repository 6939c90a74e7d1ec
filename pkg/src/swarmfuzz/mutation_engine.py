"""Mutation operator catalog and weighted operator scheduling."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .isa import (FIELD_WIDTH, FIELDS, FORMAT_IMM_RANGE, FORMAT_REGS, ITYPES, NUM_REGS,
                  OPCODES_BY_TYPE, TestProgram, decode, field_value, random_instruction,
                  with_field)
from .pso_core import sample_categorical


class Inapplicable(Exception):
    """The operator cannot act on the chosen slot."""


@dataclass(frozen=True)
class MutationOperatorId:
    index: int
    name: str


@dataclass(frozen=True)
class MutationRecord:
    operator: MutationOperatorId
    instruction_slot: int
    parent_test_id: str


def _bitflip(width: int):
    def op(words, slot, rng):
        start = int(rng.integers(32))
        mask = 0
        for b in range(width):
            mask |= 1 << ((start + b) % 32)
        words[slot] ^= mask
    return op


def _byteflip(words, slot, rng):
    words[slot] ^= 0xFF << (8 * int(rng.integers(4)))


def _arith(words, slot, rng):
    name = FIELDS[int(rng.integers(len(FIELDS)))]
    delta = int(rng.integers(1, 9)) * (1 if rng.random() < 0.5 else -1)
    width = FIELD_WIDTH[name]
    value = (field_value(words[slot], name) + delta) % (1 << width)
    words[slot] = with_field(words[slot], name, value)


def _legal_info(word):
    ins = decode(word)
    if ins.info is None:
        raise Inapplicable("illegal opcode")
    return ins


def _opcode_mut(words, slot, rng):
    ins = _legal_info(words[slot])
    others = [o for o in OPCODES_BY_TYPE[ins.itype] if o.opcode != ins.info.opcode]
    new = others[int(rng.integers(len(others)))]
    words[slot] = with_field(words[slot], "opcode", new.opcode)


def relegalize(word: int, rng) -> int:
    """Zero fields the format does not use; redraw out-of-range immediates."""
    ins = decode(word)
    fmt = ins.fmt
    used = FORMAT_REGS[fmt]
    for reg in ("rd", "rs1", "rs2"):
        if reg not in used:
            word = with_field(word, reg, 0)
    lim = FORMAT_IMM_RANGE[fmt]
    if lim is None:
        word = with_field(word, "imm", 0)
    elif not lim[0] <= ins.imm <= lim[1]:
        word = with_field(word, "imm", int(rng.integers(lim[0], lim[1] + 1)))
    return with_field(word, "spare", 0)


def _opcode_cross_mut(words, slot, rng):
    ins = _legal_info(words[slot])
    types = [t for t in ITYPES if t != ins.itype]
    choices = OPCODES_BY_TYPE[types[int(rng.integers(len(types)))]]
    new = choices[int(rng.integers(len(choices)))]
    words[slot] = relegalize(with_field(words[slot], "opcode", new.opcode), rng)


def _reg_mut(words, slot, rng):
    ins = _legal_info(words[slot])
    regs = FORMAT_REGS[ins.fmt]
    if not regs:
        raise Inapplicable("no register operands")
    reg = regs[int(rng.integers(len(regs)))]
    cur = getattr(ins, reg)
    new = int(rng.integers(NUM_REGS - 1))
    words[slot] = with_field(words[slot], reg, new + (new >= cur))


def _random_imm(words, slot, rng):
    ins = _legal_info(words[slot])
    lim = FORMAT_IMM_RANGE[ins.fmt]
    if lim is None:
        raise Inapplicable("no immediate operand")
    words[slot] = with_field(words[slot], "imm", int(rng.integers(lim[0], lim[1] + 1)))


def _swap(words, slot, rng):
    other = int(rng.integers(len(words) - 1))
    other += other >= slot
    words[slot], words[other] = words[other], words[slot]


def _delete_append(words, slot, rng):
    del words[slot]
    words.append(random_instruction(rng))


def _random_instr(words, slot, rng):
    words[slot] = random_instruction(rng)


CATALOG = (
    ("Bitflip1", _bitflip(1)),
    ("Bitflip2", _bitflip(2)),
    ("Bitflip4", _bitflip(4)),
    ("ByteFlip", _byteflip),
    ("ArithAddSub", _arith),
    ("OpcodeMut", _opcode_mut),
    ("OpcodeCrossMut", _opcode_cross_mut),
    ("RegMut", _reg_mut),
    ("RandomImm", _random_imm),
    ("SwapInstr", _swap),
    ("DeleteAppend", _delete_append),
    ("RandomInstr", _random_instr),
)
OPERATORS = tuple(MutationOperatorId(i, name) for i, (name, _) in enumerate(CATALOG))
WHOLE_PROGRAM = frozenset({"SwapInstr", "DeleteAppend"})


def operator_list() -> tuple:
    return OPERATORS


def flip_field_bit(field: str) -> Callable:
    """Operator flipping one random bit inside a single encoding field."""
    def op(words, slot, rng):
        bit = int(rng.integers(FIELD_WIDTH[field]))
        words[slot] = with_field(words[slot], field, field_value(words[slot], field) ^ (1 << bit))
    return op


def apply_operator(op, test: TestProgram, slot: int, rng: np.random.Generator,
                   catalog: Sequence = CATALOG, new_id: Optional[str] = None) -> TestProgram:
    """Apply one catalog operator at ``slot``; raises ``Inapplicable``."""
    index = op.index if isinstance(op, MutationOperatorId) else int(op)
    name, fn = catalog[index]
    if not 0 <= slot < len(test):
        raise IndexError(f"slot {slot} outside program of length {len(test)}")
    words = list(test.words)
    if name == "SwapInstr" and len(words) < 2:
        raise Inapplicable("nothing to swap with")
    fn(words, slot, rng)
    record = MutationRecord(MutationOperatorId(index, name), slot, test.id)
    return TestProgram(new_id or test.id, tuple(words), record)


def mutate(test: TestProgram, weights, rng: np.random.Generator,
           catalog: Sequence = CATALOG, new_id: Optional[str] = None) -> TestProgram:
    """Draw an operator from ``weights`` and apply it to a uniformly chosen slot.

    Inapplicable draws retry on a fresh slot up to ``len(test)`` times before
    falling back to a random replacement instruction.
    """
    if len(weights) != len(catalog):
        raise ValueError(f"expected {len(catalog)} weights, got {len(weights)}")
    j = sample_categorical(weights, rng)
    n = len(test)
    slot = int(rng.integers(n))
    for _ in range(n):
        try:
            return apply_operator(j, test, slot, rng, catalog, new_id)
        except Inapplicable:
            slot = int(rng.integers(n))
    words = list(test.words)
    _random_instr(words, slot, rng)
    record = MutationRecord(OPERATORS[11], slot, test.id)
    return TestProgram(new_id or test.id, tuple(words), record)
