import numpy as np
import pytest
from programs import motivating_probability

from swarmfuzz.isa import (
    FORMAT_IMM_RANGE,
    TestProgram,
    assemble,
    decode,
    encode,
    program_from_text,
    random_instruction,
)
from swarmfuzz.mutation_engine import (
    OPERATORS,
    WHOLE_PROGRAM,
    Inapplicable,
    apply_operator,
    mutate,
    operator_list,
)
from swarmfuzz.toy_dut import point_id, simulate

NAMES = ["Bitflip1", "Bitflip2", "Bitflip4", "ByteFlip", "ArithAddSub", "OpcodeMut",
         "OpcodeCrossMut", "RegMut", "RandomImm", "SwapInstr", "DeleteAppend", "RandomInstr"]


class ScriptedRng:
    """Replays fixed ``integers`` draws; defers everything else to numpy."""

    def __init__(self, ints, seed=0):
        self.ints = list(ints)
        self.inner = np.random.default_rng(seed)

    def integers(self, *a, **kw):
        return self.ints.pop(0) if self.ints else self.inner.integers(*a, **kw)

    def random(self, *a, **kw):
        return self.inner.random(*a, **kw)


def op(name):
    return OPERATORS[NAMES.index(name)]


def random_program(rng, n=20):
    return TestProgram("base", tuple(random_instruction(rng) for _ in range(n)))


def test_operator_list():
    ops = operator_list()
    assert len(ops) == 12
    assert [o.name for o in ops] == NAMES
    assert [o.index for o in ops] == list(range(12))
    assert operator_list() == ops


def test_bitflip1_example():
    t = TestProgram("t", (0x00000001,))
    out = apply_operator(op("Bitflip1"), t, 0, ScriptedRng([0]))
    assert out.words == (0,)


def test_bitflip1_point_mass_flips_one_bit(rng):
    w = np.zeros(12)
    w[0] = 1
    for _ in range(200):
        t = random_program(rng)
        m = mutate(t, w, rng)
        diffs = [a ^ b for a, b in zip(t.words, m.words) if a != b]
        assert len(diffs) == 1 and bin(diffs[0]).count("1") == 1
        assert m.origin.operator.name == "Bitflip1"


def test_swap_example():
    t = TestProgram("t", tuple(range(10)))
    out = apply_operator(op("SwapInstr"), t, 2, ScriptedRng([4]))
    assert out.words == (0, 1, 5, 3, 4, 2, 6, 7, 8, 9)


def test_delete_append_preserves_length(rng):
    t = random_program(rng)
    out = apply_operator(op("DeleteAppend"), t, 3, rng)
    assert len(out) == 20
    assert out.words[:3] == t.words[:3] and out.words[3:19] == t.words[4:]


def test_random_imm_on_i_format(rng):
    word = assemble("addi", rd=3, rs1=4, imm=17)
    lo, hi = FORMAT_IMM_RANGE["I"]
    seen = set()
    for _ in range(300):
        out = apply_operator(op("RandomImm"), TestProgram("t", (word,)), 0, rng).words[0]
        ins = decode(out)
        assert (ins.mnemonic, ins.rd, ins.rs1) == ("addi", 3, 4)
        assert lo <= ins.imm <= hi
        # only the immediate field may differ
        mask = ((1 << 12) - 1) << 18
        assert (out ^ word) & ~mask == 0
        seen.add(ins.imm)
    assert min(seen) < 0 < max(seen)


def test_random_imm_inapplicable_on_r_format(rng):
    t = TestProgram("t", (assemble("add", 1, 2, 3),))
    with pytest.raises(Inapplicable):
        apply_operator(op("RandomImm"), t, 0, rng)


def test_opcode_mut_keeps_type_and_operands(rng):
    word = assemble("csrrs", rd=15, rs1=0, imm=1)
    for _ in range(100):
        out = decode(apply_operator(op("OpcodeMut"), TestProgram("t", (word,)), 0, rng).words[0])
        assert out.itype == "SYSTEM" and out.mnemonic != "csrrs"
        assert (out.rd, out.rs1, out.imm) == (15, 0, 1)


def test_opcode_cross_mut_changes_type_and_relegalizes(rng):
    for _ in range(300):
        t = TestProgram("t", (random_instruction(rng),))
        out = decode(apply_operator(op("OpcodeCrossMut"), t, 0, rng).words[0])
        assert out.itype != decode(t.words[0]).itype
        assert out.is_canonical()


def test_reg_mut_changes_one_register(rng):
    word = assemble("add", rd=1, rs1=2, rs2=3)
    for _ in range(100):
        out = decode(apply_operator(op("RegMut"), TestProgram("t", (word,)), 0, rng).words[0])
        regs = (out.rd, out.rs1, out.rs2)
        assert sum(a != b for a, b in zip(regs, (1, 2, 3))) == 1
        assert out.mnemonic == "add"


def test_arith_and_bitflips_stay_in_slot(rng):
    for name in ("Bitflip2", "Bitflip4", "ByteFlip", "ArithAddSub", "RandomInstr"):
        for _ in range(50):
            t = random_program(rng)
            out = apply_operator(op(name), t, 7, rng)
            assert [i for i in range(20) if t.words[i] != out.words[i]] in ([], [7])


def test_locality_and_closure(rng):
    w = np.full(12, 1 / 12)
    for _ in range(2000):
        t = random_program(rng)
        m = mutate(t, w, rng)
        assert len(m) == 20
        assert all(encode(decode(x)) == x for x in m.words)
        changed = sum(a != b for a, b in zip(t.words, m.words))
        if m.origin.operator.name not in WHOLE_PROGRAM:
            assert changed <= 1
        assert 0 <= m.origin.instruction_slot < 20
        assert m.origin.parent_test_id == "base"


def test_mutate_deterministic():
    t = random_program(np.random.default_rng(5))
    w = np.full(12, 1 / 12)
    a = [mutate(t, w, np.random.default_rng(9)).words for _ in range(3)]
    assert a[0] == a[1] == a[2]


def test_mutate_rejects_wrong_weights(rng):
    with pytest.raises(ValueError):
        mutate(random_program(rng), [1.0], rng)


def test_inapplicable_falls_back_to_random_instr(rng):
    t = TestProgram("t", tuple(assemble("add", 1, 2, 3) for _ in range(20)))
    w = np.zeros(12)
    w[8] = 1  # RandomImm never applies to R-format
    m = mutate(t, w, rng)
    assert m.origin.operator.name == "RandomInstr"


def test_operator_frequencies_match_weights():
    rng = np.random.default_rng(11)
    # every operator applies to every I-format slot, so no fallbacks occur
    t = TestProgram("t", tuple(assemble("addi", rd=1 + i % 15, rs1=i % 16, imm=i) for i in range(20)))
    w = rng.random(12)
    w /= w.sum()
    n = 10 ** 5
    counts = np.zeros(12)
    for _ in range(n):
        counts[mutate(t, w, rng).origin.operator.index] += 1
    assert np.max(np.abs(counts / n - w)) < 0.01


def test_motivating_example_seed_covers_only_c1():
    cov, _ = simulate(program_from_text("csrrs x15,tvec,x0"))
    assert point_id("dec.csrrs.rs1_zero", True) in cov
    assert point_id("dec.csrrs.rs1_zero", False) not in cov


@pytest.mark.parametrize("weights,expected", [((0.5, 0.5), 0.5), ((0.9, 0.1), 0.9)])
def test_motivating_example_probabilities(weights, expected):
    assert abs(motivating_probability(weights) - expected) <= 0.02
