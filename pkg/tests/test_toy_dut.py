import re
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

import swarmfuzz.toy_dut as dut_mod
from swarmfuzz.arch import (
    CAUSE_BREAKPOINT,
    CAUSE_ECALL_M,
    CAUSE_ECALL_U,
    CAUSE_ILLEGAL,
    CAUSE_LOAD_FAULT,
    CAUSE_LOAD_MISALIGNED,
    CAUSE_STORE_FAULT,
    CAUSE_STORE_MISALIGNED,
    MACHINE,
    USER,
    CoverageMap,
)
from swarmfuzz.golden import golden_execute
from swarmfuzz.isa import (
    ITYPES,
    TestProgram,
    assemble,
    decode,
    encode,
    format_instruction,
    parse_instruction,
    program_from_bytes,
    program_from_text,
    program_to_bytes,
    program_to_text,
    random_instruction,
)
from swarmfuzz.toy_dut import (
    NUM_POINTS,
    SITES,
    coverage_point_count,
    point_id,
    simulate,
)

NOP = "addi x0,x0,0"


def prog(text, pid="p"):
    return program_from_text(text, pid)


def padded(text, n=20):
    lines = [l for l in text.strip().splitlines() if l.strip()]
    return prog("\n".join(lines + [NOP] * (n - len(lines))))


# -- encoding ----------------------------------------------------------------

@given(st.integers(0, 2 ** 32 - 1))
def test_decode_is_total_and_roundtrips(word):
    ins = decode(word)
    assert encode(ins) == word
    assert ins.itype in ITYPES or ins.mnemonic == "illegal"


def test_text_and_binary_roundtrip(rng):
    words = tuple(random_instruction(rng) for _ in range(200)) + (0xFFFFFFFF, 0x3F)
    p = TestProgram("x", words)
    assert program_from_text(program_to_text(p)).words == words
    assert program_from_bytes(program_to_bytes(p)).words == words
    assert program_to_bytes(TestProgram("y", (1,))) == b"\x01\x00\x00\x00"


def test_text_format_examples():
    assert format_instruction(assemble("add", rd=1, rs1=2, rs2=3)) == "add x1,x2,x3"
    assert format_instruction(assemble("lw", rd=4, rs1=5, imm=-8)) == "lw x4,x5,-8"
    assert format_instruction(assemble("sw", rs1=5, rs2=6, imm=4)) == "sw x6,x5,4"
    assert format_instruction(assemble("csrrs", rd=15, rs1=0, imm=1)) == "csrrs x15,tvec,x0"
    assert parse_instruction("csrrs x15,tvec,x0") == assemble("csrrs", rd=15, rs1=0, imm=1)
    with pytest.raises(ValueError):
        parse_instruction("frobnicate x1,x2,x3")
    with pytest.raises(ValueError):
        parse_instruction("add x1,x2,x16")


def test_random_instruction_respects_type(rng):
    for t in ITYPES:
        for _ in range(50):
            ins = decode(random_instruction(rng, t))
            assert ins.itype == t and ins.is_canonical()


# -- coverage registry -------------------------------------------------------

def _grep_site_count():
    src = Path(dut_mod.__file__).read_text()
    block = re.search(r"^SITES = \((.*?)^\)", src, re.S | re.M).group(1)
    return len(re.findall(r'^\s*"[^"]+",', block, re.M))


def test_point_count_matches_registry_grep():
    n = _grep_site_count()
    assert coverage_point_count() == 2 * n == NUM_POINTS
    assert 150 <= NUM_POINTS <= 300


def test_point_ids_dense():
    ids = {point_id(s, b) for s in SITES for b in (True, False)}
    assert ids == set(range(NUM_POINTS))


def test_reachable_sites_stay_in_registry(rng):
    seen = 0
    for _ in range(1500):
        cov, _ = simulate(TestProgram("r", tuple(random_instruction(rng) for _ in range(20))))
        assert all(p < NUM_POINTS for p in cov.points())
        seen |= cov.bits
    # a healthy majority of points is reachable from plain random programs
    assert bin(seen).count("1") > 0.8 * NUM_POINTS


def test_coverage_map_ops():
    a, b = CoverageMap(10, 0b0011), CoverageMap(10, 0b0110)
    assert len(a.union(b)) == 3
    c = a.copy()
    assert c.update(b) == 1 and len(c) == 3 and len(a) == 2
    assert 1 in a and 2 not in a
    assert c.points() == [0, 1, 2]


# -- reference examples ------------------------------------------------------

def test_nop_program_hand_trace():
    cov, trace = simulate(prog((NOP + "\n") * 20))
    expected = {
        ("dec.spare_bits", False), ("dec.type_valid", True), ("dec.alui.is_shift", False),
        ("priv.user.ALU-I", False), ("haz.rs1_raw", False), ("ex.addi.neg_imm", False),
        ("ex.addi.ovf", False), ("ex.addi.zero_src", True), ("wb.rd_zero", True),
    }
    assert set(cov.points()) == {point_id(s, b) for s, b in expected}
    assert len(trace) == 20
    assert all(e.exception is None and e.gpr == (0, 0) for e in trace)


def test_csr_read_vs_set_points():
    c1 = point_id("dec.csrrs.rs1_zero", True)
    c2 = point_id("dec.csrrs.rs1_zero", False)
    read, _ = simulate(prog("csrrs x15,tvec,x0"))
    setp, _ = simulate(prog("csrrs x15,tvec,x3"))
    assert c1 in read and c2 not in read
    assert c2 in setp and c1 not in setp


def test_simulate_deterministic(rng):
    p = TestProgram("d", tuple(random_instruction(rng) for _ in range(20)))
    assert simulate(p) == simulate(p)


def test_x0_hardwired():
    for run in (lambda t: simulate(t)[1], golden_execute):
        tr = run(prog("addi x0,x0,5\nadd x1,x0,x0"))
        assert tr[0].gpr == (0, 0)
        assert tr[1].gpr == (1, 0)


def test_bug_free_program_traces_agree():
    p = padded("""
        addi x1,x0,100
        addi x2,x0,-7
        add x3,x1,x2
        sw x3,x0,8
        addi x4,x0,1
        lw x5,x0,8
        csrrw x6,scratch,x5
        csrrs x7,scratch,x0
        bne x5,x0,1
        addi x8,x0,1
        mret x0,x0,0
        csrrs x9,instret,x0
    """)
    d, g = simulate(p)[1], golden_execute(p)
    assert d == g
    assert g[5].gpr == (5, 93)
    assert g[7].gpr == (7, 93)
    assert g[9].pc == 10  # slot 9 skipped
    assert g[-2].privilege == USER


def test_b2_trigger_changes_product():
    p = prog("addi x1,x0,3\nmul x2,x1,x1")
    assert simulate(p)[1][1].gpr == (2, 6)
    assert golden_execute(p)[1].gpr == (2, 9)


# -- golden exceptions -------------------------------------------------------

@pytest.mark.parametrize("text,cause", [
    (".word 0x3f", CAUSE_ILLEGAL),
    ("lw x1,x0,2", CAUSE_LOAD_MISALIGNED),
    ("lw x1,x0,-4", CAUSE_LOAD_FAULT),
    ("sh x1,x0,1", CAUSE_STORE_MISALIGNED),
    ("sb x1,x0,-1", CAUSE_STORE_FAULT),
    ("ebreak x0,x0,0", CAUSE_BREAKPOINT),
    ("ecall x0,x0,0", CAUSE_ECALL_M),
    ("csrrs x1,csr12,x0", CAUSE_ILLEGAL),
    ("csrrw x1,timer,x2", CAUSE_ILLEGAL),
])
def test_golden_exceptions(text, cause):
    e = golden_execute(prog(text))[0]
    assert e.exception == cause
    assert e.privilege == MACHINE


@pytest.mark.parametrize("text,cause", [
    ("csrrs x1,scratch,x0", CAUSE_ILLEGAL),
    ("csrrs x1,instret,x2", CAUSE_ILLEGAL),
    ("mret x0,x0,0", CAUSE_ILLEGAL),
    ("ecall x0,x0,0", CAUSE_ECALL_U),
])
def test_golden_user_mode_exceptions(text, cause):
    tr = golden_execute(prog("mret x0,x0,0\n" + text))
    assert tr[0].privilege == USER
    assert tr[1].exception == cause
    assert tr[1].privilege == MACHINE


def test_user_mode_may_read_counters():
    tr = golden_execute(prog("mret x0,x0,0\ncsrrs x1,instret,x0\ncsrrs x2,timer,x0"))
    assert tr[1].exception is None and tr[1].gpr == (1, 1)
    assert tr[2].gpr == (2, 2)
