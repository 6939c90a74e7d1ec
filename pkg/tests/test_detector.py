import json

import numpy as np
import pytest
from programs import trigger_free_program

from swarmfuzz.arch import ArchTrace, TraceEntry
from swarmfuzz.detector import (
    BUG_IDS,
    Mismatch,
    TraceContractError,
    check_program,
    classify,
    compare_traces,
    detected_bugs,
)
from swarmfuzz.golden import golden_execute
from swarmfuzz.isa import assemble
from swarmfuzz.toy_dut import simulate
from swarmfuzz.witnesses import verify, witness


def test_identical_traces_empty():
    p = witness("B2")
    g = golden_execute(p)
    assert compare_traces(g, g) == []


def test_trace_id_contract():
    a = ArchTrace("a", ())
    with pytest.raises(TraceContractError):
        compare_traces(a, ArchTrace("b", ()))


def test_b6_witness_single_csr_mismatch():
    ms = check_program(witness("B6"))
    assert len(ms) == 1
    m = ms[0]
    assert m.field == "csr" and m.matched_bug == "B6" and not m.cascading
    assert m.dut_value != m.golden_value


def test_b2_witness_gpr_at_multiply():
    ms = check_program(witness("B2"))
    assert [(m.field, m.instruction_index) for m in ms] == [("gpr", 1)]


@pytest.mark.parametrize("bug", BUG_IDS)
def test_each_witness_classifies_to_itself(bug):
    p = witness(bug)
    assert len(p) == 20
    ms = check_program(p)
    assert ms
    assert detected_bugs(ms) == {bug}
    for m in ms:
        assert m.dut_value != m.golden_value


def test_verify_all_ok():
    assert all(s.ok for s in verify())


def test_verify_flags_corrupted_witness():
    bad = witnesses_with("B2", "addi x1,x0,3\nmul x2,x1,x3")
    statuses = {s.bug: s for s in verify(bad)}
    assert not statuses["B2"].ok
    assert statuses["B5"].ok


def witnesses_with(bug, text):
    from swarmfuzz.isa import program_from_text
    progs = {b: witness(b) for b in BUG_IDS}
    progs[bug] = program_from_text(text, "bad")
    return progs


def test_cascading_after_first_divergence():
    # B2 corrupts x2, which then flows into a later add
    from swarmfuzz.isa import program_from_text
    p = program_from_text("addi x1,x0,3\nmul x2,x1,x1\nadd x3,x2,x0")
    ms = check_program(p)
    assert [(m.instruction_index, m.cascading) for m in ms] == [(1, False), (2, True)]
    assert detected_bugs(ms) == {"B2"}


def test_length_mismatch_reported_as_commit():
    e = TraceEntry(0, 1, None, (0, 0))
    d = ArchTrace("t", (e,))
    g = ArchTrace("t", (e, TraceEntry(1, 1, None, (0, 0))))
    ms = compare_traces(d, g)
    assert len(ms) == 1 and ms[0].field == "commit" and ms[0].instruction_index == 1


def test_commit_mismatch_skips_other_fields():
    d = ArchTrace("t", (TraceEntry(0, 1, 3, (1, 1)),))
    g = ArchTrace("t", (TraceEntry(1, 1, None, (0, 0)),))
    ms = compare_traces(d, g)
    assert [m.field for m in ms] == ["commit"]


def test_unknown_signature_is_unclassified():
    forged = Mismatch("t", 0, "privilege", "U", "M", assemble("add", 1, 2, 3))
    assert classify(forged) is None
    assert classify(Mismatch("t", 0, "gpr", 1, 2, None)) is None


def test_mismatch_json_roundtrip():
    m = check_program(witness("B4"))[0]
    d = json.loads(m.to_json())
    assert d["matched_bug"] == "B4" and d["test_id"] == "witness-B4"


def test_zero_false_positives_trigger_free():
    rng = np.random.default_rng(2024)
    for _ in range(10 ** 4):
        p = trigger_free_program(rng)
        _, d = simulate(p)
        assert d == golden_execute(p), p
