"""Run each bug witness on the toy core and on the reference model, then classify the diffs."""
from swarmfuzz.detector import BUG_DESCRIPTIONS, compare_traces
from swarmfuzz.golden import golden_execute
from swarmfuzz.isa import program_from_text
from swarmfuzz.toy_dut import coverage_point_count, simulate
from swarmfuzz.witnesses import verify, witness

print("coverage points:", coverage_point_count())

for bug in BUG_DESCRIPTIONS:
    prog = witness(bug)
    cov, trace = simulate(prog)
    diffs = compare_traces(trace, golden_execute(prog))
    first = diffs[0]
    print(f"{bug}: {BUG_DESCRIPTIONS[bug]}")
    print(f"    first diff at instr {first.instruction_index} field {first.field}: "
          f"dut={first.dut_value} golden={first.golden_value} -> {first.matched_bug}"
          f" ({len(diffs)} diffs, {sum(d.cascading for d in diffs)} cascading)")

# a clean program produces identical traces
clean = program_from_text("addi x1,x0,7\nadd x2,x1,x1\nsw x2,x0,8\naddi x3,x0,1\nlw x4,x0,8")
print("clean program diffs:", compare_traces(simulate(clean)[1], golden_execute(clean)))

print("\n".join(s.line() for s in verify()))
