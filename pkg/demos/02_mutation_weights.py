"""Operator weights decide which coverage points a mutant can reach."""
import numpy as np

from swarmfuzz.isa import program_to_text, program_from_text
from swarmfuzz.mutation_engine import CATALOG, flip_field_bit, mutate, operator_list
from swarmfuzz.toy_dut import point_id, simulate

print([op.name for op in operator_list()])

rng = np.random.default_rng(1)
base = program_from_text("addi x1,x0,5\nadd x2,x1,x1\nsw x2,x0,4")
w = np.full(12, 1 / 12)
for _ in range(3):
    child = mutate(base, w, rng)
    print(child.origin.operator.name, "->", program_to_text(child).splitlines())

# a csrrs with rs1 = x0 covers only the "rs1 is zero" side of its decode check;
# flipping an rs1 bit reaches the other side, swapping the opcode never does
seed = program_from_text("csrrs x15,tvec,x0")
catalog = (("Bitflip", flip_field_bit("rs1")), ("OpcodeMut", CATALOG[5][1]))
target = point_id("dec.csrrs.rs1_zero", False)
for weights in ((0.5, 0.5), (0.9, 0.1), (0.1, 0.9)):
    r = np.random.default_rng(0)
    hits = sum(target in simulate(mutate(seed, weights, r, catalog=catalog))[0] for _ in range(5000))
    print(f"weights {weights}: P(new point) = {hits / 5000:.3f}")
