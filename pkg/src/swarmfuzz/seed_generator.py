"""Seed programs drawn from per-slot instruction-type distributions.

A seed particle's position is an ``(|O|, |T|)`` matrix whose rows are
probability vectors over ``ITYPES``. Its fitness is how many iterations the
paired mutation particle lived before being reset.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from .isa import ITYPES, NUM_TYPES, TestProgram, random_instruction
from .pso_core import ContractError, PsoConfig, SwarmState, is_simplex, rst_mon, sample_categorical, update_pv


def uniform_rows(program_len: int) -> np.ndarray:
    return np.full((program_len, NUM_TYPES), 1.0 / NUM_TYPES)


def gen_seed(rows, rng: np.random.Generator, program_id: str = "seed") -> TestProgram:
    """One instruction per row: type ~ row, then opcode and operands uniformly."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2 or rows.shape[1] != NUM_TYPES or not is_simplex(rows):
        raise ContractError("seed position must be |O| x |T| rows on the simplex")
    words = [random_instruction(rng, ITYPES[sample_categorical(row, rng)]) for row in rows]
    return TestProgram(program_id, tuple(words))


@dataclass
class LifeRecord:
    """Birth and (if reset this iteration) death of one mutation particle."""

    born_at: int
    reset_at: Optional[int] = None


def seed_fitness(history: LifeRecord) -> int:
    if history.reset_at is None:
        raise ContractError("survival is only defined for a particle that was just reset")
    return history.reset_at - history.born_at


def update_seed_swarm(seed_swarm: SwarmState, fitness: Mapping[int, float], beta_t: int,
                      cfg: PsoConfig, rng: np.random.Generator) -> list:
    """Stagnation check and one PSO step for the seed particles in ``fitness``.

    Only the particles whose threads were reset are evaluated and moved, so a
    seed particle's position changes exactly once per mutation-particle life.
    Returns the seed particles that were reset.
    """
    if not fitness:
        return []
    result = rst_mon(seed_swarm, beta_t, fitness)
    update_pv(seed_swarm, cfg, rng, reset=result.reset, only=list(fitness))
    return result.reset
