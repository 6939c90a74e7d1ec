"""Particle swarm over probability simplices, with a stagnation/reset monitor.

Positions are weight vectors (1-D) or stacks of weight vectors (2-D, one
simplex per row). Velocities are unconstrained; after every position step
the result is projected back onto the simplex row by row.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

SUM_TOL = 1e-9


class DegenerateWeightsError(ValueError):
    """A weight vector with no positive mass cannot be normalized."""


class ContractError(ValueError):
    """Arguments violate an operation's preconditions."""


@dataclass(frozen=True)
class PsoConfig:
    k: float = 0.5
    beta: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.k <= 1.0:
            raise ValueError(f"k must lie in [0, 1], got {self.k}")
        if self.beta < 1:
            raise ValueError(f"beta must be >= 1, got {self.beta}")


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    local_best_position: np.ndarray
    local_best_fitness: float = -math.inf
    stagnation_count: int = 0

    def copy(self) -> "Particle":
        return Particle(self.position.copy(), self.velocity.copy(),
                        self.local_best_position.copy(), self.local_best_fitness,
                        self.stagnation_count)


@dataclass
class SwarmState:
    particles: list
    global_best_position: np.ndarray
    global_best_fitness: float = -math.inf

    def __len__(self) -> int:
        return len(self.particles)

    def copy(self) -> "SwarmState":
        return SwarmState([p.copy() for p in self.particles],
                          self.global_best_position.copy(), self.global_best_fitness)

    def velocity_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(p.velocity) for p in self.particles])


@dataclass
class RstMonResult:
    reset: list = field(default_factory=list)
    global_best_index: int = 0


def normalize(raw) -> np.ndarray:
    w = np.asarray(raw, dtype=float)
    if np.any(w < 0):
        raise ContractError("weights must be nonnegative")
    total = w.sum()
    if not total > 0:
        raise DegenerateWeightsError("all-zero weight vector")
    return w / total


def project_to_simplex(raw) -> np.ndarray:
    """Clip negatives to zero and renormalize along the last axis.

    Rows with no positive entry map to the uniform distribution.
    """
    v = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ContractError("non-finite entry in position")
    v = np.clip(v, 0.0, None)
    sums = v.sum(axis=-1, keepdims=True)
    uniform = np.full_like(v, 1.0 / v.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(sums > 0, v / np.where(sums > 0, sums, 1.0), uniform)
    return out


def is_simplex(w, tol: float = SUM_TOL) -> bool:
    w = np.asarray(w, dtype=float)
    return bool(np.all(w >= 0) and np.all(np.abs(w.sum(axis=-1) - 1.0) <= tol))


def random_simplex(shape, rng: np.random.Generator) -> np.ndarray:
    """Normalized independent Uniform(0,1) draws, one simplex per row."""
    return project_to_simplex(rng.random(shape))


def update_velocity(particle: Particle, g_best, cfg: PsoConfig, r1: float, r2: float) -> np.ndarray:
    p = particle.position
    g_best = np.asarray(g_best, dtype=float)
    if not (p.shape == particle.velocity.shape == particle.local_best_position.shape == g_best.shape):
        raise ContractError("position, velocity and best shapes disagree")
    return (cfg.k * particle.velocity
            + r1 * (particle.local_best_position - p)
            + r2 * (g_best - p))


def update_position(particle: Particle) -> np.ndarray:
    particle.position = project_to_simplex(particle.position + particle.velocity)
    return particle.position


def rst_mon(swarm: SwarmState, beta: int, fitness: Mapping[int, float]) -> RstMonResult:
    """Stagnation monitor.

    Particles absent from ``fitness`` are not evaluated this round and keep
    their counters. Ties with the local best count as no improvement.
    """
    result = RstMonResult()
    for i in sorted(fitness):
        part = swarm.particles[i]
        f = fitness[i]
        if f > part.local_best_fitness:
            part.local_best_position = part.position.copy()
            part.local_best_fitness = f
            part.stagnation_count = 0
        else:
            part.stagnation_count += 1
        if part.stagnation_count > beta:
            result.reset.append(i)
    best = max(range(len(swarm.particles)), key=lambda j: (swarm.particles[j].local_best_fitness, -j))
    swarm.global_best_position = swarm.particles[best].local_best_position.copy()
    swarm.global_best_fitness = swarm.particles[best].local_best_fitness
    result.global_best_index = best
    return result


def new_particle(shape, rng: np.random.Generator) -> Particle:
    pos = random_simplex(shape, rng)
    return Particle(pos, np.zeros_like(pos), pos.copy())


def reset_particle(particle: Particle, rng: np.random.Generator) -> Particle:
    """Fresh random position, zero velocity; local-best history is dropped."""
    return new_particle(particle.position.shape, rng)


def init_swarm(n: int, shape, rng: np.random.Generator) -> SwarmState:
    particles = [new_particle(shape, rng) for _ in range(n)]
    return SwarmState(particles, particles[0].position.copy())


def update_pv(swarm: SwarmState, cfg: PsoConfig, rng: np.random.Generator,
              reset: Sequence[int] = (), only: Optional[Sequence[int]] = None) -> None:
    """Move every particle (or those in ``only``) one step; reset the ones in ``reset``.

    One scalar r1 and r2 are drawn per moved particle, in index order.
    """
    reset = set(reset)
    indices = range(len(swarm.particles)) if only is None else sorted(only)
    for i in indices:
        part = swarm.particles[i]
        if i in reset:
            swarm.particles[i] = reset_particle(part, rng)
            continue
        r1, r2 = rng.random(), rng.random()
        part.velocity = update_velocity(part, swarm.global_best_position, cfg, r1, r2)
        update_position(part)


def sample_categorical(w, rng: np.random.Generator) -> int:
    """Inverse-CDF draw of an index with probability ``w[j]``."""
    w = np.asarray(w, dtype=float)
    cdf = np.cumsum(w)
    u = rng.random() * cdf[-1]
    j = int(np.searchsorted(cdf, u, side="right"))
    if j >= len(w):
        j = int(np.flatnonzero(w > 0)[-1])
    return j
