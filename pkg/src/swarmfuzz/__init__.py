"""Swarm-scheduled differential fuzzing of a toy processor.

Mutation-operator weights and per-slot seed instruction-type weights are
tuned by particle swarms with stagnation resets; a buggy instrumented
interpreter is checked against a golden model instruction by instruction.
"""
from .arch import ArchTrace, CoverageMap, TraceEntry
from .campaign import (VARIANTS, Campaign, CampaignConfig, CampaignResult, ConfigError,
                       SchedulingPolicy, run_campaign, variant_behavior)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .detector import BUG_IDS, Mismatch, check_program, classify, compare_traces, detected_bugs
from .toy_dut import coverage_point_count, simulate
from .golden import golden_execute
from .isa import TestProgram, assemble, decode, program_from_text, program_to_text
from .mutation_engine import CATALOG, OPERATORS, apply_operator, mutate
from .pso_core import (PsoConfig, Particle, SwarmState, init_swarm, project_to_simplex, rst_mon,
                  update_position, update_pv, update_velocity)
from .seed_generator import gen_seed, seed_fitness

__version__ = "0.1.0"
