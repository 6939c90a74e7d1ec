"""Campaign checkpoints: a self-describing, integrity-checked binary file.

Layout: 8-byte magic, u32 header length, JSON header (format, version,
payload length and sha256), then a zlib-compressed JSON payload. Nothing is
unpickled, so a corrupted or hostile file can only fail to load.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import struct
import tempfile
import zlib
from pathlib import Path

import numpy as np

from .arch import CoverageMap
from .campaign import (BugDetection, Campaign, CampaignConfig, IterationRecord, SchedulingPolicy)
from .detector import Mismatch
from .toy_dut import NUM_POINTS
from .isa import TestProgram
from .mutation_engine import OPERATORS
from .pso_core import Particle, SwarmState
from .seed_generator import LifeRecord, uniform_rows

MAGIC = b"SWFZCKPT"
FORMAT = "swarmfuzz-checkpoint"
VERSION = 1
# Budget fields a resumed run may change without altering its trajectory.
BUDGET_FIELDS = ("target_coverage", "max_tests", "time_limit_secs", "out_dir", "checkpoint_every")


class CheckpointError(Exception):
    """The checkpoint is truncated, corrupted, or from an unknown format."""


def _rng_state(g: np.random.Generator) -> dict:
    return g.bit_generator.state


def _rng_from(state: dict) -> np.random.Generator:
    g = np.random.Generator(np.random.PCG64())
    g.bit_generator.state = state
    return g


def _particle_state(p: Particle) -> dict:
    return {"x": p.position.tolist(), "v": p.velocity.tolist(), "l": p.local_best_position.tolist(),
            "lf": p.local_best_fitness, "ct": p.stagnation_count}


def _particle_from(d: dict) -> Particle:
    return Particle(np.array(d["x"], dtype=float), np.array(d["v"], dtype=float),
                    np.array(d["l"], dtype=float), float(d["lf"]), int(d["ct"]))


def _swarm_state(s):
    if s is None:
        return None
    return {"particles": [_particle_state(p) for p in s.particles],
            "g": s.global_best_position.tolist(), "gf": s.global_best_fitness}


def _swarm_from(d):
    if d is None:
        return None
    return SwarmState([_particle_from(p) for p in d["particles"]],
                      np.array(d["g"], dtype=float), float(d["gf"]))


def _program(t: TestProgram) -> list:
    return [t.id, list(t.words)]


def campaign_state(c: Campaign) -> dict:
    return {
        "config": dataclasses.asdict(c.cfg),
        "policy": dataclasses.asdict(c.policy),
        "iteration": c.iteration,
        "tests_total": c.tests_total,
        "serial": c.serial,
        "elapsed": c.elapsed,
        "coverage": format(c.coverage.bits, "x"),
        "thread_cov": [format(b, "x") for b in c.thread_cov],
        "lives": [[life.born_at, life.reset_at] for life in c.lives],
        "pending": [_program(t) for t in c.pending],
        "bases": [_program(t) for t in c.bases],
        "swarm_m": _swarm_state(c.swarm_m),
        "swarm_t": _swarm_state(c.swarm_t),
        "rng_m": _rng_state(c.rng_m),
        "rng_t": _rng_state(c.rng_t),
        "seed_rngs": [_rng_state(g) for g in c.seed_rngs],
        "mut_rngs": [_rng_state(g) for g in c.mut_rngs],
        "records": [dataclasses.astuple(r) for r in c.records],
        "mismatches": [dataclasses.asdict(m) for m in c.mismatches],
        "bug_detection": {b: dataclasses.astuple(d) for b, d in c.bug_detection.items()},
        "velocity_norms": c.velocity_norms,
        "survivals": c.survivals,
    }


def _tuplify(v):
    return tuple(_tuplify(x) for x in v) if isinstance(v, list) else v


def campaign_from_state(state: dict, budget: CampaignConfig | None = None) -> Campaign:
    cfg_dict = dict(state["config"])
    if budget is not None:
        for name in BUDGET_FIELDS:
            cfg_dict[name] = getattr(budget, name)
    cfg = CampaignConfig(**cfg_dict)
    c = Campaign.__new__(Campaign)
    c.cfg = cfg
    c.policy = SchedulingPolicy(**state["policy"])
    c.iteration = state["iteration"]
    c.tests_total = state["tests_total"]
    c.serial = state["serial"]
    c.elapsed = state["elapsed"]
    c.coverage = CoverageMap(NUM_POINTS, int(state["coverage"], 16))
    c.thread_cov = [int(b, 16) for b in state["thread_cov"]]
    c.lives = [LifeRecord(b, r) for b, r in state["lives"]]
    c.pending = [TestProgram(i, tuple(w)) for i, w in state["pending"]]
    c.bases = [TestProgram(i, tuple(w)) for i, w in state["bases"]]
    c.swarm_m = _swarm_from(state["swarm_m"])
    c.swarm_t = _swarm_from(state["swarm_t"])
    c.rng_m = _rng_from(state["rng_m"])
    c.rng_t = _rng_from(state["rng_t"])
    c.seed_rngs = [_rng_from(s) for s in state["seed_rngs"]]
    c.mut_rngs = [_rng_from(s) for s in state["mut_rngs"]]
    c.records = [IterationRecord(*r) for r in state["records"]]
    c.mismatches = [Mismatch(**{k: _tuplify(v) for k, v in m.items()}) for m in state["mismatches"]]
    c.bug_detection = {b: BugDetection(*d) for b, d in state["bug_detection"].items()}
    c.velocity_norms = state["velocity_norms"]
    c.survivals = state["survivals"]
    c.uniform_m = np.full(len(OPERATORS), 1.0 / len(OPERATORS))
    c.uniform_t = uniform_rows(cfg.program_len)
    return c


def save_checkpoint(campaign: Campaign, path) -> Path:
    """Write atomically: a crash mid-write leaves the previous file intact."""
    path = Path(path)
    payload = zlib.compress(json.dumps(campaign_state(campaign), sort_keys=True).encode())
    header = json.dumps({"format": FORMAT, "version": VERSION, "payload_bytes": len(payload),
                         "sha256": hashlib.sha256(payload).hexdigest()}).encode()
    blob = MAGIC + struct.pack("<I", len(header)) + header + payload
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_checkpoint(path) -> dict:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint: {exc}") from exc
    if not blob.startswith(MAGIC) or len(blob) < len(MAGIC) + 4:
        raise CheckpointError("not a checkpoint file (bad magic)")
    (hlen,) = struct.unpack_from("<I", blob, len(MAGIC))
    start = len(MAGIC) + 4
    try:
        header = json.loads(blob[start:start + hlen])
    except (ValueError, UnicodeDecodeError) as exc:
        raise CheckpointError("corrupted checkpoint header") from exc
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise CheckpointError("unrecognized checkpoint format")
    if header.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')}")
    payload = blob[start + hlen:]
    if len(payload) != header.get("payload_bytes") or \
            hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise CheckpointError("checkpoint payload failed its integrity check")
    try:
        return json.loads(zlib.decompress(payload))
    except (zlib.error, ValueError) as exc:
        raise CheckpointError("checkpoint payload is unreadable") from exc


def load_checkpoint(path, budget: CampaignConfig | None = None) -> Campaign:
    """Restore a campaign; ``budget`` may override stopping conditions and output dir."""
    state = read_checkpoint(path)
    try:
        return campaign_from_state(state, budget)
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointError(f"checkpoint state is inconsistent: {exc}") from exc
