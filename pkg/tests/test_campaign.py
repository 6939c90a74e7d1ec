import filecmp

import numpy as np
import pytest

import swarmfuzz.campaign as campaign_mod
from swarmfuzz.campaign import (
    VARIANTS,
    Campaign,
    CampaignConfig,
    ConfigError,
    SchedulingPolicy,
    read_bugs_csv,
    read_campaign_csv,
    run_campaign,
    variant_behavior,
)
from swarmfuzz.isa import TestProgram, program_from_text
from swarmfuzz.toy_dut import NUM_POINTS


def cfg(**kw):
    kw.setdefault("max_tests", 200)
    return CampaignConfig(**kw)


def test_defaults():
    c = CampaignConfig()
    assert (c.n_particles, c.program_len, c.k, c.beta_m, c.beta_t) == (10, 20, 0.5, 3, 3)
    assert c.target_points() == NUM_POINTS


@pytest.mark.parametrize("bad", [dict(variant="bogus"), dict(k=1.2), dict(beta_m=0),
                                 dict(n_particles=0), dict(target_coverage=1.5),
                                 dict(max_tests=-1)])
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        CampaignConfig(**bad)


def test_variant_policies():
    assert variant_behavior("baseline") == SchedulingPolicy(False, False, False)
    assert variant_behavior("pso") == SchedulingPolicy(True, False, False)
    assert variant_behavior("pso-reset") == SchedulingPolicy(True, True, False)
    assert variant_behavior(cfg(variant="psofuzz")) == SchedulingPolicy(True, True, True)
    with pytest.raises(ConfigError):
        variant_behavior("nope")


def test_target_zero_runs_no_iterations():
    r = run_campaign(cfg(target_coverage=0))
    assert r.iterations == 0 and r.tests_total == 0


def test_target_fraction_stops_early():
    r = run_campaign(cfg(target_coverage=0.8, max_tests=10 ** 6))
    assert len(r.coverage) >= 0.8 * NUM_POINTS
    # the guard is checked before each iteration only
    assert r.records[-2].coverage < 0.8 * NUM_POINTS


def test_loop_guard_on_tests():
    r = run_campaign(cfg(max_tests=25))
    assert [x.tests_total for x in r.records] == [10, 20, 30]


def test_deterministic_csv(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        run_campaign(cfg(variant="psofuzz", max_tests=500, rng_seed=4, out_dir=str(out)))
    for name in ("campaign.csv", "bugs.csv", "mismatches.jsonl"):
        assert filecmp.cmp(a / name, b / name, shallow=False)


def test_artifacts_roundtrip(tmp_path):
    r = run_campaign(cfg(variant="pso-reset", max_tests=1000, rng_seed=1, out_dir=str(tmp_path)))
    assert read_campaign_csv(tmp_path / "campaign.csv") == r.records
    assert read_bugs_csv(tmp_path / "bugs.csv") == r.bug_detection
    header = (tmp_path / "campaign.csv").read_text().splitlines()[0]
    assert header == "iter,tests_total,coverage,new_points,resets_m,resets_t,gbest_fitness"
    n_lines = len((tmp_path / "mismatches.jsonl").read_text().splitlines())
    assert n_lines == len(r.mismatches)


def test_unwritable_out_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_campaign(cfg(out_dir=str(blocker / "sub")))


@pytest.mark.parametrize("variant", VARIANTS)
def test_coverage_monotone_and_bookkeeping(variant):
    r = run_campaign(cfg(variant=variant, max_tests=600, rng_seed=2))
    covs = [x.coverage for x in r.records]
    assert covs == sorted(covs)
    assert sum(x.new_points for x in r.records) == covs[-1]
    assert all(x.tests_total == 10 * x.iter for x in r.records)


def test_baseline_never_updates_swarm(monkeypatch):
    def boom(*a, **kw):
        raise AssertionError("swarm update in baseline")
    monkeypatch.setattr(campaign_mod, "update_pv", boom)
    monkeypatch.setattr(campaign_mod, "rst_mon", boom)
    r = run_campaign(cfg(variant="baseline"))
    assert r.iterations > 0


def test_pso_never_resets():
    r = run_campaign(cfg(variant="pso", max_tests=2000))
    assert all(x.resets_m == 0 and x.resets_t == 0 for x in r.records)
    assert r.survivals == []


def _stepper(variant, seed=0, **kw):
    return Campaign(cfg(variant=variant, rng_seed=seed, **kw))


@pytest.mark.parametrize("variant", ["pso-reset", "psofuzz"])
def test_pairing_discipline(variant):
    c = _stepper(variant)
    assert all(t.origin is None for t in c.pending)
    for _ in range(60):
        rec = c.step()
        seeds = [i for i, t in enumerate(c.pending) if t.origin is None]
        reborn = [i for i, life in enumerate(c.lives) if life.born_at == c.iteration]
        assert seeds == reborn
        assert len(seeds) == rec.resets_m
        assert len({t.id for t in c.pending}) == len(c.pending)
        # a fresh seed is also the thread's mutation base
        assert all(c.bases[i] is c.pending[i] for i in seeds)


def test_seed_swarm_gating():
    c = _stepper("psofuzz", seed=3)
    gated = 0
    for _ in range(80):
        before = [p.position.copy() for p in c.swarm_t.particles]
        rec = c.step()
        moved = [not np.array_equal(b, p.position) for b, p in zip(before, c.swarm_t.particles)]
        if rec.resets_m == 0:
            assert not any(moved)
            gated += 1
    assert gated > 0


def test_stagnation_counts_track_new_thread_coverage():
    c = _stepper("pso-reset", seed=5)
    for _ in range(60):
        fit_before = [b.bit_count() for b in c.thread_cov]
        ct_before = [p.stagnation_count for p in c.swarm_m.particles]
        fresh = [life.born_at == c.iteration for life in c.lives]
        c.step()
        for i, p in enumerate(c.swarm_m.particles):
            if c.lives[i].born_at == c.iteration or fresh[i]:
                continue
            fit_after = c.thread_cov[i].bit_count()
            assert fit_after >= fit_before[i]
            expect = 0 if fit_after > fit_before[i] else ct_before[i] + 1
            assert p.stagnation_count == expect


def test_variant_nesting():
    a = run_campaign(cfg(variant="pso", max_tests=800, rng_seed=6))
    off = SchedulingPolicy(use_pso=True, use_reset=False, use_seed_pso=False)
    b = run_campaign(cfg(variant="psofuzz", max_tests=800, rng_seed=6), policy=off)
    assert a.records == b.records
    assert np.array_equal(a.velocity_norms, b.velocity_norms)


def test_interesting_tests_become_bases():
    c = _stepper("baseline")
    c.coverage.bits = 0
    newp = program_from_text("addi x1,x0,5\n" * 20, "new")
    assert c._evaluate(0, newp) > 0
    assert c.bases[0] is newp
    again = TestProgram("again", newp.words)
    assert c._evaluate(0, again) == 0
    assert c.bases[0] is newp


def test_bug_detection_records_first_test():
    r = run_campaign(cfg(variant="baseline", max_tests=3000, rng_seed=1))
    assert r.bug_detection
    for bug, d in r.bug_detection.items():
        assert 1 <= d.tests <= r.tests_total
        hits = [m for m in r.mismatches if m.matched_bug == bug and not m.cascading]
        assert hits and hits[0].test_id == d.test_id


def test_censored_survival_for_reporting():
    r = run_campaign(cfg(variant="pso-reset", max_tests=500))
    assert len(r.censored_survivals) == 10
    assert all(0 <= s <= r.iterations for s in r.censored_survivals)
    assert all(s >= 1 for s in r.survivals)
