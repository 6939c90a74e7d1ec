"""Short campaigns for the four scheduling variants on the same seed."""
import numpy as np

from swarmfuzz.campaign import VARIANTS, CampaignConfig, run_campaign

for v in VARIANTS:
    r = run_campaign(CampaignConfig(variant=v, rng_seed=0, max_tests=3000, target_coverage=10 ** 6))
    resets = sum(x.resets_m for x in r.records)
    moving = np.mean(r.velocity_norms[-1] > 1e-3) if r.velocity_norms.size else 0.0
    found = {b: d.tests for b, d in sorted(r.bug_detection.items())}
    print(f"{v:10s} coverage {len(r.coverage):3d}  resets {resets:4d}  "
          f"moving particles at end {moving:.0%}  bugs {found}")

# plain pso stalls: particle speed decays once bests stop improving
r = run_campaign(CampaignConfig(variant="pso", rng_seed=0, max_tests=3000, target_coverage=10 ** 6))
for it in (0, 25, 50, 100, 200, 299):
    print(f"pso iter {it:3d} median |v| {np.median(r.velocity_norms[it]):.2e}")
