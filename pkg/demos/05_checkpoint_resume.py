"""Stop a campaign halfway, save it, resume, and compare with an uninterrupted run."""
import filecmp
import tempfile
from pathlib import Path

from swarmfuzz.campaign import Campaign, CampaignConfig, run_campaign
from swarmfuzz.checkpoint import read_checkpoint, save_checkpoint

with tempfile.TemporaryDirectory() as d:
    d = Path(d)
    run_campaign(CampaignConfig(rng_seed=5, max_tests=2000, out_dir=str(d / "whole")))

    half = Campaign(CampaignConfig(rng_seed=5, max_tests=1000))
    half.run()
    ck = save_checkpoint(half, d / "ck.bin")
    state = read_checkpoint(ck)
    print(f"checkpoint {ck.stat().st_size} bytes, iteration {state['iteration']}, keys {sorted(state)[:6]}")

    # the budget comes from the new config; swarm parameters come from the checkpoint
    run_campaign(CampaignConfig(rng_seed=5, max_tests=2000, out_dir=str(d / "resumed")), resume=ck)
    for name in ("campaign.csv", "bugs.csv", "mismatches.jsonl"):
        same = filecmp.cmp(d / "whole" / name, d / "resumed" / name, shallow=False)
        print(f"{name}: {'identical' if same else 'DIFFERENT'}")
