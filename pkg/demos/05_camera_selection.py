"""Which cameras should reconstruct a given marker?

Pairs are ranked by the std of their fused estimate. Greedy selection then
grows the best pair one camera at a time.
"""
from mocapvar import greedy_select, rank_pairs, ring_scenario

scenario = ring_scenario(16)
target = [2.0, 1.0, 0.0]

for pair in rank_pairs(scenario, target)[:5]:
    print(f"{pair.camera_a} + {pair.camera_b}: {pair.quality * 1e3:.4f} mm")

sel = greedy_select(scenario, target, 6)
for cam_id, std in zip(sel.camera_ids[1:], sel.stds):
    print(f"up to {cam_id}: {std * 1e3:.4f} mm")
