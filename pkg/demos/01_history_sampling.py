"""How the policy sees its past: cost-aware index sampling.

The policy consumes two history streams with very different price tags.
High-overhead frames (the visual proxy) are expensive to encode, so only
k of them are kept: half spread uniformly over the distant past, half
packed dyadically toward the present. Low-overhead pose diffs are cheap,
so every past frame contributes one. This script prints the chosen
indices for a few episode lengths so the density gradient is visible.
"""

import numpy as np

from cyclemanip.sampler import pose_diffs, sample_high_indices

print("high-overhead frame indices (k = 6)")
for t in (3, 6, 10, 30, 100, 400):
    idx = sample_high_indices(t, 6)
    print(f"  t = {t:4d}  ->  {idx}")

print()
print("the same frame budget at k = 2 / 4 / 8, t = 100")
for k in (2, 4, 8):
    print(f"  k = {k}  ->  {sample_high_indices(100, k)}")

# The low-overhead stream: per-step pose deltas. A sinusoidal z motion
# turns into a phase-shifted sinusoid of deltas; sign flips mark the
# turning points the cycle counters look for later.
t = np.arange(60)
proprio = np.zeros((60, 4))
proprio[:, 2] = 0.25 + 0.03 * np.sin(2 * np.pi * t / 20)
diffs = pose_diffs(proprio)
flips = np.where(np.diff(np.sign(diffs[1:, 2])) != 0)[0] + 1
print()
print(f"pose-diff rows: {diffs.shape[0]} (one per frame, row 0 is zero)")
print(f"z-delta sign flips at frames {flips.tolist()} (every half period)")
