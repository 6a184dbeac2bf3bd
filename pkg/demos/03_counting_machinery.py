"""The three cycle counters on synthetic signals.

Shake cycles are peaks of the vertical trace, judged by prominence over
a sliding window so slow drift cannot fake a cycle. Hammer cycles are
contact events counted by a two-threshold hysteresis machine that
ignores chatter between the thresholds. Stir cycles are full revolutions
of the accumulated winding angle around the vessel center.
"""

import numpy as np

from cyclemanip.evalcycle.counters import (
    CounterConfig,
    count_contacts,
    count_peaks,
    count_revolutions,
)

# --- peaks: four raised-cosine bumps, then the same signal with noise
j = np.arange(4 * 20 + 1)
z = 1.0 - np.cos(2 * np.pi * j / 20)
z = np.concatenate([np.zeros(5), z, np.zeros(5)])
cfg = CounterConfig(kind="peaks", window=5, prominence=0.1)
clean = count_peaks(z, cfg)
noisy = count_peaks(z + np.random.default_rng(0).uniform(-0.01, 0.01, len(z)), cfg)
print(f"peaks:       clean {len(clean)}, with noise {len(noisy)} (truth 4)")

# a 0.02-tall ripple never reaches the 0.1 prominence bar
ripple = 0.3 + 0.02 * np.sin(2 * np.pi * np.arange(200) / 20)
print(f"             sub-threshold ripple -> {len(count_peaks(ripple, cfg))}")

# --- contacts: three strikes, then chatter inside the hysteresis band
strike = np.concatenate([np.full(6, 0.08), np.full(6, 0.0)])
d = np.concatenate([strike] * 3 + [np.full(6, 0.08)])
hcfg = CounterConfig(kind="contacts", engage=0.005, release=0.02)
print(f"contacts:    three strikes -> {len(count_contacts(d, hcfg))}")
chatter = np.tile([0.01, 0.018, 0.012, 0.019], 25)
print(f"             in-band chatter -> {len(count_contacts(chatter, hcfg))}")

# --- revolutions: jittered circles vs. a reciprocating arc
ang = 2 * np.pi * np.arange(3 * 30 + 1) / 30
xy = np.stack([0.6 + 0.06 * np.cos(ang), 0.6 + 0.06 * np.sin(ang)], axis=1)
xy += np.random.default_rng(1).uniform(-0.004, 0.004, xy.shape)
xy[-1] = xy[0]
count, _, _ = count_revolutions(xy, np.array([0.6, 0.6]))
print(f"revolutions: jittered 3-loop circle -> {count}")

sweep = np.concatenate([np.linspace(0, np.pi / 2, 40),
                        np.linspace(np.pi / 2, 0, 40)] * 5)
arc = np.stack([0.6 + 0.06 * np.cos(sweep), 0.6 + 0.06 * np.sin(sweep)], axis=1)
count, _, _ = count_revolutions(arc, np.array([0.6, 0.6]))
print(f"             back-and-forth arc -> {count} (never a full turn)")
