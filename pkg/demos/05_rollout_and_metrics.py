"""Closed-loop rollouts, judged and tabulated.

Loads nothing from disk: trains the same smoke-scale policy as demo 04,
then runs it closed-loop. Every rollout is judged by the trajectory
counters and aggregated into the two headline metrics: Suc. (success
rate) and Cyc. (mean absolute cycle-count error). At this scale the
numbers are poor; the point is the shape of the loop, not the score.
"""

from cyclemanip.core.episode_io import load_dataset
from cyclemanip.core.types import Instruction
from cyclemanip.env.dataset import generate_dataset
from cyclemanip.env.tasks import TaskSpec
from cyclemanip.evalcycle.judge import aggregate, judge_episode, render_table
from cyclemanip.policy import CheckpointBundle, PolicyConfig, rollout, train
from cyclemanip.rng import derive_seed

import tempfile
from pathlib import Path

work = Path(tempfile.mkdtemp(prefix="cyclemanip_demo_"))
spec = TaskSpec(task_id="shake")
manifest = generate_dataset(spec, episodes=12, cycle_range=(1, 2), seed=7,
                            out_dir=work / "data")
man, demos = load_dataset(manifest)

cfg = PolicyConfig(epochs=6, batch=32)
model, meta, _ = train(demos, man["stats"], cfg, seed=1)
bundle = CheckpointBundle(cfg=cfg, stats=man["stats"], model=model, meta=meta)

rows = []
for n in (1, 2):
    ins = Instruction(task_id="shake", target_cycles=n)
    reports = []
    for trial in range(5):
        frames = rollout(spec, ins, bundle, derive_seed(3, "demo", n, trial))
        reports.append(judge_episode(frames, spec, ins))
    counted = [r.counted_cycles for r in reports]
    print(f"n={n}: counted cycles per trial {counted}")
    rows.append((f"smoke n={n}", aggregate(reports)))

print()
print(render_table(rows))
