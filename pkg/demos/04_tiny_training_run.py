"""Train a smoke-scale policy in about a minute.

Twelve shake demonstrations, a handful of epochs: nowhere near enough
for a competent policy, but the full pipeline runs — dataset generation,
normalization, history assembly, the diffusion + progress loss, the
cosine-schedule optimizer — and the loss falls. The real recipe is the
same command with the full dataset and default epochs (see README).
"""

import tempfile
import time
from pathlib import Path

from cyclemanip.core.episode_io import load_dataset
from cyclemanip.env.dataset import generate_dataset
from cyclemanip.env.tasks import TaskSpec
from cyclemanip.policy import (
    CheckpointBundle,
    PolicyConfig,
    save_checkpoint,
    train,
)

work = Path(tempfile.mkdtemp(prefix="cyclemanip_demo_"))
spec = TaskSpec(task_id="shake")

manifest = generate_dataset(spec, episodes=12, cycle_range=(1, 2), seed=7,
                            out_dir=work / "data")
man, demos = load_dataset(manifest)
print(f"dataset: {len(demos)} episodes at {manifest}")

cfg = PolicyConfig(epochs=6, batch=32)
t0 = time.time()


def on_epoch(epoch, step, mean_loss):
    print(f"  epoch {epoch + 1}/{cfg.epochs}  loss {mean_loss:.4f}  "
          f"({time.time() - t0:.0f}s)")


model, meta, curve = train(demos, man["stats"], cfg, seed=1, on_epoch=on_epoch)

ck = work / "tiny.bin"
save_checkpoint(ck, CheckpointBundle(cfg=cfg, stats=man["stats"],
                                     model=model, meta=meta))
acc = meta["holdout_progress_accuracy"]
print(f"checkpoint: {ck}")
print(f"loss {curve[0]['loss']:.3f} -> {curve[-1]['loss']:.3f} over "
      f"{meta['total_steps']} steps; progress accuracy {acc:.2f}")
