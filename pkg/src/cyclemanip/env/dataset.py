"""Annotated demonstration dataset generation."""

from __future__ import annotations

from pathlib import Path

from ..core.episode_io import write_episode, write_manifest
from ..core.stats import compute_stats
from ..core.types import Demonstration, ValidationError
from .expert import GenerationError, scripted_expert
from .tasks import TaskSpec

_RETRIES = 3


def episode_cycle_counts(episodes: int, lo: int, hi: int) -> list[int]:
    """Round-robin assignment of cycle counts over the episode index."""
    if episodes < 1:
        raise ValidationError(f"episodes must be >= 1, got {episodes}")
    if not 1 <= lo <= hi <= 8:
        raise ValidationError(f"cycle range [{lo}, {hi}] must sit inside [1, 8]")
    span = hi - lo + 1
    return [lo + i % span for i in range(episodes)]


def generate_demos(spec: TaskSpec, episodes: int, lo: int, hi: int,
                   seed: int) -> list[Demonstration]:
    demos = []
    for i, n in enumerate(episode_cycle_counts(episodes, lo, hi)):
        ep_seed = seed ^ i
        last_err = None
        for attempt in range(_RETRIES + 1):
            try:
                demos.append(scripted_expert(spec, n, ep_seed + 7919 * attempt))
                break
            except GenerationError as e:  # reseed and retry
                last_err = e
        else:
            raise GenerationError(
                f"episode {i} (n={n}) failed after {_RETRIES} reseeded retries: {last_err}"
            )
    return demos


def generate_dataset(spec: TaskSpec, episodes: int, cycle_range: tuple[int, int],
                     seed: int, out_dir) -> Path:
    """Write episode files plus a manifest; returns the manifest path.

    Deterministic in (spec, episodes, cycle_range, seed): re-running with
    the same arguments reproduces every byte.
    """
    lo, hi = cycle_range
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    demos = generate_demos(spec, episodes, lo, hi, seed)
    names = []
    for i, demo in enumerate(demos):
        name = f"ep_{i:04d}.jsonl"
        write_episode(out / name, demo)
        names.append(name)
    stats = compute_stats(demos)
    manifest = out / "manifest.json"
    write_manifest(manifest, spec.to_dict(), seed, names, stats)
    return manifest
