"""Episode and manifest serialization.

Episode files are JSON Lines: line 1 is a header object, each following
line is one frame. Serialization is canonical (fixed key order, compact
separators, \\n line endings), so write(read(path)) reproduces the file
byte for byte. Floats rely on repr round-tripping, which is exact for
finite float64.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .stats import NormalizationStats
from .types import (
    Demonstration,
    Instruction,
    ObsFrame,
    ProprioFrame,
    ValidationError,
    VisualProxy,
)

SCHEMA_VERSION = 1


class ParseError(ValueError):
    """A file failed to parse; message carries the 1-based line number."""


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write text to a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_bytes(path: str | Path, blob: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)


def episode_text(demo: Demonstration) -> str:
    """Canonical JSONL text of a demonstration. Validates first."""
    demo.validate()
    lines = [
        _dump(
            {
                "task_id": demo.instruction.task_id,
                "target_cycles": demo.instruction.target_cycles,
                "episode_len": demo.episode_len,
                "schema_version": SCHEMA_VERSION,
            }
        )
    ]
    for i in range(demo.episode_len):
        f = demo.frames[i]
        lines.append(
            _dump(
                {
                    "t": f.t,
                    "proprio": f.proprio.as_array().tolist(),
                    "visual": f.visual.as_array().tolist(),
                    "action": demo.actions[i].tolist(),
                    "cycles_done": demo.cycles_done[i],
                }
            )
        )
    return "\n".join(lines) + "\n"


def write_episode(path: str | Path, demo: Demonstration) -> None:
    atomic_write_text(path, episode_text(demo))


def _parse_line(line: str, lineno: int) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise ParseError(f"line {lineno}: invalid JSON ({e.msg})") from e
    if not isinstance(obj, dict):
        raise ParseError(f"line {lineno}: expected an object")
    return obj


def read_episode(path: str | Path) -> Demonstration:
    """Parse and validate an episode file.

    Raises ParseError (with line number) on malformed input and
    ValidationError when the parsed demonstration violates invariants.
    Never returns a partial Demonstration.
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("line 1: empty file")

    header = _parse_line(lines[0], 1)
    try:
        instruction = Instruction(
            task_id=header["task_id"], target_cycles=int(header["target_cycles"])
        )
        episode_len = int(header["episode_len"])
        version = int(header["schema_version"])
    except KeyError as e:
        raise ParseError(f"line 1: missing header field {e.args[0]!r}") from e
    if version != SCHEMA_VERSION:
        raise ParseError(f"line 1: unsupported schema_version {version}")
    if len(lines) - 1 != episode_len:
        raise ParseError(
            f"line {len(lines)}: header declares {episode_len} frames, "
            f"file has {len(lines) - 1}"
        )

    frames: list[ObsFrame] = []
    actions: list[np.ndarray] = []
    cycles: list[int] = []
    for i in range(episode_len):
        lineno = i + 2
        obj = _parse_line(lines[i + 1], lineno)
        try:
            p = np.asarray(obj["proprio"], dtype=np.float64)
            v = np.asarray(obj["visual"], dtype=np.float64)
            frames.append(
                ObsFrame(
                    t=int(obj["t"]),
                    proprio=ProprioFrame(ee_pos=p[:3], gripper=p[3]),
                    visual=VisualProxy.from_array(v),
                )
            )
            actions.append(np.asarray(obj["action"], dtype=np.float64))
            cycles.append(int(obj["cycles_done"]))
        except (KeyError, IndexError, TypeError, ValidationError) as e:
            raise ParseError(f"line {lineno}: malformed frame ({e})") from e

    demo = Demonstration(
        instruction=instruction,
        frames=frames,
        actions=actions,
        cycles_done=cycles,
        episode_len=episode_len,
    )
    demo.validate()
    return demo


def manifest_text(
    task_config: dict,
    seed: int,
    episode_files: list[str],
    stats: NormalizationStats,
) -> str:
    """Canonical JSON for a dataset manifest."""
    return (
        json.dumps(
            {
                "task": task_config,
                "seed": seed,
                "episodes": list(episode_files),
                "stats": stats.to_dict(),
                "schema_version": SCHEMA_VERSION,
            },
            separators=(",", ":"),
            sort_keys=False,
        )
        + "\n"
    )


def write_manifest(path: str | Path, task_config, seed, episode_files, stats) -> None:
    atomic_write_text(path, manifest_text(task_config, seed, episode_files, stats))


def read_manifest(path: str | Path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        try:
            m = json.load(f)
        except json.JSONDecodeError as e:
            raise ParseError(f"line {e.lineno}: invalid manifest JSON ({e.msg})") from e
    for key in ("task", "seed", "episodes", "stats"):
        if key not in m:
            raise ParseError(f"manifest missing field {key!r}")
    m["stats"] = NormalizationStats.from_dict(m["stats"])
    return m


def load_dataset(manifest_path: str | Path) -> tuple[dict, list[Demonstration]]:
    """Read a manifest and every episode it lists (paths are manifest-relative)."""
    manifest_path = Path(manifest_path)
    m = read_manifest(manifest_path)
    demos = [read_episode(manifest_path.parent / rel) for rel in m["episodes"]]
    return m, demos
