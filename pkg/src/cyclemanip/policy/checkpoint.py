"""Single-file binary checkpoints.

Layout: 4-byte magic ``CMLC``, little-endian u32 format version,
little-endian u64 JSON header length, the UTF-8 JSON header, then every
parameter flattened to little-endian float64 in registry order. The
header carries the policy config, normalization stats, the parameter
shape table, and free-form metadata. Loading then saving reproduces the
file byte for byte.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

from ..core.episode_io import ParseError, atomic_write_bytes
from ..core.stats import NormalizationStats
from .config import PolicyConfig
from .model import PolicyModel

MAGIC = b"CMLC"
FORMAT_VERSION = 1


@dataclass
class CheckpointBundle:
    cfg: PolicyConfig
    stats: NormalizationStats
    model: PolicyModel
    meta: dict


def _header_bytes(bundle: CheckpointBundle) -> bytes:
    header = {
        "config": bundle.cfg.to_dict(),
        "stats": bundle.stats.to_dict(),
        "shapes": bundle.model.store.shape_table(),
        "meta": bundle.meta,
    }
    return json.dumps(
        header, separators=(",", ":"), allow_nan=False
    ).encode("utf-8")


def save_checkpoint(path: str | Path, bundle: CheckpointBundle) -> None:
    header = _header_bytes(bundle)
    blob = bundle.model.store.to_blob()
    payload = (
        MAGIC
        + struct.pack("<I", FORMAT_VERSION)
        + struct.pack("<Q", len(header))
        + header
        + blob
    )
    atomic_write_bytes(Path(path), payload)


def load_checkpoint(path: str | Path) -> CheckpointBundle:
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != MAGIC:
        raise ParseError(f"{path}: not a policy checkpoint")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != FORMAT_VERSION:
        raise ParseError(f"{path}: unsupported checkpoint version {version}")
    hlen = struct.unpack("<Q", raw[8:16])[0]
    if 16 + hlen > len(raw):
        raise ParseError(f"{path}: truncated header")
    try:
        header = json.loads(raw[16 : 16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"{path}: bad header: {e}") from e
    for key in ("config", "stats", "shapes", "meta"):
        if key not in header:
            raise ParseError(f"{path}: header missing {key!r}")

    cfg = PolicyConfig.from_dict(header["config"])
    stats = NormalizationStats.from_dict(header["stats"])
    # The parameter layout is fully determined by the config; the init
    # values are immediately overwritten by the stored blob.
    model = PolicyModel(cfg, seed=0)
    model.store.load_blob(header["shapes"], raw[16 + hlen :])
    return CheckpointBundle(
        cfg=cfg, stats=stats, model=model, meta=header["meta"]
    )
