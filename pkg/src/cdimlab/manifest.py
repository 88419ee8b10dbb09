"""Run manifests and canonical JSON output.

The manifest hash covers the config (minus the output directory) and the library version,
so reruns share it; wall time is recorded in the manifest but kept out of the hash.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def config_hash(config: dict) -> str:
    # where the artifacts land does not change what they contain
    config = {k: v for k, v in config.items() if k != "output_dir"}
    blob = json.dumps(_clean({"config": config, "version": __version__}), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, config: dict, artifacts, wall_time: float, backend: str, status="ok"):
    out_dir = Path(out_dir)
    write_json(out_dir / "manifest.json", {
        "manifest_hash": config_hash(config),
        "version": __version__,
        "backend": backend,
        "config": config,
        "status": status,
        "wall_time_s": round(wall_time, 3),
        "artifacts": {name: file_sha256(out_dir / name) for name in sorted(artifacts)},
    })
