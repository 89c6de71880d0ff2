"""Run manifests: everything needed to regenerate a run's outputs bit for bit."""

from __future__ import annotations

import hashlib
import json
import platform
import time
from importlib import metadata
from pathlib import Path

import numpy as np

TOOL = "loewner-lab"


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def cell_seeds(seed: int, n_cells: int) -> list[list[int]]:
    """Entropy of each cell's root ``SeedSequence([seed, cell])``; samples branch below it."""
    return [[int(seed), c] for c in range(n_cells)]


def build(subcommand: str, params: dict, seed: int, outputs: dict, started: float, cells: dict | None = None) -> dict:
    return {
        "tool": TOOL,
        "version": tool_version(),
        "subcommand": subcommand,
        "params": params,
        "seed": int(seed),
        "cell_seeds": cell_seeds(seed, len(cells)) if cells else [],
        "cell_digests": cells or {},
        "outputs": {name: sha256_file(p) for name, p in outputs.items()},
        "wall_clock_s": round(time.time() - started, 3),
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def write(out_dir, manifest: dict) -> Path:
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read(path) -> dict:
    return json.loads(Path(path).read_text())
