"""Provenance manifests written next to every output."""

from __future__ import annotations

import hashlib
import json
import os
import platform

import numba
import numpy as np

from . import __version__


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def build_manifest(command: str, config: dict, inputs=(), outputs=(), seeds=()) -> dict:
    # no timestamps: reruns must produce byte-identical manifests
    return {
        "tool": "wordstab",
        "command": command,
        "versions": {
            "wordstab": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "numba": numba.__version__,
        },
        "config": config,
        "seeds": list(seeds),
        "inputs": [{"path": os.fspath(p), "sha256": file_digest(p)} for p in inputs],
        "outputs": [os.path.basename(os.fspath(p)) for p in outputs],
    }


def write_manifest(path, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str, ensure_ascii=False)
        fh.write("\n")
