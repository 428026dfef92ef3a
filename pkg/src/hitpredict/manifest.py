"""Run manifests: enough provenance to regenerate every output byte.

A manifest snapshots the effective configuration (thresholds, ratios,
hyperparameters, seeds), digests of the inputs, the output paths and the
tool version. Timestamps are informational and excluded from any
byte-for-byte reproducibility claims.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(65536), b""):
            h.update(block)
    return h.hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict = field(default_factory=dict)  # path -> sha256
    outputs: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    created_at: str = ""
    tool_version: str = __version__

    def add_input(self, path: str | Path) -> None:
        self.inputs[str(path)] = file_digest(path)

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "command": self.command,
            "created_at": self.created_at or datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "config": self.config,
            "inputs": self.inputs,
            "outputs": list(self.outputs),
            **({"extra": self.extra} if self.extra else {}),
        }

    def write(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, path)
