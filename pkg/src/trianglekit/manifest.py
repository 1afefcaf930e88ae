"""Run manifests: the audit trail that makes command outputs reproducible.

Every command that writes an output file also writes ``<output>.manifest.json``
next to it, recording the command, the fully resolved configuration, the
seeds, the package version, and SHA-256 digests of all inputs and outputs.
Feeding a manifest back through ``--config`` reruns the command with the
identical configuration, reproducing the primary outputs byte for byte
(the manifest itself differs only in its wall-clock duration).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError

__all__ = ["RunManifest", "sha256_file", "manifest_path_for", "load_manifest"]


def sha256_file(path) -> str:
    """Hex SHA-256 digest of a file's bytes."""
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def manifest_path_for(output_path) -> Path:
    return Path(str(output_path) + ".manifest.json")


@dataclass
class RunManifest:
    command: str
    version: str
    config: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    duration_seconds: float = 0.0

    def add_input(self, path) -> None:
        self.inputs[str(path)] = sha256_file(path)

    def add_output(self, path) -> None:
        self.outputs[str(path)] = sha256_file(path)

    def to_json_dict(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_seconds": self.duration_seconds,
        }

    def write(self, output_path) -> Path:
        """Write the manifest next to ``output_path`` and return its path."""
        path = manifest_path_for(output_path)
        path.write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")
        return path


def load_manifest(path) -> dict:
    """Read a manifest (or plain config) JSON file as a dict."""
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ValidationError(f"{path}: manifest must be a JSON object")
    return obj
