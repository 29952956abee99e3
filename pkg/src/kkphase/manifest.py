"""Run manifests: what a run produced, with content hashes for auditing.

Timestamps honor SOURCE_DATE_EPOCH so archived runs can be reproduced
byte-for-byte.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from pathlib import Path

MANIFEST_NAME = "run_manifest.json"


def sha256_of(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _now() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = float(epoch) if epoch else time.time()
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


class RunManifest:
    def __init__(self, out_dir, config_doc, tool_version: str):
        self.out_dir = Path(out_dir)
        canonical = json.dumps(config_doc, sort_keys=True).encode()
        self.doc = {
            "config_sha256": hashlib.sha256(canonical).hexdigest(),
            "tool_version": tool_version,
            "started_utc": _now(),
            "finished_utc": None,
            "stages": [],
        }

    def add_stage(self, name: str, outputs, summary=None):
        entry = {
            "name": name,
            "outputs": [
                {
                    "path": str(Path(p).relative_to(self.out_dir)),
                    "sha256": sha256_of(p),
                    "bytes": Path(p).stat().st_size,
                }
                for p in outputs
            ],
            "summary": summary or {},
        }
        self.doc["stages"].append(entry)

    def write(self) -> Path:
        self.doc["finished_utc"] = _now()
        target = self.out_dir / MANIFEST_NAME
        tmp = target.with_suffix(".tmp")
        with open(tmp, "w") as fh:
            json.dump(self.doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, target)
        return target


def verify_manifest(manifest_path) -> list:
    """Re-hash every referenced file; returns a list of problem strings."""
    manifest_path = Path(manifest_path)
    with open(manifest_path) as fh:
        doc = json.load(fh)
    base = manifest_path.parent
    problems = []
    for stage in doc.get("stages", []):
        for out in stage.get("outputs", []):
            p = base / out["path"]
            if not p.exists():
                problems.append(f"{stage['name']}: missing {out['path']}")
                continue
            actual = sha256_of(p)
            if actual != out["sha256"]:
                problems.append(
                    f"{stage['name']}: hash mismatch for {out['path']} "
                    f"(expected {out['sha256'][:12]}..., got {actual[:12]}...)"
                )
    return problems
