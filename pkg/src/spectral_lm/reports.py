"""Report emission: deterministic CSV/JSON writers and the run manifest.

Data files are written atomically (temp file + rename) and byte-identically
for identical inputs: floats are rendered with repr-faithful precision and
JSON keys are sorted.  The manifest is written last, after every listed
output exists.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone


def _format_value(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def atomic_write_bytes(path, data):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def write_csv(path, header, rows):
    """RFC-4180 CSV: CRLF line endings, header row, '.' decimal, UTF-8."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_format_value(v) for v in row])
    atomic_write_bytes(path, buf.getvalue().encode("utf-8"))


def write_json(path, obj):
    text = json.dumps(obj, indent=2, sort_keys=True)
    atomic_write_bytes(path, (text + "\n").encode("utf-8"))


def config_hash(obj):
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    """Provenance record written after all outputs; see write()."""

    command: str
    seed: int
    version: str
    config_path: str = ""
    config_digest: str = ""
    outputs: list = field(default_factory=list)
    started: str = ""
    finished: str = ""

    def start(self):
        self.started = datetime.now(timezone.utc).isoformat()
        self._t0 = time.perf_counter()
        return self

    def write(self, path):
        if not self.started:
            self.start()
        self.finished = datetime.now(timezone.utc).isoformat()
        t0 = getattr(self, "_t0", None)
        elapsed = time.perf_counter() - t0 if t0 is not None else float("nan")
        missing = [p for p in self.outputs if not os.path.exists(p)]
        if missing:
            raise FileNotFoundError(f"manifest lists outputs that do not exist: {missing}")
        write_json(
            path,
            {
                "command": self.command,
                "seed": self.seed,
                "version": self.version,
                "config_path": self.config_path,
                "config_digest": self.config_digest,
                "outputs": self.outputs,
                "started": self.started,
                "finished": self.finished,
                "elapsed_seconds": elapsed,
            },
        )
