"""Atomic file writes, content hashing and run manifests.

Every CLI output goes through a sibling temp file plus rename, so a
crashed run never leaves a torn artifact behind.  The manifest written
next to a run's first output records content hashes of everything read
and written; its ``created_at`` field is the only thing allowed to
differ between identical reruns.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping

from . import __version__
from .jsonl import dump_record

MANIFEST_SUFFIX = ".manifest.json"


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def atomic_write_json(path, obj) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def atomic_write_jsonl(path, records: Iterable) -> None:
    atomic_write_text(path, "".join(dump_record(r) + "\n" for r in records))


def file_sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(
    primary_output,
    *,
    command: str,
    params: Mapping,
    inputs: Mapping,
    outputs: Mapping,
) -> Path:
    """Write ``<primary_output>.manifest.json`` describing one run.

    ``inputs`` and ``outputs`` map option names to file paths; each
    entry is stored with its content hash.  ``params`` is the resolved
    option set (already JSON-safe).
    """

    def hashed(paths: Mapping) -> dict:
        return {
            str(name): {"path": str(p), "sha256": file_sha256(p)}
            for name, p in paths.items()
        }

    manifest = {
        "command": command,
        "params": dict(params),
        "inputs": hashed(inputs),
        "outputs": hashed(outputs),
        "package_version": __version__,
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(
            timespec="seconds"
        ),
    }
    out = Path(str(primary_output) + MANIFEST_SUFFIX)
    atomic_write_json(out, manifest)
    return out
