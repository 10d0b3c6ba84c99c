"""Durable staging for the ingest pipeline.

Each staged record is one JSON file under a per-collection directory, so
staging survives restarts and commit can remove entries one at a time
(atomic per record). A second per-collection file maps provider source
identifiers to the repository handle and content hash they produced,
which is what makes re-ingest update instead of duplicate, and lets an
unchanged record commit as a no-op that touches no datestamp.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path


def _slot(collection):
    return str(collection).replace("/", "_")


class StagingArea:
    def __init__(self, root):
        self.root = Path(root)
        self._lock = threading.Lock()

    def _dir(self, collection):
        return self.root / "staging" / _slot(collection)

    def stage(self, collection, entry):
        with self._lock:
            directory = self._dir(collection)
            directory.mkdir(parents=True, exist_ok=True)
            existing = [int(p.stem) for p in directory.glob("*.json")]
            seq = max(existing, default=0) + 1
            path = directory / ("%06d.json" % seq)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(entry, ensure_ascii=False), encoding="utf-8")
            tmp.replace(path)
            return path

    def entries(self, collection):
        directory = self._dir(collection)
        if not directory.is_dir():
            return []
        out = []
        for path in sorted(directory.glob("*.json")):
            out.append((path, json.loads(path.read_text(encoding="utf-8"))))
        return out

    def count(self, collection):
        directory = self._dir(collection)
        return len(list(directory.glob("*.json"))) if directory.is_dir() else 0

    def remove(self, path):
        Path(path).unlink(missing_ok=True)


class SourceKeys:
    def __init__(self, root):
        self.root = Path(root) / "sourcekeys"
        self._lock = threading.Lock()

    def _path(self, collection):
        return self.root / ("%s.json" % _slot(collection))

    def load(self, collection):
        path = self._path(collection)
        if not path.exists():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def save(self, collection, keys):
        with self._lock:
            self.root.mkdir(parents=True, exist_ok=True)
            path = self._path(collection)
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps(keys, ensure_ascii=False, indent=0), encoding="utf-8")
            tmp.replace(path)
