"""Anonymizing profile store.

Attributes live per principal but are addressed only through session
tokens; service clients get attribute values and aggregates, never a
principal id or username. Keys come from the registered profile schema
so typos fail loudly.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from ..errors import Forbidden, ValidationFailure


class ProfileStore:
    def __init__(self, path=None, schema_keys=()):
        self._path = Path(path) if path else None
        self.schema_keys = set(schema_keys)
        self._data = {}
        self._lock = threading.Lock()
        if self._path and self._path.exists():
            self._data = json.loads(self._path.read_text(encoding="utf-8"))

    def _persist(self):
        if self._path:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self._path.with_suffix(".tmp")
            tmp.write_text(json.dumps(self._data, indent=1), encoding="utf-8")
            tmp.replace(self._path)

    def _check(self, session, key):
        if session.principal_id is None:
            raise Forbidden("profiles require a logged-in session")
        if key not in self.schema_keys:
            raise ValidationFailure("key %r is not in the profile schema" % key)

    def put(self, session, key, value):
        self._check(session, key)
        with self._lock:
            self._data.setdefault(session.principal_id, {})[key] = value
            self._persist()

    def get(self, session, key):
        """The stored value, or None when never set (absence is not an
        error)."""
        self._check(session, key)
        with self._lock:
            return self._data.get(session.principal_id, {}).get(key)
