"""Local identity registry and session minting.

This is the built-in fallback backend: a simple user registry the
library runs itself. Other identity backends (campus directories,
federated sign-on) plug in behind the same gateway interface; a stub
demonstrating that surface ships alongside. Sessions are opaque tokens
bound to a category-closure snapshot; the internal principal id never
leaves this module's stores.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import secrets
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from ..errors import AuthExpired, AuthFailure, Forbidden, ValidationFailure

_PBKDF2_ITERATIONS = 50_000
_DUMMY_SALT = "0" * 16
_DUMMY_HASH = "0" * 64


def _hash_secret(secret, salt):
    return hashlib.pbkdf2_hmac(
        "sha256", secret.encode("utf-8"), bytes.fromhex(salt), _PBKDF2_ITERATIONS
    ).hex()


class IdentityGateway:
    """Interface point for delegated identity backends."""

    def verify(self, username, secret):
        """Return (principal_id, categories, attributes) or None."""
        raise NotImplementedError


class UserRegistry(IdentityGateway):
    """The library-run registry backend."""

    def __init__(self, path=None):
        self._path = Path(path) if path else None
        self._users = {}
        self._lock = threading.Lock()
        if self._path and self._path.exists():
            self._users = json.loads(self._path.read_text(encoding="utf-8"))

    def _persist(self):
        if self._path:
            self._path.parent.mkdir(parents=True, exist_ok=True)
            tmp = self._path.with_suffix(".tmp")
            tmp.write_text(json.dumps(self._users, indent=1), encoding="utf-8")
            tmp.replace(self._path)

    def add_user(self, username, secret, categories=(), attributes=None):
        if not username or not secret:
            raise ValidationFailure("username and secret must be non-empty")
        with self._lock:
            if username in self._users:
                raise ValidationFailure("user %r already registered" % username)
            salt = secrets.token_hex(8)
            self._users[username] = {
                "principal_id": uuid.uuid4().hex,
                "salt": salt,
                "hash": _hash_secret(secret, salt),
                "categories": sorted(set(categories)),
                "attributes": dict(attributes or {}),
                "disabled": False,
            }
            self._persist()
            return self._users[username]["principal_id"]

    def disable(self, username):
        with self._lock:
            if username not in self._users:
                raise AuthFailure("authentication failed")
            self._users[username]["disabled"] = True
            self._persist()

    def set_categories(self, username, categories):
        with self._lock:
            self._users[username]["categories"] = sorted(set(categories))
            self._persist()

    def verify(self, username, secret):
        # constant work whether or not the user exists, so failures
        # don't reveal which usernames are registered
        record = self._users.get(username)
        salt = record["salt"] if record else _DUMMY_SALT
        expected = record["hash"] if record else _DUMMY_HASH
        computed = _hash_secret(secret, salt)
        ok = hmac.compare_digest(computed, expected) and record is not None
        if not ok:
            raise AuthFailure("authentication failed")
        if record["disabled"]:
            raise Forbidden("account is disabled")
        return record["principal_id"], list(record["categories"]), dict(record["attributes"])


class StubGateway(IdentityGateway):
    """Demonstration backend for a delegated community: a fixed table
    standing in for an institution-run identity service."""

    def __init__(self, table):
        self._table = dict(table)  # username -> (secret, categories)

    def verify(self, username, secret):
        entry = self._table.get(username)
        if entry is None or not hmac.compare_digest(entry[0], secret):
            raise AuthFailure("authentication failed")
        return "stub:%s" % username, list(entry[1]), {}


@dataclass
class Session:
    token: str
    expiry: int
    categories: frozenset
    principal_id: str | None  # internal only; never serialized to clients
    kind: str = "login"  # login | anonymous | network


class SessionStore:
    def __init__(self, categories, ttl=3600, clock=time.time):
        self.categories = categories
        self.ttl = ttl
        self.clock = clock
        self._sessions = {}
        self._lock = threading.Lock()

    def _mint(self, principal_id, category_ids, kind):
        closure = self.categories.closure_of(
            [c for c in category_ids if self.categories.exists(c)]
        )
        session = Session(
            token=secrets.token_urlsafe(24),
            expiry=int(self.clock()) + self.ttl,
            categories=closure,
            principal_id=principal_id,
            kind=kind,
        )
        with self._lock:
            self._sessions[session.token] = session
        return session

    def login(self, gateway, username, secret):
        principal_id, category_ids, _attrs = gateway.verify(username, secret)
        return self._mint(principal_id, category_ids, "login")

    def anonymous(self):
        return self._mint(None, ["public"], "anonymous")

    def network(self, address, ranges):
        """Group identity mapped from a configured address range."""
        for entry in ranges:
            if address.startswith(entry["prefix"]):
                return self._mint(None, [entry["category"], "public"], "network")
        return self.anonymous()

    def resolve(self, token):
        with self._lock:
            session = self._sessions.get(token)
        if session is None:
            raise AuthFailure("unknown session token")
        if int(self.clock()) > session.expiry:
            raise AuthExpired("session has expired")
        return session
