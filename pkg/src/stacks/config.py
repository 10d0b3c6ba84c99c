"""Configuration: one JSON file, validated strictly.

Unknown keys are errors rather than silent typos, every knob has a
default, and relative paths resolve against the config file's directory
so a checkout runs with no configuration at all.
"""

from __future__ import annotations

import copy
import json
import os
from pathlib import Path

from .errors import ConfigError

DEFAULTS = {
    "storage": {"root": "data"},
    "services": {
        "mr": {"host": "127.0.0.1", "port": 8601},
        "ingest": {"host": "127.0.0.1", "port": 8602},
        "search": {"host": "127.0.0.1", "port": 8603},
        "access": {"host": "127.0.0.1", "port": 8604},
    },
    "repository": {
        "page_size": 100,
        "token_ttl": 3600,
        "privileged_token": "",
        "size_cap": 65536,
        "repository_name": "stacks union catalog",
        "admin_email": "admin@localhost",
    },
    "ingest": {"crosswalk_dir": "crosswalks"},
    "gather": {
        "politeness_delay": 0.5,
        "page_cap": 500,
        "user_agent": "stacks-gatherer/0.1",
    },
    "search": {
        "boosts": {"title": 2.0, "description": 1.0, "content": 1.0, "other": 0.5},
        "k1": 1.2,
        "b": 0.75,
        "stemming": False,
        "fetch_content": False,
        "fetch_cap_bytes": 262144,
        "known_items": False,
        "known_items_top_k": 5,
        "recency_weight": 0.5,
        "default_limit": 25,
        "max_limit": 200,
    },
    "access": {
        "policy_file": "policy/access-policy.json",
        "session_ttl": 3600,
        "report_floor": 3,
        "admin_secret": "",
    },
}

ENV_VAR = "STACKS_CONFIG"


def _merge(defaults, overrides, path=""):
    out = copy.deepcopy(defaults)
    for key, value in overrides.items():
        where = "%s.%s" % (path, key) if path else key
        if key not in defaults:
            raise ConfigError("unknown config key %r" % where)
        if isinstance(defaults[key], dict):
            if not isinstance(value, dict):
                raise ConfigError("config key %r must be a section" % where)
            out[key] = _merge(defaults[key], value, where)
        else:
            out[key] = value
    return out


class Config:
    def __init__(self, data, base_dir):
        self.data = data
        self.base_dir = Path(base_dir)

    def __getitem__(self, key):
        return self.data[key]

    def path(self, value):
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def storage_root(self):
        return self.path(self.data["storage"]["root"])

    def service_address(self, name):
        svc = self.data["services"][name]
        return svc["host"], svc["port"]

    def service_url(self, name):
        host, port = self.service_address(name)
        return "http://%s:%d" % (host, port)

    def search_config(self):
        from .search import SearchConfig

        s = self.data["search"]
        return SearchConfig(
            boosts=dict(s["boosts"]),
            k1=s["k1"],
            b=s["b"],
            stemming=s["stemming"],
            fetch_content=s["fetch_content"],
            fetch_cap_bytes=s["fetch_cap_bytes"],
            known_items=s["known_items"],
            known_items_top_k=s["known_items_top_k"],
            recency_weight=s["recency_weight"],
            default_limit=s["default_limit"],
            max_limit=s["max_limit"],
        )


def load_config(path=None):
    """Load the config file named by ``path``, the STACKS_CONFIG
    environment variable, ./stacks.json, or fall back to pure defaults."""
    if path is None:
        path = os.environ.get(ENV_VAR)
    if path is None and Path("stacks.json").exists():
        path = "stacks.json"
    if path is None:
        return Config(copy.deepcopy(DEFAULTS), Path.cwd())
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("config file %s does not exist" % path)
    except ValueError as exc:
        raise ConfigError("config file %s is not valid JSON: %s" % (path, exc))
    if not isinstance(raw, dict):
        raise ConfigError("config root must be an object")
    return Config(_merge(DEFAULTS, raw), path.resolve().parent)
