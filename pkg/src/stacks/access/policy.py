"""Access policy files: the category vocabulary, default terms, profile
schema, and network identity ranges, as one structured text file.

The shipped vocabulary is a sample; real deployments align it with what
their collections use, which is a community convention rather than
anything this code can enforce.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from .categories import CategoryRegistry
from .rights import USE_TYPES

_KNOWN_KEYS = {
    "categories",
    "default_terms",
    "profile_schema",
    "network_ranges",
}


@dataclass
class AccessPolicy:
    categories: CategoryRegistry
    default_terms: list = field(default_factory=list)
    profile_schema: list = field(default_factory=list)
    network_ranges: list = field(default_factory=list)


def load_policy(path):
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("policy file %s does not exist" % path)
    except ValueError as exc:
        raise ConfigError("policy file %s is not valid JSON: %s" % (path, exc))
    unknown = set(data) - _KNOWN_KEYS
    if unknown:
        raise ConfigError("policy file has unknown keys: %s" % sorted(unknown))
    registry = CategoryRegistry.from_policy(data.get("categories", []))
    default_terms = [tuple(t) for t in data.get("default_terms", [])]
    for audience, use_type in default_terms:
        if not registry.exists(audience):
            raise ConfigError("default term audience %r is not a category" % audience)
        if use_type not in USE_TYPES:
            raise ConfigError("default term use type %r is unknown" % use_type)
    for entry in data.get("network_ranges", []):
        if not registry.exists(entry.get("category", "")):
            raise ConfigError(
                "network range category %r is not a category" % entry.get("category")
            )
    return AccessPolicy(
        categories=registry,
        default_terms=default_terms,
        profile_schema=list(data.get("profile_schema", [])),
        network_ranges=list(data.get("network_ranges", [])),
    )
