"""Category hierarchies for users and library items.

A single DAG serves both sides; which categories a collection uses for
its access terms and which a user carries is a vocabulary convention,
shipped as configuration. Closure(c) is c plus all ancestors; depth is
the longest root-to-node path and measures how specific a category is.
"""

from __future__ import annotations

import threading

from ..errors import NotFound, ValidationFailure


class CategoryRegistry:
    def __init__(self):
        self._names = {}
        self._parents = {}  # id -> tuple of parent ids
        self._lock = threading.Lock()

    def add(self, category_id, name="", parents=()):
        with self._lock:
            if not category_id or not isinstance(category_id, str):
                raise ValidationFailure("category id must be a non-empty string")
            if category_id in self._names:
                raise ValidationFailure("category %r already registered" % category_id)
            self._names[category_id] = name or category_id
            self._parents[category_id] = ()
        for parent in parents:
            self.add_parent(category_id, parent)

    def add_parent(self, child, parent):
        with self._lock:
            if child not in self._names:
                raise NotFound("no category %r" % child)
            if parent not in self._names:
                raise NotFound("no category %r" % parent)
            if child == parent or child in self._ancestors(parent):
                raise ValidationFailure(
                    "edge %s -> %s would create a cycle" % (child, parent)
                )
            if parent in self._parents[child]:
                return
            self._parents[child] = self._parents[child] + (parent,)

    def _ancestors(self, category_id):
        out = set()
        stack = list(self._parents.get(category_id, ()))
        while stack:
            current = stack.pop()
            if current not in out:
                out.add(current)
                stack.extend(self._parents.get(current, ()))
        return out

    def exists(self, category_id):
        return category_id in self._names

    def name(self, category_id):
        if category_id not in self._names:
            raise NotFound("no category %r" % category_id)
        return self._names[category_id]

    def ids(self):
        return sorted(self._names)

    def closure(self, category_id):
        """The category plus every ancestor, as a frozenset."""
        with self._lock:
            if category_id not in self._names:
                raise NotFound("no category %r" % category_id)
            return frozenset(self._ancestors(category_id) | {category_id})

    def closure_of(self, category_ids):
        out = set()
        for category_id in category_ids:
            out |= self.closure(category_id)
        return frozenset(out)

    def depth(self, category_id):
        """Length of the longest path from any root; roots have depth 0.
        Greater depth means a more specific audience."""
        with self._lock:
            if category_id not in self._names:
                raise NotFound("no category %r" % category_id)
            memo = {}

            def longest(node):
                if node in memo:
                    return memo[node]
                parents = self._parents.get(node, ())
                memo[node] = 0 if not parents else 1 + max(longest(p) for p in parents)
                return memo[node]

            return longest(category_id)

    def to_policy(self):
        return [
            {"id": i, "name": self._names[i], "parents": list(self._parents[i])}
            for i in sorted(self._names)
        ]

    @classmethod
    def from_policy(cls, entries):
        registry = cls()
        for entry in entries:
            registry.add(entry["id"], entry.get("name", ""))
        for entry in entries:
            for parent in entry.get("parents", ()):
                registry.add_parent(entry["id"], parent)
        return registry
