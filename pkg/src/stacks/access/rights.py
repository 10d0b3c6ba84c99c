"""The rights broker.

Mediates between users and collections: matches the session's category
closure against the item's access terms (falling back to the terms of
the collections aggregating it, then to the system defaults) and decides
grant, grant-with-terms, or deny. Collections never learn who asked; the
decision log carries category-level attribution only.

Term selection: a term applies when its audience is in the user's
closure; among applicable terms the most specific audience wins (deepest
in the category DAG), depth ties go to the most restrictive use type
(deny > for-fee > personal-teaching-only > open), and remaining ties
break on audience id so decisions are total and reproducible.

Infrastructure failure is fail-closed but distinct from a policy deny:
the repository being unreachable raises Unavailable instead of returning
a Decision.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

from ..errors import NotFound, ValidationFailure

USE_TYPES = ("open", "personal-teaching-only", "for-fee", "deny")
RESTRICTIVENESS = {"open": 0, "personal-teaching-only": 1, "for-fee": 2, "deny": 3}

USE_STATEMENTS = {
    "personal-teaching-only": (
        "This material is licensed for personal teaching use only."
    ),
    "for-fee": (
        "Access for your user community is provided for a fee; the usage "
        "terms attach to this item."
    ),
}


@dataclass
class Decision:
    outcome: str  # grant | grant-with-terms | deny
    use_statement: str = ""
    matched_term: tuple | None = None  # (audience, use_type)

    def to_dict(self):
        out = {"outcome": self.outcome}
        if self.use_statement:
            out["use_statement"] = self.use_statement
        if self.matched_term:
            out["matched"] = {
                "audience": self.matched_term[0],
                "use_type": self.matched_term[1],
            }
        return out


class DecisionLog:
    """Append-only log of category-attributed decisions."""

    def __init__(self, path=None):
        self._path = Path(path) if path else None
        self._entries = []
        self._lock = threading.Lock()
        if self._path and self._path.exists():
            with self._path.open(encoding="utf-8") as fh:
                self._entries = [json.loads(line) for line in fh if line.strip()]

    def append(self, entry):
        with self._lock:
            self._entries.append(entry)
            if self._path:
                self._path.parent.mkdir(parents=True, exist_ok=True)
                with self._path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def entries(self):
        with self._lock:
            return list(self._entries)


class RightsBroker:
    def __init__(
        self,
        repo,
        categories,
        default_terms=(),
        log=None,
        clock=time.time,
        report_floor=3,
    ):
        self.repo = repo
        self.categories = categories
        self.default_terms = [tuple(t) for t in default_terms]
        for _audience, use_type in self.default_terms:
            if use_type not in USE_TYPES:
                raise ValidationFailure("unknown use type %r" % use_type)
        self.log = log or DecisionLog()
        self.clock = clock
        self.report_floor = report_floor

    # ------------------------------------------------------------------

    def _item_terms(self, admin):
        terms = [tuple(t) for t in admin.get("access_terms", [])]
        if terms:
            return terms
        for collection in admin.get("collections", []):
            try:
                coll_admin = self.repo.get_record_admin(collection)
            except NotFound:
                continue
            terms.extend(tuple(t) for t in coll_admin.get("access_terms", []))
        if terms:
            return terms
        return list(self.default_terms)

    def _select(self, terms, closure):
        applicable = [
            (audience, use_type)
            for audience, use_type in terms
            if self.categories.exists(audience) and audience in closure
        ]
        if not applicable:
            return None
        # most specific audience; ties to most restrictive use; then
        # audience id for a total order
        def sort_key(term):
            audience, use_type = term
            return (
                -self.categories.depth(audience),
                -RESTRICTIVENESS.get(use_type, 3),
                audience,
            )

        return sorted(applicable, key=sort_key)[0]

    def check(self, session, item_handle):
        """Decide access for the session's cohort; the item's collection
        never sees the principal. Unavailable repository fails closed by
        raising, which is distinct from a policy deny."""
        admin = self.repo.get_record_admin(item_handle)
        if admin.get("status") == "deleted":
            raise NotFound("record %s is deleted" % item_handle)
        terms = self._item_terms(admin)
        matched = self._select(terms, session.categories)
        if matched is None:
            decision = Decision("deny")
        else:
            use_type = matched[1]
            if use_type == "open":
                decision = Decision("grant", matched_term=matched)
            elif use_type == "deny":
                decision = Decision("deny", matched_term=matched)
            else:
                decision = Decision(
                    "grant-with-terms",
                    use_statement=USE_STATEMENTS[use_type],
                    matched_term=matched,
                )
        self.log.append(
            {
                "day": time.strftime("%Y-%m-%d", time.gmtime(int(self.clock()))),
                "collection": (admin.get("collections") or [""])[0],
                "item": str(item_handle),
                "category": matched[0] if matched else "",
                "use_type": matched[1] if matched else "",
                "outcome": decision.outcome,
            }
        )
        return decision

    # ------------------------------------------------------------------

    def usage_report(self, collection, day_from=None, day_until=None, floor=None):
        """Aggregate counts by (category, use type, day); cells under
        the suppression floor are withheld."""
        self.repo.get_record_admin(collection)  # unknown collection -> NotFound
        floor = self.report_floor if floor is None else floor
        cells = {}
        for entry in self.log.entries():
            if entry.get("collection") != str(collection):
                continue
            day = entry.get("day", "")
            if day_from and day < day_from:
                continue
            if day_until and day > day_until:
                continue
            key = (entry.get("category", ""), entry.get("use_type", ""), day)
            cells[key] = cells.get(key, 0) + 1
        visible = []
        suppressed = 0
        for key in sorted(cells):
            if cells[key] < floor:
                suppressed += 1
                continue
            visible.append(
                {
                    "category": key[0],
                    "use_type": key[1],
                    "day": key[2],
                    "count": cells[key],
                }
            )
        return {"collection": str(collection), "cells": visible, "suppressed": suppressed}
