"""Index documents and the immutable snapshot queries run against.

A snapshot is rebuilt after every sync and swapped in atomically, so a
query only ever sees one consistent state. Statistics follow the
documented ranking contract: per-field token streams, boosted virtual
document lengths summed in canonical field order, and document
frequencies counted over any-field presence.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..qdc import ALL_ELEMENTS
from .analysis import tokenize

FIELD_ORDER = ALL_ELEMENTS + ("content",)

_DATE_KEY = re.compile(r"^(\d{4})(?:-(\d{1,2}))?(?:-(\d{1,2}))?")


def date_key(value):
    m = _DATE_KEY.match(value.strip())
    if not m:
        return None
    return tuple(int(g) for g in m.groups() if g is not None)


@dataclass
class IndexDoc:
    handle: str
    kind: str = "item"
    fields: dict = field(default_factory=dict)  # element -> [raw values]
    content_text: str = ""
    content_status: str = "not-fetched"
    collections: tuple = ()
    has_annotations: bool = False
    datestamp: str = ""

    def to_dict(self):
        return {
            "handle": self.handle,
            "kind": self.kind,
            "fields": {k: list(v) for k, v in self.fields.items()},
            "content_text": self.content_text,
            "content_status": self.content_status,
            "collections": list(self.collections),
            "has_annotations": self.has_annotations,
            "datestamp": self.datestamp,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            handle=data["handle"],
            kind=data.get("kind", "item"),
            fields={k: list(v) for k, v in data.get("fields", {}).items()},
            content_text=data.get("content_text", ""),
            content_status=data.get("content_status", "not-fetched"),
            collections=tuple(data.get("collections", ())),
            has_annotations=bool(data.get("has_annotations", False)),
            datestamp=data.get("datestamp", ""),
        )

    def field_values(self, name):
        return self.fields.get(name, [])

    def year(self):
        for value in self.field_values("date"):
            key = date_key(value)
            if key:
                return key[0]
        return None


class Snapshot:
    def __init__(self, docs, boosts, stemming=False):
        self.docs = {h: docs[h] for h in sorted(docs)}
        self.boosts = dict(boosts)
        self.stemming = stemming
        self.field_tokens = {}  # handle -> {field: [tokens]}
        self.postings = {}  # term -> {handle: {field: count}}
        self.lengths = {}  # handle -> boosted virtual length
        self.n_docs = len(self.docs)
        self.avgdl = 0.0
        self._build()

    def boost(self, fieldname):
        return self.boosts.get(fieldname, self.boosts["other"])

    def _build(self):
        total = 0.0
        years = []
        for handle, doc in self.docs.items():
            per_field = {}
            length = 0.0
            for fieldname in FIELD_ORDER:
                if fieldname == "content":
                    tokens = tokenize(doc.content_text, self.stemming)
                else:
                    tokens = []
                    for value in doc.field_values(fieldname):
                        tokens.extend(tokenize(value, self.stemming))
                per_field[fieldname] = tokens
                length += self.boost(fieldname) * len(tokens)
                for token in tokens:
                    self.postings.setdefault(token, {}).setdefault(handle, {})
                    counts = self.postings[token][handle]
                    counts[fieldname] = counts.get(fieldname, 0) + 1
            self.field_tokens[handle] = per_field
            self.lengths[handle] = length
            total += length
            year = doc.year()
            if year is not None:
                years.append(year)
        self.avgdl = total / self.n_docs if self.n_docs else 0.0
        self.min_year = min(years) if years else 0
        self.max_year = max(years) if years else 0

    def df(self, term):
        return len(self.postings.get(term, {}))

    def tf(self, handle, term, scope=None):
        counts = self.postings.get(term, {}).get(handle)
        if not counts:
            return 0.0
        total = 0.0
        for fieldname in FIELD_ORDER:
            if scope is not None and fieldname != scope:
                continue
            count = counts.get(fieldname)
            if count:
                total += self.boost(fieldname) * count
        return total

    def recency(self, doc):
        year = doc.year()
        if year is None or self.max_year == self.min_year:
            return 0.0
        return (year - self.min_year) / (self.max_year - self.min_year)
