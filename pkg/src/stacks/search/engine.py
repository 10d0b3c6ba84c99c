"""The search service.

Acquires its searchable items by harvesting the repository's OAI
endpoint incrementally, keeps annotation flags fresh through the
structural link API, optionally fetches open-access textual content, and
executes three-part queries against an immutable index snapshot.

The service never enforces access: responses are identical regardless of
caller identity. Result entries carry enough of a pointer (resource
identifier plus record handle) for the rights broker to decide access
downstream.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

import requests

from ..errors import QueryError, Unavailable
from ..harvest import incremental_sync, load_state, save_state
from ..harvest.client import list_sets
from ..htmltext import strip_tags
from ..qdc import parse_qdc_xml
from ..repository.oai_provider import parse_identifier
from .index import IndexDoc, Snapshot
from .queryparse import Query, parse_query
from .rank import satisfies_all, score_candidates

EXCERPT_CHARS = 200


@dataclass
class SearchConfig:
    boosts: dict = field(
        default_factory=lambda: {
            "title": 2.0,
            "description": 1.0,
            "content": 1.0,
            "other": 0.5,
        }
    )
    k1: float = 1.2
    b: float = 0.75
    stemming: bool = False
    fetch_content: bool = False
    fetch_cap_bytes: int = 262144
    known_items: bool = False  # relevance feedback, off in the first release
    known_items_top_k: int = 5
    recency_weight: float = 0.5
    default_limit: int = 25
    max_limit: int = 200


@dataclass
class IndexStats:
    added: int = 0
    updated: int = 0
    removed: int = 0

    def to_dict(self):
        return {"added": self.added, "updated": self.updated, "removed": self.removed}


@dataclass
class ResultEntry:
    handle: str
    score: float
    summary: dict
    item_pointer: dict

    def to_dict(self):
        return {
            "handle": self.handle,
            "score": self.score,
            "summary": self.summary,
            "item_pointer": self.item_pointer,
        }


@dataclass
class RankedList:
    total: int
    entries: list
    notice: str = ""

    def to_dict(self):
        return {
            "total": self.total,
            "entries": [e.to_dict() for e in self.entries],
            "notice": self.notice,
        }


def fetch_content(url, session=None, cap_bytes=262144, timeout=15):
    """Fetch open-access textual content for indexing.

    Returns (text, status): HTML is tag-stripped, plain text decoded;
    anything else is metadata-only. Auth challenges mean restricted
    content, which the first release never indexes.
    """
    session = session or requests.Session()
    try:
        resp = session.get(url, timeout=timeout, stream=True)
    except requests.RequestException:
        return "", "fetch-failed"
    with resp:
        if resp.status_code in (401, 403):
            return "", "skipped-restricted"
        if resp.status_code != 200:
            return "", "fetch-failed"
        content_type = resp.headers.get("Content-Type", "").split(";")[0].strip()
        if content_type not in ("text/html", "application/xhtml+xml", "text/plain"):
            return "", "skipped-format"
        body = b""
        for chunk in resp.iter_content(chunk_size=65536):
            body += chunk
            if len(body) >= cap_bytes:
                body = body[:cap_bytes]
                break
    if content_type == "text/plain":
        return body.decode("utf-8", "replace"), "fetched"
    return strip_tags(body), "fetched"


class SearchService:
    """``repo`` is a RepositoryClient (or anything exposing oai_url and
    list_links); ``data_dir`` holds the persisted documents and harvest
    state so the index survives restarts and rebuilds from scratch with
    a full sync."""

    def __init__(self, data_dir, repo=None, config=None, session=None):
        self.data_dir = Path(data_dir)
        self.repo = repo
        self.config = config or SearchConfig()
        self.session = session or requests.Session()
        self._lock = threading.Lock()
        self._docs = {}
        self._snapshot = None
        self._load()
        self._rebuild()

    # ------------------------------------------------------------------
    # persistence

    @property
    def _docs_path(self):
        return self.data_dir / "docs.json"

    def _load(self):
        if self._docs_path.exists():
            data = json.loads(self._docs_path.read_text(encoding="utf-8"))
            self._docs = {
                handle: IndexDoc.from_dict(doc) for handle, doc in data.items()
            }

    def _persist(self):
        self.data_dir.mkdir(parents=True, exist_ok=True)
        tmp = self._docs_path.with_suffix(".tmp")
        tmp.write_text(
            json.dumps({h: d.to_dict() for h, d in self._docs.items()}),
            encoding="utf-8",
        )
        tmp.replace(self._docs_path)

    def _rebuild(self):
        self._snapshot = Snapshot(self._docs, self.config.boosts, self.config.stemming)

    @property
    def snapshot(self):
        return self._snapshot

    # ------------------------------------------------------------------
    # building the index

    def load_docs(self, docs):
        """Replace the whole corpus (tests and bulk loads)."""
        with self._lock:
            self._docs = {d.handle: d for d in docs}
            self._rebuild()

    def sync_index(self):
        """Incremental harvest from the repository; swaps in a fresh
        snapshot only after the pass fully succeeds."""
        if self.repo is None:
            raise Unavailable("search service has no repository endpoint")
        oai_url = self.repo.oai_url
        with self._lock:
            stats = IndexStats()
            known = {h: d.datestamp for h, d in self._docs.items()}
            state = load_state(self.data_dir, oai_url, "nsdl_qdc")
            known_oai = {
                "oai:%s" % h.replace("/", ":", 1): ds for h, ds in known.items()
            }
            delta, new_state = incremental_sync(
                state, known_oai, session=self.session
            )
            collection_handles = {
                spec for spec, _ in list_sets(oai_url, session=self.session)
            }
            docs = dict(self._docs)
            for item in delta.new + delta.changed:
                parsed = parse_identifier(item.identifier)
                if parsed is None:
                    continue
                handle = "%s/%s" % parsed
                qdc = parse_qdc_xml(item.payload)
                fields = {e: qdc.values(e) for e in qdc.elements()}
                fresh = handle not in docs
                if qdc.only_identifier() or qdc.is_empty():
                    # metadata is nothing but a locator: not searchable
                    if not fresh:
                        del docs[handle]
                        stats.removed += 1
                    continue
                doc = IndexDoc(
                    handle=handle,
                    kind="collection" if handle in collection_handles else "item",
                    fields=fields,
                    collections=tuple(sorted(item.sets)),
                    datestamp=item.datestamp,
                )
                if self.config.fetch_content and doc.kind == "item":
                    identifier = qdc.first("identifier")
                    if identifier.startswith(("http://", "https://")):
                        text, status = fetch_content(
                            identifier, self.session, self.config.fetch_cap_bytes
                        )
                        doc.content_text, doc.content_status = text, status
                if fresh:
                    stats.added += 1
                else:
                    stats.updated += 1
                docs[handle] = doc
            for identifier in delta.deleted:
                parsed = parse_identifier(identifier)
                if parsed is None:
                    continue
                handle = "%s/%s" % parsed
                if handle in docs:
                    del docs[handle]
                    stats.removed += 1
            # refresh annotation indicators from the structural link API
            annotated = set()
            if hasattr(self.repo, "list_links"):
                for link in self.repo.list_links("annotates"):
                    annotated.add(str(link.to_handle))
            for handle, doc in docs.items():
                doc.has_annotations = handle in annotated
            self._docs = docs
            self._rebuild()
            self._persist()
            save_state(self.data_dir, new_state)
            return stats

    # ------------------------------------------------------------------
    # queries

    def execute_query(self, query, limit=None, offset=0):
        if isinstance(query, str):
            query = parse_query(query)
        if not isinstance(query, Query):
            raise QueryError("not a query", 0)
        config = self.config
        notice = ""
        if limit is None:
            limit = config.default_limit
        if limit > config.max_limit:
            notice = "limit clamped to %d" % config.max_limit
            limit = config.max_limit
        if limit < 0 or offset < 0:
            raise QueryError("limit and offset must be non-negative", 0)
        snapshot = self._snapshot  # one consistent snapshot per query
        candidates = [
            doc for doc in snapshot.docs.values() if satisfies_all(doc, query.restrictions)
        ]
        terms = list(query.terms)
        if config.known_items and query.known:
            terms.extend(self._expand_known(snapshot, query))
        ranked = score_candidates(
            snapshot,
            candidates,
            terms,
            query.prefer,
            config.k1,
            config.b,
            config.recency_weight,
        )
        total = len(ranked)
        page = ranked[offset : offset + limit]
        entries = [
            self._entry(snapshot.docs[handle], score) for handle, score in page
        ]
        return RankedList(total=total, entries=entries, notice=notice)

    def _expand_known(self, snapshot, query):
        """Relevance feedback: top-k boosted terms from each relevant
        known item, added as optional terms."""
        from .queryparse import RankedTerm

        present = {t.term for t in query.terms}
        extra = []
        for handle, relevant in query.known:
            if not relevant or handle not in snapshot.docs:
                continue
            weights = {}
            for term, by_doc in snapshot.postings.items():
                counts = by_doc.get(handle)
                if counts:
                    weights[term] = sum(
                        snapshot.boost(f) * c for f, c in counts.items()
                    )
            best = sorted(weights.items(), key=lambda kv: (-kv[1], kv[0]))
            for term, _ in best[: self.config.known_items_top_k]:
                if term not in present:
                    present.add(term)
                    extra.append(RankedTerm(term, None, "should"))
        return extra

    def _entry(self, doc, score):
        description = doc.field_values("description")
        excerpt = description[0][:EXCERPT_CHARS] if description else ""
        title = doc.field_values("title")
        return ResultEntry(
            handle=doc.handle,
            score=score,
            summary={
                "title": title[0] if title else "",
                "description": excerpt,
                "collections": list(doc.collections),
                "has_annotations": doc.has_annotations,
                "kind": doc.kind,
                "subjects": doc.field_values("subject")[:5],
            },
            item_pointer={
                "identifier": (doc.field_values("identifier") or [""])[0],
                "handle": doc.handle,
            },
        )
