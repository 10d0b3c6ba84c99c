"""The metadata repository store.

Durability model: one append-only JSONL event log on disk, replayed at
construction into in-memory state. Every mutation is validated first,
turned into an event, applied to memory, then appended, so a replay of
the log reconstructs the exact same state (restart is bit-exact) and the
per-record event sequence doubles as the audit history.

Concurrency: a single coarse lock serializes mutations; readers of the
composite listing take it briefly. Cross-process access goes through the
service layer, never through a shared log file.
"""

from __future__ import annotations

import json
import re
import threading
import time

from ..errors import (
    Conflict,
    Forbidden,
    FormatUnavailable,
    Gone,
    NotFound,
    UnsupportedFormat,
    ValidationFailure,
)
from ..qdc import QdcRecord
from .records import (
    AGGREGATION_TYPES,
    BUILTIN_RELATIONS,
    AdminMetadata,
    Handle,
    LinkRecord,
    MetadataRecord,
    NativePayload,
    OAI_DC_FORMAT,
    QDC_FORMAT,
)

SYSTEM_AUTHORITY = "na-0001"
_AUTHORITY_PATTERN = re.compile(r"^na-(\d{4,})$")
_FORMAT_ID_PATTERN = re.compile(r"^[A-Za-z0-9][A-Za-z0-9_.:-]*$")

ANNOTATION_EXCERPT_CHARS = 500


class MetadataRepository:
    """Union catalog of metadata records.

    ``path`` is the event-log file; None keeps the store in memory only.
    ``clock`` returns epoch seconds and exists so tests can drive
    datestamps deterministically.
    """

    def __init__(self, path=None, clock=time.time, size_cap=65536):
        self._path = str(path) if path else None
        self._clock = clock
        self._size_cap = size_cap
        self._lock = threading.RLock()

        self._records = {}  # handle str -> MetadataRecord
        self._links = {}  # (from, to, relation) -> LinkRecord
        self._links_from = {}  # handle str -> list of keys
        self._links_to = {}
        self._audit = {}  # handle str -> list of events
        self._notes = {}  # note id -> dict
        self._relations = set(BUILTIN_RELATIONS)
        self._next_authority = 2  # na-0001 is reserved for system records
        self._note_seq = 0
        self._local_seq = {}  # (authority, prefix) -> max seq

        if self._path:
            self._load()
            self._log = open(self._path, "a", encoding="utf-8")
        else:
            self._log = None

    # ------------------------------------------------------------------
    # persistence

    def _load(self):
        try:
            fh = open(self._path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                line = line.strip()
                if line:
                    self._apply(json.loads(line))

    def _commit(self, event):
        self._apply(event)
        if self._log is not None:
            self._log.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._log.flush()

    def close(self):
        if self._log is not None:
            self._log.close()
            self._log = None

    def dump(self):
        """Deterministic serialization of the whole store; used to check
        that a restart reproduces identical state."""
        with self._lock:
            return json.dumps(
                {
                    "records": {
                        h: {
                            "kind": r.kind,
                            "qdc": r.qdc.to_dict(),
                            "native": [n.to_dict() for n in r.native],
                            "admin": r.admin.to_dict(),
                            "aggregation_type": r.aggregation_type,
                            "access_terms": [list(t) for t in r.access_terms],
                            "ingest_config": r.ingest_config,
                        }
                        for h, r in sorted(self._records.items())
                    },
                    "links": [self._links[k].to_dict() for k in sorted(self._links)],
                    "notes": {k: self._notes[k] for k in sorted(self._notes)},
                },
                sort_keys=True,
            )

    # ------------------------------------------------------------------
    # event application (pure state transitions; replay path)

    def _apply(self, ev):
        op = ev["op"]
        if op == "collection":
            handle = Handle.parse(ev["handle"])
            rec = MetadataRecord(
                handle=handle,
                kind="collection",
                qdc=QdcRecord.from_dict(ev["qdc"]),
                admin=AdminMetadata(
                    source=ev["source"],
                    created=ev["ts"],
                    last_modified=ev["ts"],
                    authority_list=list(ev.get("authority_list", [])),
                ),
                aggregation_type=ev["aggregation_type"],
                access_terms=[tuple(t) for t in ev.get("access_terms", [])],
                ingest_config=ev.get("ingest_config", {}),
            )
            self._records[str(handle)] = rec
            self._note_authority(handle)
            self._bump_local_seq(handle)
            self._audit.setdefault(str(handle), []).append(ev)
        elif op == "put":
            handle = Handle.parse(ev["handle"])
            key = str(handle)
            prior = self._records.get(key)
            native = [NativePayload.from_dict(n) for n in ev.get("native", [])]
            qdc = QdcRecord.from_dict(ev["qdc"])
            if prior is None:
                rec = MetadataRecord(
                    handle=handle,
                    kind=ev["kind"],
                    qdc=qdc,
                    admin=AdminMetadata(
                        source=ev["source"],
                        created=ev["ts"],
                        last_modified=ev["ts"],
                        authority_list=list(ev.get("authority_list", [])),
                    ),
                    native=native,
                    aggregation_type=ev.get("aggregation_type", ""),
                    access_terms=[tuple(t) for t in ev.get("access_terms", [])],
                )
                self._records[key] = rec
                self._bump_local_seq(handle)
            else:
                prior.qdc = qdc
                prior.native = native
                prior.admin.last_modified = ev["ts"]
                if ev.get("source"):
                    prior.admin.source = ev["source"]
                if ev.get("access_terms") is not None:
                    prior.access_terms = [tuple(t) for t in ev["access_terms"]]
            self._audit.setdefault(key, []).append(ev)
        elif op == "delete":
            key = ev["handle"]
            rec = self._records[key]
            rec.admin.status = "deleted"
            rec.admin.last_modified = ev["ts"]
            rec.qdc = QdcRecord()
            rec.native = []
            self._audit.setdefault(key, []).append(ev)
        elif op == "link":
            link = LinkRecord(
                from_handle=Handle.parse(ev["from"]),
                to_handle=Handle.parse(ev["to"]),
                relation=ev["relation"],
                created=ev["ts"],
            )
            key = link.key()
            self._links[key] = link
            self._links_from.setdefault(key[0], []).append(key)
            self._links_to.setdefault(key[1], []).append(key)
        elif op == "terms":
            rec = self._records[ev["handle"]]
            rec.access_terms = [tuple(t) for t in ev["access_terms"]]
            rec.admin.last_modified = ev["ts"]
            self._audit.setdefault(ev["handle"], []).append(ev)
        elif op == "note":
            self._notes[ev["id"]] = {
                "target": ev["target"],
                "text": ev["text"],
                "categories": list(ev.get("categories", [])),
                "display": ev.get("display", ""),
                "ts": ev["ts"],
            }
            self._note_seq = max(self._note_seq, int(ev["id"][1:]))
        elif op == "relation":
            self._relations.add(ev["name"])
        else:
            raise ValueError("unknown event op %r" % op)

    def _note_authority(self, handle):
        m = _AUTHORITY_PATTERN.match(handle.authority)
        if m:
            self._next_authority = max(self._next_authority, int(m.group(1)) + 1)

    def _bump_local_seq(self, handle):
        m = re.match(r"^([CI])(\d+)$", handle.local)
        if m:
            key = (handle.authority, m.group(1))
            self._local_seq[key] = max(self._local_seq.get(key, 0), int(m.group(2)))

    # ------------------------------------------------------------------
    # clock and minting

    def _now(self):
        return int(self._clock())

    def _touch(self, prior_last_modified):
        # Mutations must strictly increase the datestamp even within one
        # clock second, so ties push forward.
        return max(self._now(), prior_last_modified + 1)

    def _mint_authority(self):
        authority = "na-%04d" % self._next_authority
        self._next_authority += 1
        return authority

    def _mint_local(self, authority, prefix):
        key = (authority, prefix)
        seq = self._local_seq.get(key, 0) + 1
        self._local_seq[key] = seq
        return "%s%d" % (prefix, seq)

    # ------------------------------------------------------------------
    # lookups

    def _get(self, handle):
        rec = self._records.get(str(handle))
        if rec is None:
            raise NotFound("no record %s" % handle)
        return rec

    def _get_active(self, handle):
        rec = self._get(handle)
        if rec.admin.status == "deleted":
            raise Gone("record %s is deleted" % handle, rec.admin.last_modified)
        return rec

    def exists(self, handle):
        return str(handle) in self._records

    def record(self, handle):
        """The live record object; internal and read-only by convention."""
        return self._get(handle)

    def all_handles(self):
        with self._lock:
            return sorted(self._records)

    def audit_history(self, handle):
        return list(self._audit.get(str(handle), []))

    def annotation_text(self, note_id):
        note = self._notes.get(note_id)
        if note is None:
            raise NotFound("no annotation %s" % note_id)
        return note["text"]

    # ------------------------------------------------------------------
    # operations

    def register_collection(
        self,
        qdc,
        aggregation_type,
        access_terms=(),
        ingest_config=None,
        authority_list=(),
        source="direct",
    ):
        """Create a collection record under a freshly minted naming
        authority and return its handle."""
        if aggregation_type not in AGGREGATION_TYPES:
            raise ValidationFailure(
                "aggregation type %r not one of %s"
                % (aggregation_type, "/".join(AGGREGATION_TYPES))
            )
        qdc.require_valid("collection")
        terms = [tuple(t) for t in access_terms]
        for t in terms:
            if len(t) != 2:
                raise ValidationFailure("access terms are (audience, use_type) pairs")
        with self._lock:
            self._check_duplicate_collection(qdc)
            authority = self._mint_authority()
            handle = Handle(authority, self._mint_local(authority, "C"))
            self._commit(
                {
                    "op": "collection",
                    "ts": self._now(),
                    "handle": str(handle),
                    "qdc": qdc.to_dict(),
                    "aggregation_type": aggregation_type,
                    "access_terms": [list(t) for t in terms],
                    "ingest_config": dict(ingest_config or {}),
                    "authority_list": list(authority_list),
                    "source": source,
                }
            )
            return handle

    def _check_duplicate_collection(self, qdc):
        title = qdc.first("title").strip()
        ident = qdc.first("identifier").strip()
        for rec in self._records.values():
            if rec.kind != "collection" or rec.admin.status == "deleted":
                continue
            if (
                rec.qdc.first("title").strip() == title
                and rec.qdc.first("identifier").strip() == ident
            ):
                raise Conflict(
                    "collection with identical title and identifier already registered"
                )

    def ensure_system_collection(self, local, title, description):
        """Get or create a repository-owned collection under the
        reserved authority (annotation intake, portal publications)."""
        handle = Handle(SYSTEM_AUTHORITY, local)
        with self._lock:
            if self.exists(handle):
                return handle
            qdc = QdcRecord().add("title", title).add("description", description)
            self._commit(
                {
                    "op": "collection",
                    "ts": self._now(),
                    "handle": str(handle),
                    "qdc": qdc.to_dict(),
                    "aggregation_type": "administrative",
                    "access_terms": [],
                    "ingest_config": {},
                    "authority_list": ["*"],
                    "source": "system",
                }
            )
            return handle

    def put_record(
        self,
        kind,
        qdc,
        native=(),
        source="direct",
        collection=None,
        prior_handle=None,
        access_terms=None,
    ):
        """Create a record under ``collection``'s naming authority, or
        update the record at ``prior_handle``. Items get a memberOf link
        to the collection on creation."""
        if kind not in ("item", "collection"):
            raise ValidationFailure("kind must be item or collection, not %r" % kind)
        qdc.require_valid(kind)
        payloads = []
        for entry in native:
            p = entry if isinstance(entry, NativePayload) else NativePayload(*entry)
            if not _FORMAT_ID_PATTERN.match(p.format_id):
                raise UnsupportedFormat("malformed native format id %r" % p.format_id)
            payloads.append(p)
        self._check_size_cap(qdc, payloads)

        with self._lock:
            if prior_handle is not None:
                prior = self._get(prior_handle)
                if prior.admin.status == "deleted":
                    raise Gone(
                        "record %s is deleted" % prior_handle,
                        prior.admin.last_modified,
                    )
                ts = self._touch(prior.admin.last_modified)
                self._commit(
                    {
                        "op": "put",
                        "ts": ts,
                        "handle": str(prior_handle),
                        "kind": prior.kind,
                        "qdc": qdc.to_dict(),
                        "native": [p.to_dict() for p in payloads],
                        "source": source,
                        "access_terms": None
                        if access_terms is None
                        else [list(t) for t in access_terms],
                    }
                )
                return prior.handle

            if collection is None:
                raise ValidationFailure("new records require a collection")
            coll = self._get_active(collection)
            if coll.kind != "collection":
                raise NotFound("%s is not a collection" % collection)
            authority = coll.handle.authority
            local = self._mint_local(authority, "I" if kind == "item" else "C")
            handle = Handle(authority, local)
            ts = self._now()
            self._commit(
                {
                    "op": "put",
                    "ts": ts,
                    "handle": str(handle),
                    "kind": kind,
                    "qdc": qdc.to_dict(),
                    "native": [p.to_dict() for p in payloads],
                    "source": source,
                    "access_terms": [list(t) for t in (access_terms or [])],
                }
            )
            self._commit(
                {
                    "op": "link",
                    "ts": ts,
                    "from": str(handle),
                    "to": str(coll.handle),
                    "relation": "memberOf",
                }
            )
            return handle

    def _check_size_cap(self, qdc, payloads):
        size = len(qdc.canonical_json()) + sum(len(p.payload) for p in payloads)
        if size > self._size_cap:
            raise ValidationFailure(
                "record serialization is %d bytes, over the %d byte cap; "
                "records are surrogates and never embed resource content"
                % (size, self._size_cap)
            )

    def get_record(self, handle, format_id=QDC_FORMAT, privileged=False):
        """Serialize a record in the requested format.

        The normalized form is always served; native payloads flagged
        privileged require a privileged caller.
        """
        with self._lock:
            rec = self._get(handle)
            if rec.admin.status == "deleted":
                raise Gone("record %s is deleted" % handle, rec.admin.last_modified)
            if format_id == QDC_FORMAT:
                return rec.qdc.to_qdc_xml().encode("utf-8")
            if format_id == OAI_DC_FORMAT:
                return rec.qdc.to_oai_dc_xml().encode("utf-8")
            payload = rec.get_native(format_id)
            if payload is None:
                raise FormatUnavailable(
                    "record %s has no %s serialization" % (handle, format_id)
                )
            if payload.privileged and not privileged:
                raise Forbidden(
                    "format %s on %s is limited to privileged consumers"
                    % (format_id, handle)
                )
            return payload.payload

    def get_record_admin(self, handle):
        """Structural view of a record: administrative metadata, terms,
        formats, and the collections it is aggregated in."""
        with self._lock:
            rec = self._get(handle)
            collections = [
                k[1]
                for k in self._links_from.get(str(handle), [])
                if k[2] == "memberOf"
            ]
            return {
                "handle": str(handle),
                "kind": rec.kind,
                "status": rec.admin.status,
                "source": rec.admin.source,
                "created": rec.admin.created,
                "last_modified": rec.admin.last_modified,
                "authority_list": list(rec.admin.authority_list),
                "aggregation_type": rec.aggregation_type,
                "access_terms": [list(t) for t in rec.access_terms],
                "ingest_config": dict(rec.ingest_config),
                "native_formats": rec.native_formats(),
                "collections": collections,
                "title": rec.qdc.first("title"),
            }

    def set_access_terms(self, handle, access_terms):
        with self._lock:
            rec = self._get_active(handle)
            ts = self._touch(rec.admin.last_modified)
            self._commit(
                {
                    "op": "terms",
                    "ts": ts,
                    "handle": str(handle),
                    "access_terms": [list(t) for t in access_terms],
                }
            )

    def delete_record(self, handle):
        """Tombstone a record: payload purged, identity and datestamp
        retained so harvesters learn of the removal."""
        with self._lock:
            rec = self._get(handle)
            if rec.admin.status == "deleted":
                raise Gone("record %s already deleted" % handle, rec.admin.last_modified)
            if rec.kind == "collection":
                members = [
                    k
                    for k in self._links_to.get(str(handle), [])
                    if k[2] == "memberOf"
                    and self._records[k[0]].admin.status == "active"
                ]
                if members:
                    raise Conflict(
                        "collection %s still aggregates %d active records; "
                        "delete or reassign members first" % (handle, len(members))
                    )
            ts = self._touch(rec.admin.last_modified)
            self._commit({"op": "delete", "ts": ts, "handle": str(handle)})
            return ts

    # ------------------------------------------------------------------
    # links

    def register_relation(self, name):
        with self._lock:
            if name not in self._relations:
                self._commit({"op": "relation", "name": name, "ts": self._now()})

    def link_records(self, from_handle, to_handle, relation):
        with self._lock:
            if relation not in self._relations:
                raise UnsupportedFormat("relation %r is not registered" % relation)
            self._get(from_handle)
            self._get(to_handle)
            key = (str(from_handle), str(to_handle), relation)
            if key in self._links:
                raise Conflict("link %s already exists" % (key,))
            self._commit(
                {
                    "op": "link",
                    "ts": self._now(),
                    "from": key[0],
                    "to": key[1],
                    "relation": relation,
                }
            )
            return self._decorate(self._links[key])

    def _decorate(self, link):
        dangling = (
            self._records[str(link.from_handle)].admin.status == "deleted"
            or self._records[str(link.to_handle)].admin.status == "deleted"
        )
        if dangling == link.dangling:
            return link
        return LinkRecord(
            link.from_handle, link.to_handle, link.relation, link.created, dangling
        )

    def get_links(self, handle, relation=None, direction="both"):
        if direction not in ("outbound", "inbound", "both"):
            raise ValidationFailure("direction must be outbound, inbound, or both")
        with self._lock:
            keys = []
            if direction in ("outbound", "both"):
                keys.extend(self._links_from.get(str(handle), []))
            if direction in ("inbound", "both"):
                keys.extend(self._links_to.get(str(handle), []))
            out = []
            seen = set()
            for k in keys:
                if k in seen or (relation is not None and k[2] != relation):
                    continue
                seen.add(k)
                out.append(self._decorate(self._links[k]))
            out.sort(key=lambda l: l.key())
            return out

    def list_links(self, relation=None):
        """Every link in the store, optionally filtered by relation."""
        with self._lock:
            return [
                self._decorate(self._links[k])
                for k in sorted(self._links)
                if relation is None or k[2] == relation
            ]

    # ------------------------------------------------------------------
    # annotations

    def put_annotation(self, target, text, author_categories=(), author_display=""):
        """Store an annotation body and commit a searchable item record
        describing it, linked ``annotates`` to the target."""
        if not text or not str(text).strip():
            raise ValidationFailure("annotation text must be non-empty")
        text = str(text)
        with self._lock:
            target_rec = self._get_active(target)
            coll = self.ensure_system_collection(
                "annotations",
                "Annotations",
                "Reader-contributed annotations and reviews of catalog records.",
            )
            self._note_seq += 1
            note_id = "a%d" % self._note_seq
            self._commit(
                {
                    "op": "note",
                    "ts": self._now(),
                    "id": note_id,
                    "target": str(target),
                    "text": text,
                    "categories": list(author_categories),
                    "display": author_display,
                }
            )
            target_title = target_rec.qdc.first("title") or str(target)
            qdc = QdcRecord()
            qdc.add("title", "Annotation of %s" % target_title)
            qdc.add("description", text[:ANNOTATION_EXCERPT_CHARS])
            if author_display:
                qdc.add("creator", author_display)
            qdc.add("relation", target_rec.qdc.first("identifier") or str(target))
            qdc.add("identifier", "urn:annotation:%s" % note_id, "uri")
            qdc.add("type", "Text")
            for cat in author_categories:
                qdc.add("audience", cat, "role")
            handle = self.put_record(
                "item", qdc, source="annotation", collection=coll
            )
            self._commit(
                {
                    "op": "link",
                    "ts": self._now(),
                    "from": str(handle),
                    "to": str(target),
                    "relation": "annotates",
                }
            )
            return handle

    # ------------------------------------------------------------------
    # listings (consumed by the OAI provider)

    def listing(self, set_spec=None, from_ts=None, until_ts=None, max_datestamp=None):
        """Records ordered by (datestamp, handle), filtered by set
        membership and datestamp window. Tombstones are included; the
        caller decides how to advertise them."""
        with self._lock:
            out = []
            for key in self._records:
                rec = self._records[key]
                ds = rec.admin.last_modified
                if from_ts is not None and ds < from_ts:
                    continue
                if until_ts is not None and ds > until_ts:
                    continue
                if max_datestamp is not None and ds > max_datestamp:
                    continue
                if set_spec is not None:
                    member = any(
                        k[1] == set_spec and k[2] == "memberOf"
                        for k in self._links_from.get(key, [])
                    )
                    if not member:
                        continue
                out.append(rec)
            out.sort(key=lambda r: (r.admin.last_modified, str(r.handle)))
            return out

    def collections(self):
        with self._lock:
            return [
                r
                for r in self._records.values()
                if r.kind == "collection" and r.admin.status == "active"
            ]

    def sets_of(self, handle):
        """Collection handles the record is aggregated in (its OAI sets)."""
        with self._lock:
            return sorted(
                k[1]
                for k in self._links_from.get(str(handle), [])
                if k[2] == "memberOf"
            )

    def native_format_ids(self):
        """Every native format id present on any active record."""
        with self._lock:
            out = set()
            for rec in self._records.values():
                if rec.admin.status == "active":
                    out.update(rec.native_formats())
            return sorted(out)

    def earliest_datestamp(self):
        with self._lock:
            created = [r.admin.created for r in self._records.values()]
            return min(created) if created else 0
