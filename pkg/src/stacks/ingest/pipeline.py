"""The staged ingest pipeline.

Four paths feed the repository: harvested providers, uploaded batch
files, direct entry by authorized editors, and gathered web pages. All
of them funnel through the same validate -> crosswalk -> stage sequence,
and a batch commit moves staged records into the repository. Records
that fail validation never reach the repository.

Commit is atomic per record and retry-safe: a staged entry is removed
only after the repository accepted it, so a repository outage mid-commit
leaves the remainder staged for the next attempt. Unchanged records
(same source identifier, same content hash) commit as no-ops so
re-running any ingest path never touches a datestamp.
"""

from __future__ import annotations

import base64
import csv
import hashlib
import io
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from ..errors import (
    ConfigError,
    Forbidden,
    Gone,
    NotFound,
    Unavailable,
    UnsupportedFormat,
    ValidationFailure,
)
from ..harvest import incremental_sync, load_state, save_state
from ..qdc import QdcRecord
from ..repository.records import NativePayload
from .crosswalks import GATHERED_FORMAT, QDC_FORMAT, NativeRecord
from .gatherer import Gatherer
from .staging import SourceKeys, StagingArea


@dataclass
class IngestResult:
    staged: int = 0
    committed: int = 0
    failed: list = field(default_factory=list)  # (source_identifier, report dict)
    deleted: int = 0
    handles: list = field(default_factory=list)
    findings: list = field(default_factory=list)  # path-level findings (gather)
    error: str = ""

    def to_dict(self):
        return {
            "staged": self.staged,
            "committed": self.committed,
            "failed": [[s, r] for s, r in self.failed],
            "deleted": self.deleted,
            "handles": [str(h) for h in self.handles],
            "findings": [list(f) for f in self.findings],
            "error": self.error,
        }


class IngestPipeline:
    """``repo`` is a MetadataRepository or a RepositoryClient; the
    pipeline only uses the shared method surface, so it runs in-process
    or across the service boundary unchanged."""

    def __init__(self, repo, data_dir, registry, gather_defaults=None):
        self.repo = repo
        self.registry = registry
        self.staging = StagingArea(data_dir)
        self.keys = SourceKeys(data_dir)
        self.state_dir = str(data_dir) + "/harvest"
        self.gather_defaults = dict(gather_defaults or {})

    # ------------------------------------------------------------------
    # building blocks

    def _walk_for(self, native):
        # a batch may carry a collection-specific column map that
        # overrides the registered spec for this record
        return native.attrs.get("crosswalk") or self.registry.get(native.format_id)

    def validate_native(self, native):
        """Deterministic validation/normalization report for one record."""
        return self._walk_for(native).validate(native)

    def crosswalk(self, native):
        """Native record to normalized QdcRecord; deterministic."""
        return self._walk_for(native).convert(native)

    def _collection_admin(self, collection):
        admin = self.repo.get_record_admin(collection)
        if admin["kind"] != "collection":
            raise NotFound("%s is not a collection" % collection)
        if admin["status"] != "active":
            raise Gone("collection %s is deleted" % collection)
        return admin

    def _stage_native(self, native, result, datestamp=""):
        report = self.validate_native(native)
        if report.status == "fail":
            result.failed.append((native.source_identifier, report.to_dict()))
            return
        qdc = self.crosswalk(native)
        payload_b64 = base64.b64encode(native.payload).decode("ascii")
        content_hash = hashlib.sha256(
            qdc.canonical_json() + b"|" + native.payload
        ).hexdigest()
        self.staging.stage(
            native.collection,
            {
                "op": "put",
                "kind": "item",
                "source_identifier": native.source_identifier,
                "format_id": native.format_id,
                "payload": payload_b64,
                "qdc": qdc.to_dict(),
                "hash": content_hash,
                "datestamp": datestamp,
                "report": report.to_dict(),
            },
        )

    # ------------------------------------------------------------------
    # commit

    def commit_staged(self, collection):
        """Move staged records into the repository. Returns an
        IngestResult covering only this commit pass."""
        result = IngestResult()
        keys = self.keys.load(str(collection))
        for path, entry in self.staging.entries(collection):
            try:
                self._commit_one(collection, entry, keys, result)
            except Unavailable as exc:
                result.error = str(exc)
                break
            self.keys.save(str(collection), keys)
            self.staging.remove(path)
        return result

    def _commit_one(self, collection, entry, keys, result):
        source_id = entry["source_identifier"]
        known = keys.get(source_id)
        if entry["op"] == "delete":
            if known:
                try:
                    self.repo.delete_record(known["handle"])
                except (Gone, NotFound):
                    pass
                del keys[source_id]
                result.deleted += 1
            return
        if known and known.get("hash") == entry["hash"]:
            # unchanged content: committed as a no-op, no datestamp touched
            result.committed += 1
            result.handles.append(known["handle"])
            return
        qdc = QdcRecord.from_dict(entry["qdc"])
        native = []
        if entry["format_id"] != QDC_FORMAT:
            native = [
                NativePayload(
                    entry["format_id"], base64.b64decode(entry["payload"]), False
                )
            ]
        from ..repository import Handle

        if known:
            handle = self.repo.put_record(
                entry.get("kind", "item"),
                qdc,
                native,
                source="ingest:%s" % entry["format_id"],
                prior_handle=Handle.parse(known["handle"]),
            )
        else:
            handle = self.repo.put_record(
                entry.get("kind", "item"),
                qdc,
                native,
                source="ingest:%s" % entry["format_id"],
                collection=Handle.parse(str(collection)),
            )
        keys[source_id] = {
            "handle": str(handle),
            "hash": entry["hash"],
            "datestamp": entry.get("datestamp", ""),
        }
        result.committed += 1
        result.handles.append(str(handle))

    # ------------------------------------------------------------------
    # batch files

    def ingest_batch(self, data, encoding, collection, commit=True):
        """Ingest an uploaded batch file: XML container, CSV, or TSV."""
        admin = self._collection_admin(collection)
        if isinstance(data, str):
            with open(data, "rb") as fh:
                data = fh.read()
        result = IngestResult()
        if encoding == "xml":
            natives = self._batch_xml(data, collection)
        elif encoding in ("csv", "tsv"):
            natives = self._batch_rows(data, encoding, collection, admin)
        else:
            raise UnsupportedFormat("batch encoding %r not supported" % encoding)
        for native in natives:
            result.staged += 1
            self._stage_native(native, result)
        if commit:
            self._merge_commit(result, self.commit_staged(collection))
        return result

    def _merge_commit(self, result, commit_result):
        result.committed += commit_result.committed
        result.deleted += commit_result.deleted
        result.handles.extend(commit_result.handles)
        result.error = commit_result.error

    def _batch_xml(self, data, collection):
        try:
            root = ET.fromstring(data)
        except ET.ParseError as exc:
            raise ValidationFailure("unreadable batch file: %s" % exc)
        format_id = root.get("format", "")
        if format_id not in self.registry:
            raise UnsupportedFormat("batch format %r not registered" % format_id)
        natives = []
        for i, child in enumerate(root):
            source_id = child.get("id", "")
            inner = list(child)
            payload = (
                ET.tostring(inner[0], encoding="utf-8")
                if inner
                else ET.tostring(child, encoding="utf-8")
            )
            if not source_id:
                source_id = "batch:%s" % hashlib.sha256(payload).hexdigest()[:16]
            natives.append(
                NativeRecord(format_id, payload, source_id, str(collection))
            )
        return natives

    def _batch_rows(self, data, encoding, collection, admin):
        column_map = admin.get("ingest_config", {}).get("column_map")
        if not column_map:
            raise ConfigError(
                "collection %s has no column_map in its ingest configuration"
                % collection
            )
        spec = {
            "format_id": "dc_csv",
            "source_kind": "row",
            "required": [
                col for col, target in column_map.items() if target == "title"
            ]
            or list(column_map)[:1],
            "rules": [
                {
                    "source": col,
                    "element": target.split(".")[0],
                    "qualifier": target.split(".")[1] if "." in target else "",
                }
                for col, target in column_map.items()
                if target != "@source_id"
            ],
        }
        from .crosswalks import SpecCrosswalk

        walk = SpecCrosswalk(spec, self.registry.normalizer)
        id_columns = [c for c, t in column_map.items() if t == "@source_id"]
        delimiter = "\t" if encoding == "tsv" else ","
        text = data.decode("utf-8-sig")
        reader = csv.DictReader(io.StringIO(text), delimiter=delimiter)
        natives = []
        for row in reader:
            row = {k: (v or "").strip() for k, v in row.items() if k}
            payload = json.dumps(row, ensure_ascii=False, sort_keys=True).encode(
                "utf-8"
            )
            if id_columns and row.get(id_columns[0]):
                source_id = "row:%s" % row[id_columns[0]]
            else:
                source_id = "row:%s" % hashlib.sha256(payload).hexdigest()[:16]
            native = NativeRecord("dc_csv", payload, source_id, str(collection))
            native.attrs["crosswalk"] = walk
            natives.append(native)
        return natives

    # ------------------------------------------------------------------
    # harvested providers

    def ingest_from_oai(self, endpoint, metadata_prefix, collection, set_spec=None, commit=True):
        """Harvest a provider into the collection; re-harvests update by
        OAI identifier instead of duplicating, and upstream deletions
        propagate as tombstones."""
        self._collection_admin(collection)
        if metadata_prefix not in self.registry:
            raise UnsupportedFormat(
                "no crosswalk registered for prefix %r" % metadata_prefix
            )
        keys = self.keys.load(str(collection))
        known = {
            source_id: info.get("datestamp", "")
            for source_id, info in keys.items()
        }
        state = load_state(self.state_dir, endpoint, metadata_prefix, set_spec)
        delta, new_state = incremental_sync(state, known)
        result = IngestResult()
        for item in delta.new + delta.changed:
            result.staged += 1
            self._stage_native(
                NativeRecord(
                    metadata_prefix, item.payload, item.identifier, str(collection)
                ),
                result,
                datestamp=item.datestamp,
            )
        for identifier in delta.deleted:
            result.staged += 1
            self.staging.stage(
                collection,
                {"op": "delete", "source_identifier": identifier, "hash": ""},
            )
        if commit:
            self._merge_commit(result, self.commit_staged(collection))
            if not result.error:
                save_state(self.state_dir, new_state)
        return result

    # ------------------------------------------------------------------
    # direct entry

    def direct_entry(self, qdc, collection, editor, kind="item"):
        """One editor-authored record, staged and committed as a batch of
        one. The editor must appear in the collection's authority list."""
        admin = self._collection_admin(collection)
        authority_list = admin.get("authority_list", [])
        if editor not in authority_list and "*" not in authority_list:
            raise Forbidden(
                "editor %r is not authorized for collection %s" % (editor, collection)
            )
        qdc.require_valid(kind)
        payload = qdc.to_qdc_xml().encode("utf-8")
        ident = qdc.first("identifier") or qdc.first("title")
        source_id = "direct:%s" % ident
        content_hash = hashlib.sha256(
            qdc.canonical_json() + b"|" + payload
        ).hexdigest()
        self.staging.stage(
            collection,
            {
                "op": "put",
                "kind": kind,
                "source_identifier": source_id,
                "format_id": QDC_FORMAT,
                "payload": base64.b64encode(payload).decode("ascii"),
                "qdc": qdc.to_dict(),
                "hash": content_hash,
                "datestamp": "",
                "report": {"status": "ok", "findings": []},
            },
        )
        outcome = self.commit_staged(collection)
        if outcome.error:
            raise Unavailable(outcome.error)
        from ..repository import Handle

        return Handle.parse(outcome.handles[-1])

    # ------------------------------------------------------------------
    # gathering

    def gather(self, seeds, scope, page_cap, collection, commit=True, **gather_kw):
        """Crawl open-access pages within scope and describe each one
        heuristically; the generated records flow through the same
        validate/crosswalk path as any native format."""
        self._collection_admin(collection)
        kwargs = dict(self.gather_defaults)
        kwargs.update(gather_kw)
        gatherer = Gatherer(scope, page_cap, **kwargs)
        pages, findings = gatherer.crawl(list(seeds))
        result = IngestResult(findings=list(findings))
        for url, content_type, body in pages:
            result.staged += 1
            self._stage_native(
                NativeRecord(
                    GATHERED_FORMAT,
                    body,
                    url,
                    str(collection),
                    attrs={"content_type": content_type},
                ),
                result,
            )
        if commit:
            self._merge_commit(result, self.commit_staged(collection))
        result.request_log = gatherer.request_log
        return result
