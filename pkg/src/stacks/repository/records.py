"""Record types held by the metadata repository."""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

from ..errors import ValidationFailure

KINDS = ("item", "collection", "link")
AGGREGATION_TYPES = ("administrative", "semantic", "personal")

# Link relations shipped with the build; the registry is extensible at
# runtime through MetadataRepository.register_relation.
BUILTIN_RELATIONS = ("memberOf", "annotates")

# Format id of the normalized serialization; always disseminable.
QDC_FORMAT = "nsdl_qdc"
OAI_DC_FORMAT = "oai_dc"


@dataclass(frozen=True, order=True)
class Handle:
    """Two-part identifier of a metadata record (never of the resource
    the record describes). Rendered ``authority/local``."""

    authority: str
    local: str

    def __post_init__(self):
        if not self.authority or not self.local:
            raise ValidationFailure("handle parts must be non-empty")
        if "/" in self.authority:
            raise ValidationFailure("naming authority may not contain '/'")

    def __str__(self):
        return "%s/%s" % (self.authority, self.local)

    @classmethod
    def parse(cls, text):
        text = str(text)
        if "/" not in text:
            raise ValidationFailure("handle %r is not authority/local" % text)
        authority, local = text.split("/", 1)
        return cls(authority, local)


@dataclass
class AdminMetadata:
    """Administrative metadata about the record itself."""

    source: str
    created: int  # UTC epoch seconds
    last_modified: int
    authority_list: list[str] = field(default_factory=list)
    status: str = "active"  # active | deleted

    def to_dict(self):
        return {
            "source": self.source,
            "created": self.created,
            "last_modified": self.last_modified,
            "authority_list": list(self.authority_list),
            "status": self.status,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            source=data["source"],
            created=data["created"],
            last_modified=data["last_modified"],
            authority_list=list(data.get("authority_list", [])),
            status=data.get("status", "active"),
        )


@dataclass
class NativePayload:
    """A provider-format serialization stored alongside the normalized
    record. Privileged payloads are disseminated only to privileged
    consumers."""

    format_id: str
    payload: bytes
    privileged: bool = False

    def to_dict(self):
        return {
            "format_id": self.format_id,
            "payload": base64.b64encode(self.payload).decode("ascii"),
            "privileged": self.privileged,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            format_id=data["format_id"],
            payload=base64.b64decode(data["payload"]),
            privileged=bool(data.get("privileged", False)),
        )


@dataclass
class MetadataRecord:
    """An item or collection record: normalized description, zero or
    more native payloads, and administrative metadata.

    Item records are surrogates: they carry descriptions and a locator,
    never resource content. Collection records add the aggregation type,
    access terms, and the ingest configuration used by the pipeline.
    Items may carry their own access terms; when empty the rights broker
    falls back to the collections the item is aggregated in.
    """

    handle: Handle
    kind: str
    qdc: object
    admin: AdminMetadata
    native: list[NativePayload] = field(default_factory=list)
    aggregation_type: str = ""
    access_terms: list[tuple[str, str]] = field(default_factory=list)
    ingest_config: dict = field(default_factory=dict)

    def native_formats(self):
        return [n.format_id for n in self.native]

    def get_native(self, format_id):
        for n in self.native:
            if n.format_id == format_id:
                return n
        return None


@dataclass(frozen=True)
class LinkRecord:
    """A typed relationship between two metadata records."""

    from_handle: Handle
    to_handle: Handle
    relation: str
    created: int = 0
    dangling: bool = False

    def key(self):
        return (str(self.from_handle), str(self.to_handle), self.relation)

    def to_dict(self):
        return {
            "from": str(self.from_handle),
            "to": str(self.to_handle),
            "relation": self.relation,
            "created": self.created,
            "dangling": self.dangling,
        }
