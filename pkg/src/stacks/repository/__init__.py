"""The metadata repository: durable union catalog of item, collection,
and link records, with handle minting, an OAI-PMH provider, a structural
method set, and annotation intake."""

from .records import AdminMetadata, Handle, LinkRecord, MetadataRecord, NativePayload
from .store import MetadataRepository
from .oai_provider import OAIProvider

__all__ = [
    "AdminMetadata",
    "Handle",
    "LinkRecord",
    "MetadataRecord",
    "MetadataRepository",
    "NativePayload",
    "OAIProvider",
]
