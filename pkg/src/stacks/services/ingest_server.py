"""HTTP surface of the ingest pipeline.

``/upload`` takes a raw batch file body with collection and encoding as
query parameters. ``/ingest`` is the method surface for the other paths:
harvest a provider, gather pages, direct entry, publish a personal
collection, and an explicit staged-commit trigger.
"""

from __future__ import annotations

from ..errors import ValidationFailure
from ..qdc import QdcRecord
from ..repository import Handle
from .http import json_response, read_json, start_server


def build_routes(pipeline):
    def upload(query, body, headers):
        collection = query.get("collection", "")
        if not collection:
            raise ValidationFailure("upload needs ?collection=")
        encoding = query.get("encoding", "xml")
        result = pipeline.ingest_batch(body, encoding, Handle.parse(collection))
        return json_response({"result": result.to_dict()})

    def ingest(query, body, headers):
        req = read_json(body)
        action = req.get("action", "")
        params = req.get("params", {})
        if action == "oai":
            result = pipeline.ingest_from_oai(
                params["endpoint"],
                params["prefix"],
                Handle.parse(params["collection"]),
                params.get("set"),
            )
            return json_response({"result": result.to_dict()})
        if action == "gather":
            result = pipeline.gather(
                params["seeds"],
                params["scope"],
                int(params.get("page_cap", 100)),
                Handle.parse(params["collection"]),
            )
            return json_response({"result": result.to_dict()})
        if action == "entry":
            handle = pipeline.direct_entry(
                QdcRecord.from_dict(params["qdc"]),
                Handle.parse(params["collection"]),
                params.get("editor", ""),
                params.get("kind", "item"),
            )
            return json_response({"result": {"handle": str(handle)}})
        if action == "publish_portal":
            handle = publish_portal(pipeline, params)
            return json_response({"result": {"handle": str(handle)}})
        if action == "commit":
            outcome = pipeline.commit_staged(Handle.parse(params["collection"]))
            return json_response({"result": outcome.to_dict()})
        raise ValidationFailure("unknown ingest action %r" % action)

    return {("POST", "/upload"): upload, ("POST", "/ingest"): ingest}


def publish_portal(pipeline, params):
    """Publish a personal collection: the approved record goes through
    direct entry under the repository-owned portals collection, making
    it harvestable like any other collection."""
    parent = pipeline.repo.ensure_system_collection(
        "portals",
        "Published personal portals",
        "Personal collections published by library users.",
    )
    qdc = QdcRecord.from_dict(params["qdc"])
    return pipeline.direct_entry(
        qdc, parent, params.get("editor", ""), kind="collection"
    )


def serve_ingest(pipeline, host="127.0.0.1", port=0):
    return start_server(build_routes(pipeline), host, port)
