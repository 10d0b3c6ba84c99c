"""HTTP clients for the service surfaces.

RepositoryClient mirrors the repository's method signatures so callers
(ingest pipeline, rights broker, search sync) can hold either a direct
in-process repository or a client across the wire; the service boundary
is the only supported multi-process access path. Transport failures
raise Unavailable so consumers can fail closed.
"""

from __future__ import annotations

import base64

import requests

from ..errors import Unavailable
from ..qdc import QdcRecord
from ..repository import Handle
from ..repository.records import LinkRecord
from .http import raise_from_body


class RepositoryClient:
    def __init__(self, base_url, session=None, timeout=30, privileged_token=""):
        self.base_url = base_url.rstrip("/")
        self.session = session or requests.Session()
        self.timeout = timeout
        self.privileged_token = privileged_token

    @property
    def oai_url(self):
        return self.base_url + "/oai"

    def _call(self, method, params):
        try:
            resp = self.session.post(
                self.base_url + "/structural",
                json={"method": method, "params": params},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise Unavailable("repository unreachable: %s" % exc)
        if resp.status_code != 200:
            raise_from_body(resp.status_code, resp.content)
        return resp.json()["result"]

    # -- mirrored operations -------------------------------------------

    def register_collection(
        self,
        qdc,
        aggregation_type,
        access_terms=(),
        ingest_config=None,
        authority_list=(),
        source="direct",
    ):
        result = self._call(
            "register_collection",
            {
                "qdc": qdc.to_dict(),
                "aggregation_type": aggregation_type,
                "access_terms": [list(t) for t in access_terms],
                "ingest_config": ingest_config or {},
                "authority_list": list(authority_list),
                "source": source,
            },
        )
        return Handle.parse(result["handle"])

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
        result = self._call(
            "put_record",
            {
                "kind": kind,
                "qdc": qdc.to_dict(),
                "native": [
                    {
                        "format_id": n.format_id,
                        "payload": base64.b64encode(n.payload).decode("ascii"),
                        "privileged": n.privileged,
                    }
                    for n in native
                ],
                "source": source,
                "collection": str(collection) if collection else None,
                "prior_handle": str(prior_handle) if prior_handle else None,
                "access_terms": None
                if access_terms is None
                else [list(t) for t in access_terms],
            },
        )
        return Handle.parse(result["handle"])

    def delete_record(self, handle):
        return self._call("delete_record", {"handle": str(handle)})["datestamp"]

    def get_record(self, handle, format_id="nsdl_qdc", privileged=False):
        result = self._call(
            "get_record",
            {
                "handle": str(handle),
                "format_id": format_id,
                "privileged": privileged,
            },
        )
        return base64.b64decode(result["payload"])

    def get_record_admin(self, handle):
        return self._call("get_record_admin", {"handle": str(handle)})

    def set_access_terms(self, handle, access_terms):
        self._call(
            "set_access_terms",
            {"handle": str(handle), "access_terms": [list(t) for t in access_terms]},
        )

    def ensure_system_collection(self, local, title, description):
        result = self._call(
            "ensure_system_collection",
            {"local": local, "title": title, "description": description},
        )
        return Handle.parse(result["handle"])

    def put_annotation(self, target, text, author_categories=(), author_display=""):
        result = self._call(
            "put_annotation",
            {
                "target": str(target),
                "text": text,
                "author_categories": list(author_categories),
                "author_display": author_display,
            },
        )
        return Handle.parse(result["handle"])

    def _links(self, result):
        return [
            LinkRecord(
                Handle.parse(l["from"]),
                Handle.parse(l["to"]),
                l["relation"],
                l.get("created", 0),
                l.get("dangling", False),
            )
            for l in result["links"]
        ]

    def get_links(self, handle, relation=None, direction="both"):
        return self._links(
            self._call(
                "get_links",
                {"handle": str(handle), "relation": relation, "direction": direction},
            )
        )

    def list_links(self, relation=None):
        return self._links(self._call("list_links", {"relation": relation}))


def parse_qdc_payload(payload):
    """Convenience for consumers holding a harvested normalized record."""
    from ..qdc import parse_qdc_xml

    return parse_qdc_xml(payload)


__all__ = ["RepositoryClient", "parse_qdc_payload", "QdcRecord"]
