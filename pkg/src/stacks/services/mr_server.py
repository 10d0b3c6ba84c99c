"""HTTP surface of the metadata repository.

Two endpoints: ``/oai`` speaks OAI-PMH 2.0 for harvest-style access, and
``/structural`` carries the method set for everything the harvesting
protocol is ill-suited for: link traversal, administrative views, and
the write operations the ingest pipeline and operators need. Structural
requests and responses are JSON. ``/annotation`` is the public intake
for reader annotations.
"""

from __future__ import annotations

import base64

from ..errors import NotFound, ValidationFailure
from ..qdc import QdcRecord
from ..repository import Handle, OAIProvider
from ..repository.records import NativePayload
from .http import json_response, read_json, start_server


def _handle(value):
    return Handle.parse(value)


def _qdc(data):
    if not isinstance(data, dict):
        raise ValidationFailure("qdc must be an element map")
    return QdcRecord.from_dict(data)


def _native_list(entries):
    out = []
    for e in entries or []:
        out.append(
            NativePayload(
                e["format_id"],
                base64.b64decode(e["payload"]),
                bool(e.get("privileged", False)),
            )
        )
    return out


def _link_dicts(links):
    return [l.to_dict() for l in links]


class StructuralMethods:
    """The request/response method set over the repository."""

    def __init__(self, repo):
        self.repo = repo

    def dispatch(self, method, params):
        func = getattr(self, "m_" + method, None)
        if func is None:
            raise NotFound("no structural method %r" % method)
        return func(params)

    def m_get_links(self, p):
        links = self.repo.get_links(
            _handle(p["handle"]), p.get("relation"), p.get("direction", "both")
        )
        return {"links": _link_dicts(links)}

    def m_list_links(self, p):
        return {"links": _link_dicts(self.repo.list_links(p.get("relation")))}

    def m_get_record_admin(self, p):
        return self.repo.get_record_admin(_handle(p["handle"]))

    def m_get_record(self, p):
        payload = self.repo.get_record(
            _handle(p["handle"]),
            p.get("format_id", "nsdl_qdc"),
            bool(p.get("privileged", False)),
        )
        return {"payload": base64.b64encode(payload).decode("ascii")}

    def m_register_collection(self, p):
        handle = self.repo.register_collection(
            _qdc(p["qdc"]),
            p["aggregation_type"],
            [tuple(t) for t in p.get("access_terms", [])],
            p.get("ingest_config"),
            p.get("authority_list", ()),
            p.get("source", "direct"),
        )
        return {"handle": str(handle)}

    def m_put_record(self, p):
        handle = self.repo.put_record(
            p["kind"],
            _qdc(p["qdc"]),
            _native_list(p.get("native")),
            p.get("source", "direct"),
            _handle(p["collection"]) if p.get("collection") else None,
            _handle(p["prior_handle"]) if p.get("prior_handle") else None,
            None
            if p.get("access_terms") is None
            else [tuple(t) for t in p["access_terms"]],
        )
        return {"handle": str(handle)}

    def m_delete_record(self, p):
        stamp = self.repo.delete_record(_handle(p["handle"]))
        return {"datestamp": stamp}

    def m_set_access_terms(self, p):
        self.repo.set_access_terms(
            _handle(p["handle"]), [tuple(t) for t in p["access_terms"]]
        )
        return {"ok": True}

    def m_ensure_system_collection(self, p):
        handle = self.repo.ensure_system_collection(
            p["local"], p["title"], p["description"]
        )
        return {"handle": str(handle)}

    def m_put_annotation(self, p):
        handle = self.repo.put_annotation(
            _handle(p["target"]),
            p.get("text", ""),
            p.get("author_categories", ()),
            p.get("author_display", ""),
        )
        return {"handle": str(handle)}


def build_routes(repo, provider, privileged_token=""):
    structural = StructuralMethods(repo)

    def is_privileged(headers):
        token = headers.get("X-Privileged-Token", "")
        return bool(privileged_token) and token == privileged_token

    def oai(query, body, headers):
        if body:
            from urllib.parse import parse_qsl

            query = dict(query)
            query.update(parse_qsl(body.decode("utf-8"), keep_blank_values=True))
        doc = provider.handle_request(query, privileged=is_privileged(headers))
        return 200, "text/xml; charset=utf-8", doc

    def structural_route(query, body, headers):
        req = read_json(body)
        method = req.get("method", "")
        result = structural.dispatch(method, req.get("params", {}))
        return json_response({"result": result})

    def annotation(query, body, headers):
        req = read_json(body)
        handle = repo.put_annotation(
            Handle.parse(req.get("target", "")),
            req.get("text", ""),
            req.get("author_categories", ()),
            req.get("author_display", ""),
        )
        return json_response({"handle": str(handle)})

    return {
        ("GET", "/oai"): oai,
        ("POST", "/oai"): oai,
        ("POST", "/structural"): structural_route,
        ("POST", "/annotation"): annotation,
    }


def serve_repository(repo, host="127.0.0.1", port=0, privileged_token="", **provider_kw):
    provider = OAIProvider(repo, **provider_kw)
    server = start_server(build_routes(repo, provider, privileged_token), host, port)
    provider.base_url = server.url + "/oai"
    return server
