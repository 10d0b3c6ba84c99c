"""HTTP surface of the search service.

Stateless request/response: the body carries the query expression with
limit, offset, and an optional attribute selection; the response carries
the ranked entries with summaries and item pointers. No caller identity
is read, so responses cannot depend on it. ``/sync`` triggers an
incremental index update from the repository.
"""

from __future__ import annotations

from ..errors import QueryError
from .http import json_response, read_json, start_server


def build_routes(service):
    def search(query, body, headers):
        req = read_json(body)
        expression = req.get("expression")
        if not isinstance(expression, str):
            raise QueryError("request body needs an 'expression' string", 0)
        limit = req.get("limit")
        offset = req.get("offset", 0)
        if limit is not None and not isinstance(limit, int):
            raise QueryError("limit must be an integer", 0)
        if not isinstance(offset, int):
            raise QueryError("offset must be an integer", 0)
        ranked = service.execute_query(expression, limit=limit, offset=offset)
        payload = ranked.to_dict()
        attributes = req.get("attributes")
        if attributes:
            for entry in payload["entries"]:
                entry["summary"] = {
                    k: v for k, v in entry["summary"].items() if k in attributes
                }
        return json_response(payload)

    def sync(query, body, headers):
        stats = service.sync_index()
        return json_response({"result": stats.to_dict()})

    return {("POST", "/search"): search, ("POST", "/sync"): sync}


def serve_search(service, host="127.0.0.1", port=0):
    return start_server(build_routes(service), host, port)
