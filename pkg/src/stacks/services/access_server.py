"""HTTP surface of access management: /auth, /profile, /rights, /report.

Responses to service clients carry attributes, categories, decisions,
and aggregates only; the principal id and username never appear in any
serialized response. The session token rides in the X-Session-Token
header (body fallback allowed).
"""

from __future__ import annotations

from ..errors import AuthFailure, Forbidden, ValidationFailure
from ..repository import Handle
from .http import json_response, read_json, start_server


class AccessServices:
    def __init__(self, registry, sessions, profiles, broker, policy, admin_secret=""):
        self.registry = registry
        self.sessions = sessions
        self.profiles = profiles
        self.broker = broker
        self.policy = policy
        self.admin_secret = admin_secret


def build_routes(services):
    def session_from(headers, req=None):
        token = headers.get("X-Session-Token", "") or (req or {}).get("token", "")
        if not token:
            raise AuthFailure("no session token presented")
        return services.sessions.resolve(token)

    def session_payload(session):
        return {
            "token": session.token,
            "expires": session.expiry,
            "categories": sorted(session.categories),
            "kind": session.kind,
        }

    def auth(query, body, headers):
        req = read_json(body)
        action = req.get("action", "login")
        if action == "login":
            session = services.sessions.login(
                services.registry, req.get("username", ""), req.get("secret", "")
            )
            return json_response(session_payload(session))
        if action == "anonymous":
            return json_response(session_payload(services.sessions.anonymous()))
        if action == "network":
            session = services.sessions.network(
                req.get("address", ""), services.policy.network_ranges
            )
            return json_response(session_payload(session))
        if action == "resolve":
            session = session_from(headers, req)
            return json_response(session_payload(session))
        if action == "register":
            if not services.admin_secret or req.get("admin_secret") != services.admin_secret:
                raise Forbidden("registration requires the operator secret")
            for category in req.get("categories", []):
                if not services.broker.categories.exists(category):
                    raise ValidationFailure("unknown category %r" % category)
            services.registry.add_user(
                req.get("username", ""),
                req.get("secret", ""),
                req.get("categories", []),
                req.get("attributes"),
            )
            return json_response({"ok": True})
        raise ValidationFailure("unknown auth action %r" % action)

    def profile_get(query, body, headers):
        session = session_from(headers)
        key = query.get("key", "")
        value = services.profiles.get(session, key)
        return json_response({"key": key, "value": value})

    def profile_put(query, body, headers):
        req = read_json(body)
        session = session_from(headers, req)
        services.profiles.put(session, req.get("key", ""), req.get("value"))
        return json_response({"ok": True})

    def rights(query, body, headers):
        req = read_json(body)
        session = session_from(headers, req)
        decision = services.broker.check(session, Handle.parse(req.get("item", "")))
        return json_response(decision.to_dict())

    def report(query, body, headers):
        collection = query.get("collection", "")
        if not collection:
            raise ValidationFailure("report needs ?collection=")
        data = services.broker.usage_report(
            Handle.parse(collection),
            query.get("from") or None,
            query.get("until") or None,
        )
        return json_response(data)

    return {
        ("POST", "/auth"): auth,
        ("GET", "/profile"): profile_get,
        ("POST", "/profile"): profile_put,
        ("POST", "/rights"): rights,
        ("GET", "/report"): report,
    }


def serve_access(services, host="127.0.0.1", port=0):
    return start_server(build_routes(services), host, port)
