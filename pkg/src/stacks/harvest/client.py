"""OAI-PMH 2.0 client.

``harvest`` streams one listing to exhaustion, page by page, with
exponential-backoff retry on transport failures. ``incremental_sync``
layers per-source watermark state on top and classifies what came back
into new / changed / deleted against what the caller already holds.

Incremental semantics are at-least-once: the watermark only advances
after a fully successful pass, and each sync re-requests a one-second
overlap window to cover same-second updates. Consumers dedupe by
(identifier, datestamp).
"""

from __future__ import annotations

import calendar
import json
import re
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path

import requests

from ..errors import StacksError

OAI = "{http://www.openarchives.org/OAI/2.0/}"

# same-second updates are invisible to a pure watermark; re-request them
WATERMARK_OVERLAP_SECONDS = 1


class HarvestError(StacksError):
    """Transport-level failure that survived all retries."""


class HarvestProtocolError(StacksError):
    """The provider answered with an OAI error code."""

    def __init__(self, code, message):
        super().__init__("%s: %s" % (code, message))
        self.code = code


class HarvestRestart(StacksError):
    """The provider rejected our resumption token mid-stream; the only
    safe recovery is to restart the harvest from scratch."""


@dataclass(frozen=True)
class HarvestItem:
    identifier: str
    datestamp: str
    status: str  # "active" | "deleted"
    payload: bytes | None
    sets: tuple[str, ...] = ()


@dataclass
class HarvestDelta:
    new: list = field(default_factory=list)
    changed: list = field(default_factory=list)
    deleted: list = field(default_factory=list)  # identifiers

    def counts(self):
        return {
            "new": len(self.new),
            "changed": len(self.changed),
            "deleted": len(self.deleted),
        }


@dataclass
class SourceState:
    endpoint: str
    metadata_prefix: str
    set_spec: str | None = None
    watermark: str | None = None  # ISO UTC datestamp of last good pass


@dataclass
class RetryPolicy:
    attempts: int = 4
    backoff_base: float = 0.5
    backoff_cap: float = 8.0

    def delays(self):
        for i in range(self.attempts):
            yield min(self.backoff_base * (2 ** i), self.backoff_cap)


def _fetch_page(endpoint, params, session, retry, timeout):
    last_exc = None
    for delay in retry.delays():
        try:
            resp = session.get(endpoint, params=params, timeout=timeout)
            resp.raise_for_status()
            return resp.content
        except requests.RequestException as exc:
            last_exc = exc
            if delay:
                time.sleep(delay)
    raise HarvestError("harvest of %s failed: %s" % (endpoint, last_exc))


def _parse_page(content):
    try:
        root = ET.fromstring(content)
    except ET.ParseError as exc:
        raise HarvestError("provider returned unparseable XML: %s" % exc)
    error = root.find(OAI + "error")
    response_date = root.findtext(OAI + "responseDate") or ""
    if error is not None:
        return response_date, error.get("code", ""), error.text or "", [], None
    section = root.find(OAI + "ListRecords")
    items = []
    token = None
    if section is not None:
        for rec in section.findall(OAI + "record"):
            header = rec.find(OAI + "header")
            meta = rec.find(OAI + "metadata")
            payload = None
            if meta is not None and len(meta):
                payload = ET.tostring(list(meta)[0], encoding="utf-8")
            items.append(
                HarvestItem(
                    identifier=header.findtext(OAI + "identifier"),
                    datestamp=header.findtext(OAI + "datestamp"),
                    status=header.get("status", "active"),
                    payload=payload,
                    sets=tuple(
                        s.text for s in header.findall(OAI + "setSpec") if s.text
                    ),
                )
            )
        tok = section.find(OAI + "resumptionToken")
        if tok is not None and tok.text:
            token = tok.text
    return response_date, None, None, items, token


def harvest(
    endpoint,
    metadata_prefix,
    from_=None,
    until=None,
    set_spec=None,
    session=None,
    retry=None,
    timeout=30,
    response_dates=None,
):
    """Stream (as HarvestItem) every record the listing yields, following
    resumption tokens to exhaustion. Memory stays bounded by page size.

    noRecordsMatch is a successful empty stream. badResumptionToken
    mid-stream raises HarvestRestart; other protocol errors raise
    HarvestProtocolError. ``response_dates``, when given a list, receives
    each page's responseDate (the completed pass's timestamp is the last
    entry).
    """
    session = session or requests.Session()
    retry = retry or RetryPolicy()
    params = {"verb": "ListRecords", "metadataPrefix": metadata_prefix}
    if from_:
        params["from"] = from_
    if until:
        params["until"] = until
    if set_spec:
        params["set"] = set_spec
    first_page = True
    while True:
        content = _fetch_page(endpoint, params, session, retry, timeout)
        response_date, code, message, items, token = _parse_page(content)
        if response_dates is not None and response_date:
            response_dates.append(response_date)
        if code == "noRecordsMatch":
            return
        if code == "badResumptionToken":
            if first_page:
                raise HarvestProtocolError(code, message)
            raise HarvestRestart("provider invalidated our token: %s" % message)
        if code:
            raise HarvestProtocolError(code, message)
        yield from items
        if token is None:
            return
        params = {"verb": "ListRecords", "resumptionToken": token}
        first_page = False


def list_sets(endpoint, session=None, retry=None, timeout=30):
    """The provider's sets as (setSpec, setName) pairs; empty when the
    provider defines none."""
    session = session or requests.Session()
    retry = retry or RetryPolicy()
    content = _fetch_page(endpoint, {"verb": "ListSets"}, session, retry, timeout)
    try:
        root = ET.fromstring(content)
    except ET.ParseError as exc:
        raise HarvestError("provider returned unparseable XML: %s" % exc)
    error = root.find(OAI + "error")
    if error is not None:
        if error.get("code") == "noRecordsMatch":
            return []
        raise HarvestProtocolError(error.get("code", ""), error.text or "")
    section = root.find(OAI + "ListSets")
    out = []
    if section is not None:
        for entry in section.findall(OAI + "set"):
            out.append(
                (entry.findtext(OAI + "setSpec"), entry.findtext(OAI + "setName") or "")
            )
    return out


_ISO = "%Y-%m-%dT%H:%M:%SZ"


def _iso_to_epoch(text):
    return calendar.timegm(time.strptime(text, _ISO))


def _epoch_to_iso(epoch):
    return time.strftime(_ISO, time.gmtime(epoch))


def incremental_sync(state, known=None, session=None, retry=None, timeout=30):
    """One incremental pass against a source.

    ``known`` maps identifier -> last seen datestamp (a bare set of
    identifiers also works, at the cost of same-datestamp dedup).
    Returns (HarvestDelta, new SourceState); the caller persists the new
    state only after applying the delta, which keeps a crash mid-pass
    at-least-once rather than lossy.
    """
    known = known or {}
    known_is_map = isinstance(known, dict)
    from_ = None
    if state.watermark:
        from_ = _epoch_to_iso(_iso_to_epoch(state.watermark) - WATERMARK_OVERLAP_SECONDS)
    response_dates = []
    latest = {}
    for item in harvest(
        state.endpoint,
        state.metadata_prefix,
        from_=from_,
        set_spec=state.set_spec,
        session=session,
        retry=retry,
        timeout=timeout,
        response_dates=response_dates,
    ):
        latest[item.identifier] = item  # last occurrence wins

    delta = HarvestDelta()
    for identifier in sorted(latest):
        item = latest[identifier]
        seen = identifier in known
        if item.status == "deleted":
            if seen:
                delta.deleted.append(identifier)
            continue
        if seen:
            if known_is_map and known[identifier] == item.datestamp:
                continue  # duplicate delivery of an unchanged record
            delta.changed.append(item)
        else:
            delta.new.append(item)

    watermark = response_dates[-1] if response_dates else state.watermark
    return delta, replace(state, watermark=watermark)


# ----------------------------------------------------------------------
# per-source state files


def _slug(state):
    raw = "%s|%s|%s" % (state.endpoint, state.metadata_prefix, state.set_spec or "")
    return re.sub(r"[^A-Za-z0-9._-]+", "_", raw).strip("_")


def state_path(directory, state):
    return Path(directory) / ("%s.json" % _slug(state))


def save_state(directory, state):
    path = state_path(directory, state)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(".tmp")
    tmp.write_text(
        json.dumps(
            {
                "endpoint": state.endpoint,
                "metadata_prefix": state.metadata_prefix,
                "set_spec": state.set_spec,
                "watermark": state.watermark,
            },
            indent=2,
        ),
        encoding="utf-8",
    )
    tmp.replace(path)
    return path


def load_state(directory, endpoint, metadata_prefix, set_spec=None):
    probe = SourceState(endpoint, metadata_prefix, set_spec)
    path = state_path(directory, probe)
    if not path.exists():
        return probe
    data = json.loads(path.read_text(encoding="utf-8"))
    return SourceState(
        endpoint=data["endpoint"],
        metadata_prefix=data["metadata_prefix"],
        set_spec=data.get("set_spec"),
        watermark=data.get("watermark"),
    )
