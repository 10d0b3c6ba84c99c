"""OAI-PMH 2.0 provider over the metadata repository.

All six verbs, all six error codes. Listings page through opaque
resumption tokens that carry the original filter, a keyset cursor, and a
snapshot watermark: records modified after the watermark fall out of the
listing (they surface on the next incremental harvest), so a paged
harvest never observes a torn update and never skips an untouched
record. Tokens are signed against the request filter and expire.
"""

from __future__ import annotations

import base64
import binascii
import calendar
import hashlib
import json
import time

from ..qdc import xml_escape
from .records import OAI_DC_FORMAT, QDC_FORMAT

OAI_NS = "http://www.openarchives.org/OAI/2.0/"

VERBS = {
    "Identify": (set(), set()),
    "ListMetadataFormats": (set(), {"identifier"}),
    "ListSets": (set(), {"resumptionToken"}),
    "ListIdentifiers": ({"metadataPrefix"}, {"from", "until", "set", "resumptionToken"}),
    "ListRecords": ({"metadataPrefix"}, {"from", "until", "set", "resumptionToken"}),
    "GetRecord": ({"identifier", "metadataPrefix"}, set()),
}

_FORMAT_INFO = {
    OAI_DC_FORMAT: (
        "http://www.openarchives.org/OAI/2.0/oai_dc.xsd",
        "http://www.openarchives.org/OAI/2.0/oai_dc/",
    ),
    QDC_FORMAT: (
        "http://ns.stacks.local/qdc.xsd",
        "http://ns.stacks.local/qdc/",
    ),
}


def format_ts(epoch):
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(epoch))


def parse_ts(text, is_until=False):
    """Parse an OAI datestamp argument.

    Returns (epoch_seconds, granularity) where granularity is "day" or
    "second". Date-only values expand to the start (from) or end (until)
    of the day. Raises ValueError on malformed input.
    """
    text = text.strip()
    if len(text) == 10:
        t = time.strptime(text, "%Y-%m-%d")
        epoch = calendar.timegm(t)
        if is_until:
            epoch += 86399
        return epoch, "day"
    t = time.strptime(text, "%Y-%m-%dT%H:%M:%SZ")
    return calendar.timegm(t), "second"


def record_identifier(handle):
    return "oai:%s:%s" % (handle.authority, handle.local)


def parse_identifier(identifier):
    if not identifier.startswith("oai:"):
        return None
    parts = identifier.split(":", 2)
    if len(parts) != 3 or not parts[1] or not parts[2]:
        return None
    return parts[1], parts[2]


class OAIError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


class OAIProvider:
    def __init__(
        self,
        repo,
        base_url="http://localhost/oai",
        repository_name="stacks union catalog",
        admin_email="admin@localhost",
        page_size=100,
        token_ttl=3600,
        secret="stacks-oai",
        clock=time.time,
    ):
        self.repo = repo
        self.base_url = base_url
        self.repository_name = repository_name
        self.admin_email = admin_email
        self.page_size = page_size
        self.token_ttl = token_ttl
        self.secret = secret
        self.clock = clock

    # ------------------------------------------------------------------

    def handle_request(self, args, privileged=False):
        """Process one protocol request. ``args`` maps argument names to
        values (single-valued). Returns the UTF-8 response document."""
        args = dict(args)
        verb = args.pop("verb", None)
        try:
            if verb not in VERBS:
                raise OAIError("badVerb", "unknown or missing verb %r" % verb)
            required, optional = VERBS[verb]
            has_token = "resumptionToken" in args
            if has_token:
                # exclusive argument: nothing else may accompany it
                extra = set(args) - {"resumptionToken"}
                if extra:
                    raise OAIError(
                        "badArgument",
                        "resumptionToken is exclusive; got %s" % sorted(extra),
                    )
            else:
                missing = required - set(args)
                if missing:
                    raise OAIError("badArgument", "missing %s" % sorted(missing))
                unknown = set(args) - required - optional
                if unknown:
                    raise OAIError("badArgument", "illegal argument %s" % sorted(unknown))
            for name, value in args.items():
                if value == "":
                    raise OAIError("badArgument", "empty value for %s" % name)
            body = getattr(self, "_do_" + verb.lower())(args, privileged)
        except OAIError as exc:
            return self._envelope(verb if verb in VERBS else None, args, self._error(exc))
        return self._envelope(verb, args, body)

    def _error(self, exc):
        return '<error code="%s">%s</error>' % (exc.code, xml_escape(str(exc)))

    def _envelope(self, verb, args, body):
        ts = format_ts(int(self.clock()))
        attrs = "".join(
            ' %s="%s"' % (k, xml_escape(v))
            for k, v in sorted(args.items())
            if k != "verb"
        )
        if verb:
            request = '<request verb="%s"%s>%s</request>' % (
                verb,
                attrs,
                xml_escape(self.base_url),
            )
            if body.startswith("<error"):
                payload = body
            else:
                payload = "<%s>%s</%s>" % (verb, body, verb)
        else:
            request = "<request>%s</request>" % xml_escape(self.base_url)
            payload = body
        doc = (
            '<?xml version="1.0" encoding="UTF-8"?>'
            '<OAI-PMH xmlns="%s">'
            "<responseDate>%s</responseDate>%s%s</OAI-PMH>"
        ) % (OAI_NS, ts, request, payload)
        return doc.encode("utf-8")

    # ------------------------------------------------------------------
    # tokens

    def _sign(self, fields):
        blob = json.dumps(fields, sort_keys=True) + self.secret
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]

    def _make_token(self, verb, prefix, set_spec, from_ts, until_ts, cursor_key, watermark):
        fields = {
            "v": verb,
            "p": prefix,
            "s": set_spec,
            "f": from_ts,
            "u": until_ts,
            "c": list(cursor_key),
            "w": watermark,
            "x": int(self.clock()) + self.token_ttl,
        }
        fields["h"] = self._sign(
            {k: fields[k] for k in ("v", "p", "s", "f", "u", "c", "w", "x")}
        )
        raw = json.dumps(fields, sort_keys=True).encode("utf-8")
        return base64.urlsafe_b64encode(raw).decode("ascii")

    def _read_token(self, token, verb):
        try:
            fields = json.loads(base64.urlsafe_b64decode(token.encode("ascii")))
            expected = self._sign(
                {k: fields[k] for k in ("v", "p", "s", "f", "u", "c", "w", "x")}
            )
        except (ValueError, KeyError, binascii.Error):
            raise OAIError("badResumptionToken", "token is not decodable")
        if fields.get("h") != expected or fields["v"] != verb:
            raise OAIError("badResumptionToken", "token does not match this request")
        if int(self.clock()) > fields["x"]:
            raise OAIError("badResumptionToken", "token has expired")
        return fields

    # ------------------------------------------------------------------
    # verbs

    def _do_identify(self, args, privileged):
        earliest = self.repo.earliest_datestamp()
        return (
            "<repositoryName>%s</repositoryName>"
            "<baseURL>%s</baseURL>"
            "<protocolVersion>2.0</protocolVersion>"
            "<adminEmail>%s</adminEmail>"
            "<earliestDatestamp>%s</earliestDatestamp>"
            "<deletedRecord>persistent</deletedRecord>"
            "<granularity>YYYY-MM-DDThh:mm:ssZ</granularity>"
        ) % (
            xml_escape(self.repository_name),
            xml_escape(self.base_url),
            xml_escape(self.admin_email),
            format_ts(earliest),
        )

    def _format_ids(self, record=None, privileged=False):
        ids = [OAI_DC_FORMAT, QDC_FORMAT]
        if record is None:
            natives = self.repo.native_format_ids()
        else:
            natives = [
                n.format_id
                for n in record.native
                if privileged or not n.privileged
            ]
        ids.extend(sorted(set(natives)))
        return ids

    def _do_listmetadataformats(self, args, privileged):
        record = None
        if "identifier" in args:
            record = self._resolve(args["identifier"])
        parts = []
        for fmt in self._format_ids(record, privileged):
            schema, ns = _FORMAT_INFO.get(
                fmt, ("http://ns.stacks.local/native/%s.xsd" % fmt,
                      "http://ns.stacks.local/native/%s/" % fmt)
            )
            parts.append(
                "<metadataFormat><metadataPrefix>%s</metadataPrefix>"
                "<schema>%s</schema><metadataNamespace>%s</metadataNamespace>"
                "</metadataFormat>" % (fmt, schema, ns)
            )
        return "".join(parts)

    def _do_listsets(self, args, privileged):
        if "resumptionToken" in args:
            raise OAIError("badResumptionToken", "set listings are not paged")
        parts = []
        for rec in sorted(self.repo.collections(), key=lambda r: str(r.handle)):
            parts.append(
                "<set><setSpec>%s</setSpec><setName>%s</setName></set>"
                % (xml_escape(str(rec.handle)), xml_escape(rec.qdc.first("title")))
            )
        if not parts:
            raise OAIError("noRecordsMatch", "no sets defined")
        return "".join(parts)

    def _resolve(self, identifier):
        parsed = parse_identifier(identifier)
        if parsed is None:
            raise OAIError("idDoesNotExist", "%s is not a local identifier" % identifier)
        from .records import Handle

        handle = Handle(parsed[0], parsed[1])
        if not self.repo.exists(handle):
            raise OAIError("idDoesNotExist", "no record %s" % identifier)
        return self.repo.record(handle)

    def _check_prefix(self, prefix):
        if prefix in (OAI_DC_FORMAT, QDC_FORMAT):
            return
        if prefix not in self.repo.native_format_ids():
            raise OAIError(
                "cannotDisseminateFormat", "prefix %s is not supported" % prefix
            )

    def _do_getrecord(self, args, privileged):
        record = self._resolve(args["identifier"])
        prefix = args["metadataPrefix"]
        self._check_prefix(prefix)
        deleted = record.admin.status == "deleted"
        if not deleted and prefix not in (OAI_DC_FORMAT, QDC_FORMAT):
            payload = record.get_native(prefix)
            if payload is None or (payload.privileged and not privileged):
                raise OAIError(
                    "cannotDisseminateFormat",
                    "record has no disseminable %s serialization" % prefix,
                )
        return self._render_record(record, prefix, privileged)

    def _render_header(self, record):
        status = ' status="deleted"' if record.admin.status == "deleted" else ""
        sets = "".join(
            "<setSpec>%s</setSpec>" % xml_escape(s)
            for s in self.repo.sets_of(record.handle)
        )
        return "<header%s><identifier>%s</identifier><datestamp>%s</datestamp>%s</header>" % (
            status,
            record_identifier(record.handle),
            format_ts(record.admin.last_modified),
            sets,
        )

    def _render_record(self, record, prefix, privileged):
        header = self._render_header(record)
        if record.admin.status == "deleted":
            return "<record>%s</record>" % header
        if prefix == OAI_DC_FORMAT:
            metadata = record.qdc.to_oai_dc_xml()
        elif prefix == QDC_FORMAT:
            metadata = record.qdc.to_qdc_xml()
        else:
            metadata = record.get_native(prefix).payload.decode("utf-8")
        return "<record>%s<metadata>%s</metadata></record>" % (header, metadata)

    def _listing_args(self, args, verb):
        if "resumptionToken" in args:
            fields = self._read_token(args["resumptionToken"], verb)
            return (
                fields["p"],
                fields["s"],
                fields["f"],
                fields["u"],
                tuple(fields["c"]),
                fields["w"],
            )
        prefix = args["metadataPrefix"]
        self._check_prefix(prefix)
        from_ts = until_ts = None
        gran = set()
        if "from" in args:
            try:
                from_ts, g = parse_ts(args["from"])
            except ValueError:
                raise OAIError("badArgument", "malformed from datestamp")
            gran.add(g)
        if "until" in args:
            try:
                until_ts, g = parse_ts(args["until"], is_until=True)
            except ValueError:
                raise OAIError("badArgument", "malformed until datestamp")
            gran.add(g)
        if len(gran) > 1:
            raise OAIError("badArgument", "from and until granularities differ")
        if from_ts is not None and until_ts is not None and from_ts > until_ts:
            raise OAIError("badArgument", "from is later than until")
        watermark = int(self.clock())
        return prefix, args.get("set"), from_ts, until_ts, None, watermark

    def _eligible(self, record, prefix, privileged):
        if record.admin.status == "deleted":
            return True
        if prefix in (OAI_DC_FORMAT, QDC_FORMAT):
            return True
        payload = record.get_native(prefix)
        if payload is None:
            return False
        return privileged or not payload.privileged

    def _list(self, args, privileged, verb, render):
        prefix, set_spec, from_ts, until_ts, cursor, watermark = self._listing_args(
            args, verb
        )
        matches = [
            r
            for r in self.repo.listing(set_spec, from_ts, until_ts, watermark)
            if self._eligible(r, prefix, privileged)
        ]
        if not matches and cursor is None:
            raise OAIError("noRecordsMatch", "no records satisfy the request")
        if cursor is not None:
            matches = [
                r
                for r in matches
                if (r.admin.last_modified, str(r.handle)) > tuple(cursor)
            ]
        page = matches[: self.page_size]
        parts = [render(r) for r in page]
        if len(matches) > self.page_size:
            last = page[-1]
            token = self._make_token(
                verb,
                prefix,
                set_spec,
                from_ts,
                until_ts,
                (last.admin.last_modified, str(last.handle)),
                watermark,
            )
            parts.append("<resumptionToken>%s</resumptionToken>" % token)
        elif cursor is not None:
            # a paged list is closed with an empty token
            parts.append("<resumptionToken/>")
        return "".join(parts)

    def _do_listrecords(self, args, privileged):
        return self._list(
            args,
            privileged,
            "ListRecords",
            lambda r: self._render_record(
                r, self._current_prefix(args, "ListRecords"), privileged
            ),
        )

    def _do_listidentifiers(self, args, privileged):
        return self._list(args, privileged, "ListIdentifiers", self._render_header)

    def _current_prefix(self, args, verb):
        if "resumptionToken" in args:
            return self._read_token(args["resumptionToken"], verb)["p"]
        return args["metadataPrefix"]
