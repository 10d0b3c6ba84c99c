"""Qualified Dublin Core record model.

The normalized vocabulary every catalog record is stored in: the fifteen
Dublin Core elements plus the education extensions (audience, typical
learning time). Elements are repeatable (qualifier, value) lists; the
qualifier vocabulary is the closed registry below.

Two XML serializations are produced: the full qualified form (wire
prefix ``nsdl_qdc``) and the unqualified projection (``oai_dc``), which
drops qualifiers and the education elements.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET

from .errors import ValidationFailure

# The fifteen core elements, in canonical order.
DC_ELEMENTS = (
    "title",
    "creator",
    "subject",
    "description",
    "publisher",
    "contributor",
    "date",
    "type",
    "format",
    "identifier",
    "source",
    "language",
    "relation",
    "coverage",
    "rights",
)

# Education extensions; kept out of the unqualified projection.
ED_ELEMENTS = ("audience", "typicalLearningTime")

ALL_ELEMENTS = DC_ELEMENTS + ED_ELEMENTS

# Closed qualifier registry. The empty qualifier (unqualified) is always
# permitted and is not listed.
QUALIFIERS = {
    "title": {"alternative"},
    "creator": set(),
    "subject": {"keyword", "lcsh", "ddc"},
    "description": {"abstract", "tableOfContents"},
    "publisher": set(),
    "contributor": set(),
    "date": {"created", "issued", "modified", "valid", "available"},
    "type": set(),
    "format": {"extent", "medium", "mimetype"},
    "identifier": {"uri", "url"},
    "source": set(),
    "language": set(),
    "relation": {
        "isPartOf",
        "hasPart",
        "isVersionOf",
        "hasVersion",
        "isFormatOf",
        "hasFormat",
        "references",
        "isReferencedBy",
        "requires",
        "isRequiredBy",
        "replaces",
        "isReplacedBy",
    },
    "coverage": {"spatial", "temporal"},
    "rights": {"license", "accessRights"},
    "audience": {"grade", "role"},
    "typicalLearningTime": set(),
}

_CANONICAL = {name.lower(): name for name in ALL_ELEMENTS}

QDC_NS = "http://ns.stacks.local/qdc/"
DC_NS = "http://purl.org/dc/elements/1.1/"
OAI_DC_NS = "http://www.openarchives.org/OAI/2.0/oai_dc/"

_CONTROL_CHARS = re.compile(r"[\x00-\x08\x0b\x0c\x0e-\x1f]")


def canonical_element(name):
    """Resolve an element name case-insensitively, or return None."""
    return _CANONICAL.get(name.strip().lower())


def xml_escape(text):
    return (
        text.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


class QdcRecord:
    """A qualified Dublin Core description.

    Stored as element -> list of (qualifier, value) pairs. Order within
    an element is insertion order; element order is canonical, which
    makes the JSON and XML serializations deterministic.
    """

    def __init__(self, elements=None):
        self._elements = {}
        if elements:
            for name, entries in elements.items():
                for qualifier, value in entries:
                    self.add(name, value, qualifier)

    def add(self, element, value, qualifier=""):
        name = canonical_element(element)
        if name is None:
            raise ValidationFailure(
                "unknown element %r" % element,
                [(element, "fail", "not a registered element")],
            )
        qualifier = qualifier or ""
        if qualifier and qualifier not in QUALIFIERS[name]:
            raise ValidationFailure(
                "unknown qualifier %r on %s" % (qualifier, name),
                [(name, "fail", "qualifier %r is not registered" % qualifier)],
            )
        value = _CONTROL_CHARS.sub("", str(value))
        self._elements.setdefault(name, []).append((qualifier, value))
        return self

    def values(self, element, qualifier=None):
        name = canonical_element(element)
        entries = self._elements.get(name, [])
        if qualifier is None:
            return [v for _, v in entries]
        return [v for q, v in entries if q == qualifier]

    def first(self, element, default=""):
        vals = self.values(element)
        return vals[0] if vals else default

    def entries(self, element):
        name = canonical_element(element)
        return list(self._elements.get(name, []))

    def elements(self):
        """Element names present, in canonical order."""
        return [e for e in ALL_ELEMENTS if self._elements.get(e)]

    def is_empty(self):
        return not any(self._elements.values())

    def only_identifier(self):
        """True when the record carries nothing beyond identifier values."""
        present = self.elements()
        return present == ["identifier"]

    # -- validation ----------------------------------------------------

    def findings(self, kind):
        """Invariant check for a record of the given kind.

        Returns (field, severity, message) triples; empty means valid.
        """
        out = []
        if kind == "item":
            if not any(v.strip() for v in self.values("identifier")):
                out.append(("identifier", "fail", "item records require an identifier"))
        elif kind == "collection":
            if not any(v.strip() for v in self.values("title")):
                out.append(("title", "fail", "collection records require a title"))
            if not any(v.strip() for v in self.values("description")):
                out.append(
                    ("description", "fail", "collection records require a description")
                )
        return out

    def require_valid(self, kind):
        problems = self.findings(kind)
        if problems:
            raise ValidationFailure(
                "invalid %s record: %s" % (kind, "; ".join(f[0] for f in problems)),
                problems,
            )
        return self

    # -- serializations ------------------------------------------------

    def to_dict(self):
        return {
            name: [[q, v] for q, v in self._elements[name]]
            for name in ALL_ELEMENTS
            if self._elements.get(name)
        }

    @classmethod
    def from_dict(cls, data):
        rec = cls()
        for name, entries in data.items():
            for qualifier, value in entries:
                rec.add(name, value, qualifier)
        return rec

    def canonical_json(self):
        """Deterministic byte serialization used for hashing and fixtures."""
        return json.dumps(
            self.to_dict(), ensure_ascii=False, separators=(",", ":")
        ).encode("utf-8")

    def to_qdc_xml(self):
        """Full qualified form."""
        parts = [
            '<qdc:record xmlns:qdc="%s" xmlns:dc="%s">' % (QDC_NS, DC_NS)
        ]
        for name in ALL_ELEMENTS:
            for qualifier, value in self._elements.get(name, []):
                attr = ' qualifier="%s"' % xml_escape(qualifier) if qualifier else ""
                parts.append(
                    "<dc:%s%s>%s</dc:%s>" % (name, attr, xml_escape(value), name)
                )
        parts.append("</qdc:record>")
        return "".join(parts)

    def to_oai_dc_xml(self):
        """Unqualified projection: qualifiers dropped, education elements
        omitted entirely."""
        parts = [
            '<oai_dc:dc xmlns:oai_dc="%s" xmlns:dc="%s">' % (OAI_DC_NS, DC_NS)
        ]
        for name in DC_ELEMENTS:
            for _qualifier, value in self._elements.get(name, []):
                parts.append("<dc:%s>%s</dc:%s>" % (name, xml_escape(value), name))
        parts.append("</oai_dc:dc>")
        return "".join(parts)

    def copy(self):
        return QdcRecord.from_dict(self.to_dict())

    def __eq__(self, other):
        return isinstance(other, QdcRecord) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return "QdcRecord(%s)" % ", ".join(
            "%s=%r" % (e, self.values(e)) for e in self.elements()
        )


def _local_name(tag):
    return tag.rsplit("}", 1)[-1]


def parse_qdc_xml(payload):
    """Parse the qualified XML form back into a QdcRecord.

    Accepts both the qualified serialization and plain oai_dc payloads;
    unknown child elements fail validation.
    """
    if isinstance(payload, bytes):
        payload = payload.decode("utf-8")
    try:
        root = ET.fromstring(payload)
    except ET.ParseError as exc:
        raise ValidationFailure(
            "malformed record XML: %s" % exc, [("", "fail", str(exc))]
        )
    rec = QdcRecord()
    for child in root:
        name = canonical_element(_local_name(child.tag))
        if name is None:
            raise ValidationFailure(
                "unknown element %r" % _local_name(child.tag),
                [(_local_name(child.tag), "fail", "not a registered element")],
            )
        qualifier = child.get("qualifier", "")
        rec.add(name, (child.text or "").strip(), qualifier)
    return rec
