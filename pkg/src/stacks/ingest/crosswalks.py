"""Crosswalks from native metadata formats to qualified Dublin Core.

Most crosswalks are data-driven: a spec file maps source paths (XML
paths or row columns) to target element/qualifier, with constant, split,
and concatenation rules. Two are code-backed because no field map can
express them: the identity walk for already-normalized records, and the
heuristic extraction for gathered web pages.

Conversion is deterministic: the same native bytes always produce the
same QdcRecord bytes. The shipped spec files live in the repository's
``crosswalks/`` directory and double as the documented format for adding
new native formats.
"""

from __future__ import annotations

import json
import os
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CrosswalkError, UnsupportedFormat, ValidationFailure
from ..htmltext import parse_page
from ..qdc import QdcRecord, canonical_element, parse_qdc_xml
from .normalize import Normalizer

QDC_FORMAT = "nsdl_qdc"
GATHERED_FORMAT = "gathered_html"


@dataclass
class NativeRecord:
    """One inbound record in a registered native format."""

    format_id: str
    payload: bytes
    source_identifier: str = ""
    collection: object = None
    attrs: dict = field(default_factory=dict)  # transport hints (content type)


@dataclass
class ValidationReport:
    findings: list = field(default_factory=list)  # (field, severity, message)

    @property
    def status(self):
        severities = {f[1] for f in self.findings}
        if "fail" in severities:
            return "fail"
        if "warn" in severities:
            return "warn"
        return "ok"

    def extend(self, findings):
        self.findings.extend(findings)

    def to_dict(self):
        return {"status": self.status, "findings": [list(f) for f in self.findings]}


def _strip_namespaces(root):
    for el in root.iter():
        if "}" in el.tag:
            el.tag = el.tag.rsplit("}", 1)[-1]
    return root


class SpecCrosswalk:
    """Field-map crosswalk driven by a spec dictionary.

    source_kind "xml" reads slash paths against the (namespace-stripped)
    payload tree; "row" reads column names from a JSON object payload.
    Rule forms: {source}, {source, split}, {join: [paths], separator},
    {const}. Every rule targets a registered element/qualifier.
    """

    def __init__(self, spec, normalizer=None):
        self.format_id = spec["format_id"]
        self.source_kind = spec.get("source_kind", "xml")
        self.root = spec.get("root")
        self.required = list(spec.get("required", []))
        self.rules = list(spec.get("rules", []))
        self.normalizer = normalizer or Normalizer()
        for rule in self.rules:
            element = canonical_element(rule.get("element", ""))
            if element is None:
                raise ValidationFailure(
                    "crosswalk %s rule targets unknown element %r"
                    % (self.format_id, rule.get("element"))
                )
            qualifier = rule.get("qualifier", "")
            probe = QdcRecord()
            probe.add(element, "x", qualifier)  # raises on unregistered qualifier

    # -- source field extraction ----------------------------------------

    def _fields(self, native):
        """Map of source path -> list of raw values, plus parse findings."""
        if self.source_kind == "row":
            try:
                row = json.loads(native.payload.decode("utf-8"))
            except (ValueError, UnicodeDecodeError) as exc:
                return None, [("", "fail", "unreadable row payload: %s" % exc)]
            return (
                {
                    k: [str(v).strip()]
                    for k, v in row.items()
                    if v is not None and str(v).strip()
                },
                [],
            )
        try:
            root = _strip_namespaces(ET.fromstring(native.payload))
        except ET.ParseError as exc:
            return None, [("", "fail", "malformed XML: %s" % exc)]
        if self.root and root.tag != self.root:
            return None, [
                ("", "fail", "expected root <%s>, found <%s>" % (self.root, root.tag))
            ]
        fields = {}
        paths = {r["source"] for r in self.rules if r.get("source")}
        paths.update(self.required)
        for rule in self.rules:
            paths.update(rule.get("join", []))
        for path in paths:
            values = []
            matches = [root] if path == "." else root.findall(path)
            for el in matches:
                text = "".join(el.itertext()).strip()
                if text:
                    values.append(text)
            if values:
                fields[path] = values
        return fields, []

    # -- mapping ---------------------------------------------------------

    def _map(self, native):
        """Returns (QdcRecord or None, findings)."""
        fields, findings = self._fields(native)
        if fields is None:
            return None, findings
        for path in self.required:
            if not fields.get(path):
                findings.append(
                    (path, "fail", "required source field %r is missing" % path)
                )
        qdc = QdcRecord()
        for rule in self.rules:
            element = canonical_element(rule["element"])
            qualifier = rule.get("qualifier", "")
            values = []
            if "const" in rule:
                values = [rule["const"]]
            elif "join" in rule:
                parts = [fields[p][0] for p in rule["join"] if fields.get(p)]
                if parts:
                    values = [rule.get("separator", " ").join(parts)]
            else:
                values = list(fields.get(rule["source"], []))
                if rule.get("split"):
                    split = []
                    for v in values:
                        split.extend(
                            p.strip() for p in v.split(rule["split"]) if p.strip()
                        )
                    values = split
            for value in values:
                value, norm_findings = self.normalizer.normalize(element, value)
                findings.extend(norm_findings)
                qdc.add(element, value, qualifier)
        return qdc, findings

    def validate(self, native):
        report = ValidationReport()
        qdc, findings = self._map(native)
        report.extend(findings)
        if qdc is not None:
            report.extend(qdc.findings("item"))
        return report

    def convert(self, native):
        qdc, findings = self._map(native)
        failures = [f for f in findings if f[1] == "fail"]
        if qdc is None or failures:
            raise CrosswalkError(
                "crosswalk %s failed on %s"
                % (self.format_id, "; ".join("%s: %s" % (f[0], f[2]) for f in failures))
            )
        return qdc


class IdentityCrosswalk:
    """Already-normalized records pass through byte-identically; only
    structural parsing and the record invariants are checked."""

    format_id = QDC_FORMAT

    def validate(self, native):
        report = ValidationReport()
        try:
            qdc = parse_qdc_xml(native.payload)
        except ValidationFailure as exc:
            report.extend(exc.findings or [("", "fail", str(exc))])
            return report
        report.extend(qdc.findings("item"))
        return report

    def convert(self, native):
        return parse_qdc_xml(native.payload)


class GatheredPageCrosswalk:
    """Heuristic description of a fetched web page: title element to
    title (falling back to the URL), meta description to description,
    the URL to identifier, the content type to format."""

    format_id = GATHERED_FORMAT

    def _build(self, native):
        findings = []
        if not native.source_identifier:
            findings.append(("identifier", "fail", "gathered pages require a URL"))
            return None, findings
        page = parse_page(native.payload)
        qdc = QdcRecord()
        title = page.title
        if not title:
            title = native.source_identifier
            findings.append(
                ("title", "warn", "page has no title element; used the URL")
            )
        qdc.add("title", title)
        if page.description:
            qdc.add("description", page.description)
        qdc.add("identifier", native.source_identifier, "url")
        content_type = native.attrs.get("content_type", "text/html")
        qdc.add("format", content_type.split(";")[0].strip(), "mimetype")
        qdc.add("type", "Text")
        return qdc, findings

    def validate(self, native):
        report = ValidationReport()
        qdc, findings = self._build(native)
        report.extend(findings)
        if qdc is not None:
            report.extend(qdc.findings("item"))
        return report

    def convert(self, native):
        qdc, findings = self._build(native)
        if qdc is None or any(f[1] == "fail" for f in findings):
            raise CrosswalkError("cannot describe page %r" % native.source_identifier)
        return qdc


class CrosswalkRegistry:
    def __init__(self, normalizer=None):
        self.normalizer = normalizer or Normalizer()
        self._walks = {}
        self.register(IdentityCrosswalk())
        self.register(GatheredPageCrosswalk())

    def register(self, crosswalk):
        self._walks[crosswalk.format_id] = crosswalk

    def register_spec(self, spec):
        self.register(SpecCrosswalk(spec, self.normalizer))

    def get(self, format_id):
        walk = self._walks.get(format_id)
        if walk is None:
            raise UnsupportedFormat("no crosswalk registered for %r" % format_id)
        return walk

    def formats(self):
        return sorted(self._walks)

    def __contains__(self, format_id):
        return format_id in self._walks

    @classmethod
    def load(cls, directory):
        """Build a registry from a crosswalk directory: normalize.json
        plus one spec file per data-driven format."""
        directory = Path(directory)
        rules = {}
        norm_path = directory / "normalize.json"
        if norm_path.exists():
            rules = json.loads(norm_path.read_text(encoding="utf-8"))
        registry = cls(Normalizer(rules))
        for path in sorted(directory.glob("*.json")):
            if path.name == "normalize.json":
                continue
            registry.register_spec(json.loads(path.read_text(encoding="utf-8")))
        return registry


def default_crosswalk_dir():
    """Locate the crosswalk directory: environment override, working
    directory, or the repository checkout the package lives in."""
    env = os.environ.get("STACKS_CROSSWALKS")
    if env:
        return Path(env)
    cwd = Path.cwd() / "crosswalks"
    if cwd.is_dir():
        return cwd
    checkout = Path(__file__).resolve().parents[3] / "crosswalks"
    if checkout.is_dir():
        return checkout
    raise ValidationFailure(
        "no crosswalks directory found; set STACKS_CROSSWALKS or run from a checkout"
    )
