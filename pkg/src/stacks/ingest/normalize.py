"""Value normalization applied during crosswalking.

The rules ship as a structured text file (``crosswalks/normalize.json``)
rather than code: whitespace collapsing, date rewriting to ISO 8601, and
case-folding of controlled-vocabulary terms. Every fix is reported as a
warn-level finding; a date that no rule can parse is a fail.
"""

from __future__ import annotations

import re
import time

_WS = re.compile(r"\s+")
_ISOISH = re.compile(r"^\d{4}(-\d{2}(-\d{2})?)?$")


class Normalizer:
    def __init__(self, rules=None):
        rules = rules or {}
        self.date_elements = set(rules.get("date_elements", ["date"]))
        self.date_formats = [tuple(f) for f in rules.get("date_formats", [])]
        self.vocabularies = {
            element: {term.casefold(): term for term in terms}
            for element, terms in rules.get("vocabularies", {}).items()
        }

    def normalize(self, element, value):
        """Returns (value, findings)."""
        findings = []
        collapsed = _WS.sub(" ", value).strip()
        if collapsed != value:
            findings.append((element, "warn", "collapsed whitespace"))
            value = collapsed

        vocab = self.vocabularies.get(element)
        if vocab:
            canonical = vocab.get(value.casefold())
            if canonical is not None and canonical != value:
                findings.append(
                    (element, "warn", "folded %r to vocabulary term %r" % (value, canonical))
                )
                value = canonical

        if element in self.date_elements and value:
            value, date_findings = self._normalize_date(element, value)
            findings.extend(date_findings)
        return value, findings

    def _normalize_date(self, element, value):
        if _ISOISH.match(value):
            return value, []
        for pattern, out in self.date_formats:
            try:
                parsed = time.strptime(value, pattern)
            except ValueError:
                continue
            normalized = time.strftime(out, parsed)
            return normalized, [
                (element, "warn", "normalized date %r to %r" % (value, normalized))
            ]
        return value, [(element, "fail", "unparseable date %r" % value)]
