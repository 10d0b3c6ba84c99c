"""Scoring and restriction evaluation against a snapshot.

The ranking contract (documented here, re-implemented independently by
the test oracle): BM25 with k1/b over a boosted virtual document whose
term frequency is the field-boost-weighted sum of per-field counts,
idf(t) = ln(1 + (N - df + 0.5)/(df + 0.5)), required/excluded terms as
membership constraints, multiplicative recency preference, zero-score
docs omitted when ranked terms exist, ties broken by handle order.

Restrictions decide membership only. Every predicate evaluates against
the indexed field values; range operators compare date keys when the
value looks like a date, else numbers, else casefolded text.
"""

from __future__ import annotations

import math

from .index import date_key


def predicate_holds(doc, restriction):
    fieldname, op, value = restriction.field, restriction.op, restriction.value
    if fieldname == "collection":
        wanted = value if isinstance(value, frozenset) else frozenset([str(value)])
        return any(c in wanted for c in doc.collections)
    if fieldname == "kind":
        if op == "=":
            return doc.kind == str(value)
        if op == "!=":
            return doc.kind != str(value)
        return False
    if fieldname == "annotations":
        want = str(value).casefold() in ("true", "1", "yes")
        return doc.has_annotations == want
    values = doc.field_values(fieldname)
    folded = [v.casefold() for v in values]
    target = str(value).casefold()
    if op == "=":
        return target in folded
    if op == "!=":
        return target not in folded
    if op == "~":
        return any(target in v for v in folded)
    want_key = date_key(str(value))
    for v in values:
        if want_key is not None:
            have = date_key(v)
            if have is None:
                continue
            a, b = have, want_key
        else:
            try:
                a, b = float(v), float(value)
            except ValueError:
                a, b = v.casefold(), target
        if (
            (op == ">" and a > b)
            or (op == ">=" and a >= b)
            or (op == "<" and a < b)
            or (op == "<=" and a <= b)
        ):
            return True
    return False


def satisfies_all(doc, restrictions):
    return all(predicate_holds(doc, r) for r in restrictions)


def score_candidates(snapshot, candidates, terms, prefer, k1, b, recency_weight):
    """Returns (handle, score) sorted by (-score, handle)."""
    if not terms:
        return [(doc.handle, 0.0) for doc in sorted(candidates, key=lambda d: d.handle)]
    n = snapshot.n_docs
    if n == 0:
        return []
    avgdl = snapshot.avgdl
    scored = []
    for doc in sorted(candidates, key=lambda d: d.handle):
        handle = doc.handle
        score = 0.0
        rejected = False
        for term in terms:
            frequency = snapshot.tf(handle, term.term, term.scope)
            if term.mode == "not":
                if frequency > 0:
                    rejected = True
                    break
                continue
            if term.mode == "must" and frequency == 0:
                rejected = True
                break
            if frequency > 0:
                df = snapshot.df(term.term)
                idf = math.log(1 + (n - df + 0.5) / (df + 0.5))
                denom = frequency + k1 * (1 - b + b * snapshot.lengths[handle] / avgdl)
                score += idf * (frequency * (k1 + 1)) / denom
        if rejected or score <= 0.0:
            continue
        if "recent" in prefer:
            score *= 1.0 + recency_weight * snapshot.recency(doc)
        scored.append((handle, score))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return scored
