"""The three-part query expression.

Grammar (one line, whitespace separated):

    [field OP value]... [::] [ranked terms] [known:+h1,-h2]

Left of ``::`` are restriction clauses: they decide membership of the
result set and never its order. OP is one of = != ~ > >= < <=; values
with spaces are double-quoted; ``collection=h1,h2`` is set membership.
Right of ``::`` is the ranked expression deciding order only: bare terms
score optionally, ``+term`` is required, ``-term`` excludes, ``field:term``
scopes a term to one element, ``prefer:recent`` turns on the recency
boost, and the keywords AND / NOT promote or negate the following term
(OR is the default combination). A trailing ``known:`` token lists
previously retrieved handles flagged relevant (+) or not (-). Without
``::`` the whole expression is ranked terms. A query may leave either
side empty, but not both.

The parser is total over text input: anything unparseable raises
QueryError with a position, never a crash.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import QueryError

RESTRICTION_FIELDS = {
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
    "audience",
    "typicallearningtime",
    "collection",
    "annotations",
    "kind",
}

SCOPE_FIELDS = RESTRICTION_FIELDS - {"collection", "annotations", "kind"} | {"content"}

_CANONICAL = {f: f for f in RESTRICTION_FIELDS}
_CANONICAL["typicallearningtime"] = "typicalLearningTime"

_OPS = ("!=", ">=", "<=", "=", "~", ">", "<")


@dataclass(frozen=True)
class Restriction:
    field: str
    op: str
    value: object  # str, or frozenset for collection membership

    def render(self):
        value = self.value
        if isinstance(value, frozenset):
            value = ",".join(sorted(value))
        value = str(value)
        if " " in value or not value:
            value = '"%s"' % value
        return "%s%s%s" % (self.field, self.op, value)


@dataclass(frozen=True)
class RankedTerm:
    term: str
    scope: str | None = None  # element name, or None for all fields
    mode: str = "should"  # should | must | not

    def render(self):
        prefix = {"must": "+", "not": "-"}.get(self.mode, "")
        scope = "%s:" % self.scope if self.scope else ""
        return "%s%s%s" % (prefix, scope, self.term)


@dataclass
class Query:
    restrictions: list = field(default_factory=list)
    terms: list = field(default_factory=list)
    prefer: list = field(default_factory=list)
    known: list = field(default_factory=list)  # (handle str, relevant bool)

    def is_empty(self):
        return not self.restrictions and not self.terms


def _tokens_with_positions(text):
    """Split on whitespace outside double quotes; keeps quotes."""
    tokens = []
    i, n = 0, len(text)
    while i < n:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            break
        start = i
        quoted = False
        while i < n and (quoted or not text[i].isspace()):
            if text[i] == '"':
                quoted = not quoted
            i += 1
        if quoted:
            raise QueryError("unterminated quote", start)
        tokens.append((text[start:i], start))
    return tokens


def _unquote(value):
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return value.replace('"', "")


def _canonical_field(name, pos, allowed):
    folded = name.strip().casefold()
    if folded not in allowed:
        raise QueryError("unknown field %r" % name, pos)
    return _CANONICAL.get(folded, folded)


def _parse_restriction(token, pos):
    for op in _OPS:
        if op in token:
            name, value = token.split(op, 1)
            if not name:
                raise QueryError("restriction clause missing field name", pos)
            fieldname = _canonical_field(name, pos, RESTRICTION_FIELDS)
            value = _unquote(value)
            if not value:
                raise QueryError("restriction on %s has empty value" % fieldname, pos)
            if fieldname == "collection" and op == "=" and "," in value:
                return Restriction(
                    fieldname, op, frozenset(v for v in value.split(",") if v)
                )
            return Restriction(fieldname, op, value)
    raise QueryError("expected 'field OP value', got %r" % token, pos)


def _parse_known(token, pos):
    out = []
    for part in token[len("known:"):].split(","):
        part = part.strip()
        if not part:
            continue
        relevant = True
        if part[0] in "+-":
            relevant = part[0] == "+"
            part = part[1:]
        if "/" not in part:
            raise QueryError("known item %r is not a handle" % part, pos)
        out.append((part, relevant))
    if not out:
        raise QueryError("known: lists no handles", pos)
    return out


def parse_query(text):
    if not isinstance(text, str):
        raise QueryError("query must be text", 0)
    tokens = _tokens_with_positions(text)
    sep_indexes = [i for i, (tok, _) in enumerate(tokens) if tok == "::"]
    if len(sep_indexes) > 1:
        raise QueryError("more than one '::' separator", tokens[sep_indexes[1]][1])
    if sep_indexes:
        left = tokens[: sep_indexes[0]]
        right = tokens[sep_indexes[0] + 1 :]
    else:
        left, right = [], tokens

    query = Query()
    for token, pos in left:
        query.restrictions.append(_parse_restriction(token, pos))

    next_mode = "should"
    for token, pos in right:
        upper = token.upper()
        if upper in ("AND", "OR", "NOT"):
            if upper == "AND":
                next_mode = "must"
                if query.terms and query.terms[-1].mode == "should":
                    last = query.terms[-1]
                    query.terms[-1] = RankedTerm(last.term, last.scope, "must")
            elif upper == "NOT":
                next_mode = "not"
            continue
        if token.startswith("known:"):
            query.known.extend(_parse_known(token, pos))
            continue
        if token.startswith("prefer:"):
            name = token[len("prefer:"):].casefold()
            if name != "recent":
                raise QueryError("unknown preference %r" % name, pos)
            query.prefer.append(name)
            continue
        mode = next_mode
        next_mode = "should"
        if token.startswith("+"):
            mode, token = "must", token[1:]
        elif token.startswith("-"):
            mode, token = "not", token[1:]
        if not token:
            raise QueryError("dangling +/- operator", pos)
        scope = None
        if ":" in token and not token.startswith('"'):
            head, rest = token.split(":", 1)
            if head.casefold() in SCOPE_FIELDS and rest:
                scope = _CANONICAL.get(head.casefold(), head.casefold())
                token = rest
        raw = _unquote(token)
        from .analysis import tokenize

        words = tokenize(raw)
        if not words:
            raise QueryError("term %r has no word characters" % raw, pos)
        for word in words:
            query.terms.append(RankedTerm(word, scope, mode))

    if query.is_empty():
        raise QueryError("empty query: give restrictions, terms, or both", 0)
    return query


def print_query(query):
    """Canonical text form; parse(print_query(parse(s))) is a fixpoint."""
    left = " ".join(r.render() for r in query.restrictions)
    right_parts = [t.render() for t in query.terms]
    right_parts.extend("prefer:%s" % p for p in query.prefer)
    if query.known:
        right_parts.append(
            "known:"
            + ",".join(
                ("%s%s" % ("+" if rel else "-", handle)) for handle, rel in query.known
            )
        )
    right = " ".join(right_parts)
    if left and right:
        return "%s :: %s" % (left, right)
    if left:
        return "%s ::" % left
    return ":: %s" % right if right else "::"
