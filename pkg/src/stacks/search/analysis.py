"""Tokenization: casefolded ``\\w+`` runs, no stemming unless the config
flag turns on the (deliberately naive) suffix stripper. Determinism
matters more than recall here; the ranking oracle re-implements this
contract independently."""

import re

_WORD = re.compile(r"\w+")
_SUFFIXES = ("ing", "ed", "es", "s")


def tokenize(text, stemming=False):
    tokens = _WORD.findall(text.casefold())
    if stemming:
        tokens = [stem(t) for t in tokens]
    return tokens


def stem(token):
    for suffix in _SUFFIXES:
        if token.endswith(suffix) and len(token) - len(suffix) >= 3:
            return token[: -len(suffix)]
    return token
