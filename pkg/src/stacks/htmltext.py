"""HTML scraping helpers shared by the gatherer and the content fetcher:
title/meta extraction, link harvesting, and tag stripping for indexing."""

from __future__ import annotations

import re
from html import unescape
from html.parser import HTMLParser
from urllib.parse import urldefrag, urljoin

_SKIP_CONTENT = {"script", "style"}


class PageParser(HTMLParser):
    """Single pass over a page: title text, meta description, anchor
    targets, and the visible text."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.title_parts = []
        self.description = ""
        self.hrefs = []
        self.text_parts = []
        self._stack = []

    def handle_starttag(self, tag, attrs):
        self._stack.append(tag)
        attrs = dict(attrs)
        if tag == "meta":
            self._stack.pop()  # void element
            if attrs.get("name", "").lower() == "description":
                self.description = (attrs.get("content") or "").strip()
        elif tag == "a" and attrs.get("href"):
            self.hrefs.append(attrs["href"])
        elif tag in ("br", "img", "hr", "input", "link"):
            self._stack.pop()

    def handle_endtag(self, tag):
        while self._stack and self._stack.pop() != tag:
            pass

    def handle_data(self, data):
        if "title" in self._stack:
            self.title_parts.append(data)
        if not any(t in _SKIP_CONTENT for t in self._stack):
            self.text_parts.append(data)

    @property
    def title(self):
        return re.sub(r"\s+", " ", "".join(self.title_parts)).strip()


def parse_page(html):
    if isinstance(html, bytes):
        html = html.decode("utf-8", "replace")
    parser = PageParser()
    parser.feed(html)
    return parser


def strip_tags(html):
    """Visible text of a page, whitespace-collapsed."""
    parser = parse_page(html)
    return re.sub(r"\s+", " ", unescape("".join(parser.text_parts))).strip()


def extract_links(html, base_url):
    """Absolute, fragment-free link targets in document order."""
    parser = parse_page(html)
    seen = set()
    out = []
    for href in parser.hrefs:
        absolute = urldefrag(urljoin(base_url, href))[0]
        if absolute.startswith(("http://", "https://")) and absolute not in seen:
            seen.add(absolute)
            out.append(absolute)
    return out
