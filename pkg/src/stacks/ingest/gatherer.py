"""Bounded web gatherer for open-access collections.

Breadth-first from the seeds, never leaving the configured host-prefix
scope, stopping at the page cap. One request at a time per host with a
politeness delay enforced between requests to the same host; robots
exclusion files are honored. The fetch log records every request
timestamp so the politeness floor is checkable from the outside.
"""

from __future__ import annotations

import time
from collections import deque
from urllib.parse import urlsplit
from urllib.robotparser import RobotFileParser

import requests

from ..errors import ValidationFailure
from ..htmltext import extract_links


class Gatherer:
    def __init__(
        self,
        scope,
        page_cap,
        politeness_delay=0.5,
        user_agent="stacks-gatherer/0.1",
        session=None,
        timeout=15,
        respect_robots=True,
    ):
        if page_cap <= 0:
            raise ValidationFailure("page cap must be positive")
        self.scope = [s for s in scope if s]
        if not self.scope:
            raise ValidationFailure("gatherer scope must list at least one URL prefix")
        self.page_cap = page_cap
        self.delay = politeness_delay
        self.user_agent = user_agent
        self.session = session or requests.Session()
        self.timeout = timeout
        self.respect_robots = respect_robots
        self.request_log = []  # (monotonic ts, url) per fetch, robots included
        self._last_request = {}  # host -> monotonic ts
        self._robots = {}

    def in_scope(self, url):
        return any(url.startswith(prefix) for prefix in self.scope)

    def _polite_wait(self, host):
        last = self._last_request.get(host)
        if last is not None:
            wait = last + self.delay - time.monotonic()
            if wait > 0:
                time.sleep(wait)

    def _fetch(self, url):
        host = urlsplit(url).netloc
        self._polite_wait(host)
        self._last_request[host] = time.monotonic()
        self.request_log.append((self._last_request[host], url))
        return self.session.get(
            url, timeout=self.timeout, headers={"User-Agent": self.user_agent}
        )

    def _allowed(self, url):
        if not self.respect_robots:
            return True
        parts = urlsplit(url)
        base = "%s://%s" % (parts.scheme, parts.netloc)
        parser = self._robots.get(base)
        if parser is None:
            parser = RobotFileParser()
            try:
                resp = self._fetch(base + "/robots.txt")
                if resp.status_code == 200:
                    parser.parse(resp.text.splitlines())
                else:
                    parser.allow_all = True
            except requests.RequestException:
                parser.allow_all = True
            self._robots[base] = parser
        return parser.can_fetch(self.user_agent, url)

    def crawl(self, seeds):
        """Returns (pages, findings): pages as (url, content_type, body)
        for each fetched HTML document."""
        for seed in seeds:
            if not self.in_scope(seed):
                raise ValidationFailure("seed %r is outside the gather scope" % seed)
        queue = deque(seeds)
        visited = set(seeds)
        pages = []
        findings = []
        while queue and len(pages) < self.page_cap:
            url = queue.popleft()
            if not self._allowed(url):
                findings.append((url, "warn", "disallowed by robots exclusion"))
                continue
            try:
                resp = self._fetch(url)
            except requests.RequestException as exc:
                findings.append((url, "warn", "fetch failed: %s" % exc))
                continue
            if resp.status_code != 200:
                findings.append((url, "warn", "HTTP %d" % resp.status_code))
                continue
            content_type = resp.headers.get("Content-Type", "").split(";")[0].strip()
            if content_type not in ("text/html", "application/xhtml+xml"):
                findings.append(
                    (url, "warn", "skipped non-HTML content type %r" % content_type)
                )
                continue
            pages.append((url, content_type, resp.content))
            for link in extract_links(resp.content, url):
                if link not in visited and self.in_scope(link):
                    visited.add(link)
                    queue.append(link)
        return pages, findings
