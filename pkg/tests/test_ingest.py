import json

import pytest

from stacks.errors import ConfigError, Forbidden, Unavailable, ValidationFailure
from stacks.ingest import CrosswalkRegistry, IngestPipeline, default_crosswalk_dir
from stacks.qdc import QdcRecord
from stacks.repository import MetadataRepository
from stacks.services.mr_server import serve_repository

from .conftest import collection_qdc, item_qdc
from .sitefix import linked_site, serve_pages

REGISTRY = CrosswalkRegistry.load(default_crosswalk_dir())

COLUMN_MAP = {
    "title": "title",
    "url": "identifier.url",
    "subject": "subject",
    "description": "description",
    "date": "date",
    "id": "@source_id",
}


@pytest.fixture
def pipeline(repo, tmp_path):
    return IngestPipeline(repo, tmp_path / "porch", REGISTRY)


@pytest.fixture
def batch_collection(repo):
    return repo.register_collection(
        collection_qdc("Batch", "Batch-fed collection."),
        "administrative",
        ingest_config={"column_map": COLUMN_MAP},
    )


def tsv_bytes(rows, header=("id", "title", "url", "subject", "date")):
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(row))
    return "\n".join(lines).encode("utf-8")


def make_rows(n, date="1998-03-05"):
    return [
        ("r%d" % i, "Record %d" % i, "http://data.example/%d" % i, "physics", date)
        for i in range(n)
    ]


# -- batch ---------------------------------------------------------------


def test_batch_tsv_all_valid(pipeline, batch_collection, repo):
    result = pipeline.ingest_batch(tsv_bytes(make_rows(100)), "tsv", batch_collection)
    assert result.staged == 100
    assert result.committed == 100
    assert result.failed == []
    assert pipeline.staging.count(batch_collection) == 0
    items = [h for h in repo.all_handles() if "/I" in h]
    assert len(items) == 100


def test_batch_csv_with_two_bad_dates(pipeline, batch_collection):
    rows = make_rows(10)
    rows[3] = rows[3][:4] + ("not a date",)
    rows[7] = rows[7][:4] + ("someday",)
    csv_data = "\n".join(
        ["id,title,url,subject,date"]
        + ["%s,%s,%s,%s,%s" % r for r in rows]
    ).encode()
    result = pipeline.ingest_batch(csv_data, "csv", batch_collection)
    assert result.staged == 10
    assert result.committed == 8
    assert len(result.failed) == 2
    assert {s for s, _ in result.failed} == {"row:r3", "row:r7"}
    for _, report in result.failed:
        assert report["status"] == "fail"


def test_batch_empty_file(pipeline, batch_collection):
    result = pipeline.ingest_batch(b"id\ttitle\turl\tsubject\tdate", "tsv", batch_collection)
    assert (result.staged, result.committed) == (0, 0)


def test_batch_missing_column_map_is_config_error(pipeline, repo):
    bare = repo.register_collection(collection_qdc("Bare", "No config."), "semantic")
    with pytest.raises(ConfigError):
        pipeline.ingest_batch(b"title\nX", "csv", bare)


def test_batch_unreadable_xml_is_io_error(pipeline, batch_collection):
    with pytest.raises(ValidationFailure):
        pipeline.ingest_batch(b"<batch format='oai_dc'><record>", "xml", batch_collection)


def test_batch_xml_container(pipeline, batch_collection, repo):
    body = (
        b'<batch format="oai_dc">'
        b'<record id="a"><dc><title>One</title><identifier>http://x/1</identifier></dc></record>'
        b'<record id="b"><dc><title>Two</title><identifier>http://x/2</identifier></dc></record>'
        b"</batch>"
    )
    result = pipeline.ingest_batch(body, "xml", batch_collection)
    assert result.committed == 2
    titles = {repo.record(_handle(h)).qdc.first("title") for h in result.handles}
    assert titles == {"One", "Two"}


def test_idempotent_reingest_changes_no_datestamps(pipeline, batch_collection, repo):
    data = tsv_bytes(make_rows(20))
    first = pipeline.ingest_batch(data, "tsv", batch_collection)
    stamps = {
        h: repo.record(_handle(h)).admin.last_modified for h in first.handles
    }
    second = pipeline.ingest_batch(data, "tsv", batch_collection)
    assert second.committed == 20  # all commit as no-ops
    assert second.failed == []
    for h, stamp in stamps.items():
        assert repo.record(_handle(h)).admin.last_modified == stamp


def test_changed_row_updates_same_handle(pipeline, batch_collection, repo, clock):
    first = pipeline.ingest_batch(tsv_bytes(make_rows(5)), "tsv", batch_collection)
    clock.tick()
    rows = make_rows(5)
    rows[2] = ("r2", "Record 2 revised", "http://data.example/2", "physics", "1998-03-05")
    second = pipeline.ingest_batch(tsv_bytes(rows), "tsv", batch_collection)
    assert sorted(second.handles) == sorted(first.handles)  # source keying
    handle = _handle(first.handles[2])
    assert repo.record(handle).qdc.first("title") == "Record 2 revised"


def _handle(text):
    from stacks.repository import Handle

    return Handle.parse(text)


def test_source_keying_one_handle_per_source(pipeline, batch_collection, repo):
    data = tsv_bytes(make_rows(8))
    for _ in range(3):
        pipeline.ingest_batch(data, "tsv", batch_collection)
    items = [h for h in repo.all_handles() if "/I" in h]
    assert len(items) == 8


def test_staging_survives_restart(repo, tmp_path, batch_collection):
    p1 = IngestPipeline(repo, tmp_path / "porch", REGISTRY)
    result = p1.ingest_batch(
        tsv_bytes(make_rows(4)), "tsv", batch_collection, commit=False
    )
    assert result.staged == 4 and result.committed == 0
    assert p1.staging.count(batch_collection) == 4

    p2 = IngestPipeline(repo, tmp_path / "porch", REGISTRY)
    outcome = p2.commit_staged(batch_collection)
    assert outcome.committed == 4
    assert p2.staging.count(batch_collection) == 0


class FlakyRepo:
    """Delegates to a real repository but goes unavailable after N puts."""

    def __init__(self, repo, allow):
        self._repo = repo
        self._allow = allow

    def __getattr__(self, name):
        return getattr(self._repo, name)

    def put_record(self, *args, **kwargs):
        if self._allow <= 0:
            raise Unavailable("repository is down")
        self._allow -= 1
        return self._repo.put_record(*args, **kwargs)


def test_commit_fault_injection_is_retry_safe(repo, tmp_path, batch_collection):
    flaky = FlakyRepo(repo, allow=4)
    p = IngestPipeline(flaky, tmp_path / "porch", REGISTRY)
    result = p.ingest_batch(tsv_bytes(make_rows(10)), "tsv", batch_collection)
    assert result.committed == 4
    assert result.error
    assert p.staging.count(batch_collection) == 6

    steady = IngestPipeline(repo, tmp_path / "porch", REGISTRY)
    outcome = steady.commit_staged(batch_collection)
    assert outcome.committed == 6
    assert steady.staging.count(batch_collection) == 0
    items = [h for h in repo.all_handles() if "/I" in h]
    assert len(items) == 10


def test_commit_on_empty_staging(pipeline, batch_collection):
    outcome = pipeline.commit_staged(batch_collection)
    assert outcome.committed == 0


def test_no_fail_record_ever_reaches_repository(pipeline, batch_collection, repo):
    import random

    rng = random.Random(7)
    rows = []
    corrupted = set()
    for i in range(60):
        row = ["r%d" % i, "Title %d" % i, "http://d/%d" % i, "s", "2001-05-09"]
        if rng.random() < 0.3:
            corrupted.add("r%d" % i)
            if rng.random() < 0.5:
                row[4] = "CORRUPT-DATE"
            else:
                row[1] = ""  # drop required title
        rows.append(tuple(row))
    result = pipeline.ingest_batch(tsv_bytes(rows), "tsv", batch_collection)
    assert {s.split(":")[1] for s, _ in result.failed} == corrupted
    for h in repo.all_handles():
        rec = repo.record(_handle(h))
        if rec.kind != "item":
            continue
        assert rec.qdc.first("title")
        assert "CORRUPT" not in rec.qdc.first("date", "")


# -- direct entry ---------------------------------------------------------


@pytest.fixture
def edited_collection(repo):
    return repo.register_collection(
        collection_qdc("Edited", "Direct entry collection."),
        "semantic",
        authority_list=["editor@example.org"],
    )


def test_direct_entry_authorized(pipeline, edited_collection, repo):
    handle = pipeline.direct_entry(
        item_qdc("Hand-made", "http://x/hand"), edited_collection, "editor@example.org"
    )
    assert repo.record(handle).qdc.first("title") == "Hand-made"
    assert repo.record(handle).admin.source == "ingest:nsdl_qdc"


def test_direct_entry_unauthorized(pipeline, edited_collection):
    with pytest.raises(Forbidden):
        pipeline.direct_entry(
            item_qdc(), edited_collection, "stranger@example.org"
        )


def test_direct_entry_invalid_qdc(pipeline, edited_collection):
    with pytest.raises(ValidationFailure):
        pipeline.direct_entry(
            QdcRecord().add("title", "no identifier"),
            edited_collection,
            "editor@example.org",
        )


def test_direct_entry_edit_bumps_datestamp_and_replaces(
    pipeline, edited_collection, repo, clock
):
    h1 = pipeline.direct_entry(
        item_qdc("V1", "http://x/same"), edited_collection, "editor@example.org"
    )
    before = repo.record(h1).admin.last_modified
    clock.tick(2)
    h2 = pipeline.direct_entry(
        item_qdc("V2", "http://x/same"), edited_collection, "editor@example.org"
    )
    assert h1 == h2
    assert repo.record(h1).qdc.first("title") == "V2"
    assert repo.record(h1).admin.last_modified > before
    history = repo.audit_history(h1)
    assert len([e for e in history if e["op"] == "put"]) == 2


# -- harvest ingest ---------------------------------------------------------


@pytest.fixture
def upstream_provider(clock):
    upstream = MetadataRepository(clock=clock)
    coll = upstream.register_collection(
        collection_qdc("Upstream", "Fifty records."), "semantic"
    )
    handles = []
    for i in range(50):
        handles.append(
            upstream.put_record(
                "item",
                item_qdc("Upstream %d" % i, "http://up.example/%d" % i),
                collection=coll,
            )
        )
    server = serve_repository(upstream, page_size=20, clock=clock)
    yield upstream, coll, handles, server.url + "/oai"
    server.shutdown()


@pytest.fixture
def oai_collection(repo):
    return repo.register_collection(
        collection_qdc("Mirrored", "Harvested from upstream."), "administrative"
    )


def test_first_harvest_commits_fifty(pipeline, oai_collection, upstream_provider, repo):
    _, coll, _, url = upstream_provider
    result = pipeline.ingest_from_oai(url, "oai_dc", oai_collection, set_spec=str(coll))
    assert result.committed == 50
    assert result.failed == []


def test_second_harvest_with_watermark_commits_zero(
    pipeline, oai_collection, upstream_provider, clock
):
    _, coll, _, url = upstream_provider
    pipeline.ingest_from_oai(url, "oai_dc", oai_collection, set_spec=str(coll))
    clock.tick(5)
    result = pipeline.ingest_from_oai(url, "oai_dc", oai_collection, set_spec=str(coll))
    assert (result.staged, result.committed, result.deleted) == (0, 0, 0)


def test_upstream_deletes_propagate_tombstones(
    pipeline, oai_collection, upstream_provider, repo, clock
):
    upstream, coll, handles, url = upstream_provider
    pipeline.ingest_from_oai(url, "oai_dc", oai_collection, set_spec=str(coll))
    keys_before = pipeline.keys.load(str(oai_collection))

    clock.tick(3)
    for h in handles[:3]:
        upstream.delete_record(h)
    result = pipeline.ingest_from_oai(url, "oai_dc", oai_collection, set_spec=str(coll))
    assert result.deleted == 3
    tombstones = [
        h
        for h in repo.all_handles()
        if repo.record(_handle(h)).admin.status == "deleted"
    ]
    assert len(tombstones) == 3
    keys_after = pipeline.keys.load(str(oai_collection))
    assert len(keys_before) - len(keys_after) == 3


def test_reharvest_updates_rather_than_duplicates(
    pipeline, oai_collection, upstream_provider, repo, clock
):
    upstream, coll, handles, url = upstream_provider
    first = pipeline.ingest_from_oai(url, "oai_dc", oai_collection, set_spec=str(coll))
    clock.tick(2)
    upstream.put_record(
        "item", item_qdc("Upstream 0 revised", "http://up.example/0"), prior_handle=handles[0]
    )
    second = pipeline.ingest_from_oai(url, "oai_dc", oai_collection, set_spec=str(coll))
    assert second.committed == 1
    items = [h for h in repo.all_handles() if "/I" in h]
    assert len(items) == 50
    revised = [
        repo.record(_handle(h)).qdc.first("title")
        for h in items
        if "revised" in repo.record(_handle(h)).qdc.first("title")
    ]
    assert revised == ["Upstream 0 revised"]


def test_unregistered_prefix(pipeline, oai_collection):
    from stacks.errors import UnsupportedFormat

    with pytest.raises(UnsupportedFormat):
        pipeline.ingest_from_oai("http://nowhere/oai", "marc21", oai_collection)


# -- gathering ---------------------------------------------------------------


@pytest.fixture
def gather_pipeline(repo, tmp_path):
    return IngestPipeline(
        repo,
        tmp_path / "porch",
        REGISTRY,
        gather_defaults={"politeness_delay": 0.01},
    )


@pytest.fixture
def gather_collection(repo):
    return repo.register_collection(
        collection_qdc("Gathered", "Open-access pages."), "semantic"
    )


def test_gather_fixture_site(gather_pipeline, gather_collection, repo):
    server = serve_pages(linked_site(5))
    try:
        result = gather_pipeline.gather(
            [server.url + "/site/p0.html"],
            [server.url + "/site/"],
            page_cap=50,
            collection=gather_collection,
        )
    finally:
        server.shutdown()
    assert result.committed == 5
    titles = {
        repo.record(_handle(h)).qdc.first("title") for h in result.handles
    }
    assert titles == {"Page %d" % i for i in range(5)}


def test_gather_respects_page_cap(gather_pipeline, gather_collection):
    server = serve_pages(linked_site(30))
    try:
        result = gather_pipeline.gather(
            [server.url + "/site/p0.html"],
            [server.url + "/site/"],
            page_cap=7,
            collection=gather_collection,
        )
    finally:
        server.shutdown()
    assert result.committed == 7


def test_gather_title_fallback_warns(gather_pipeline, gather_collection, repo):
    pages = {
        "/site/p0.html": (
            "text/html",
            '<html><body><a href="/site/bare.html">x</a></body></html>',
        ),
        "/site/bare.html": ("text/html", "<html><body>no title</body></html>"),
    }
    server = serve_pages(pages)
    try:
        result = gather_pipeline.gather(
            [server.url + "/site/p0.html"],
            [server.url + "/site/"],
            page_cap=10,
            collection=gather_collection,
        )
    finally:
        server.shutdown()
    assert result.committed == 2
    titles = {repo.record(_handle(h)).qdc.first("title") for h in result.handles}
    assert any(t.endswith("/site/p0.html") for t in titles)
    assert any(t.endswith("/site/bare.html") for t in titles)


def test_gather_seed_outside_scope_rejected(gather_pipeline, gather_collection):
    with pytest.raises(ValidationFailure):
        gather_pipeline.gather(
            ["http://elsewhere.example/page"],
            ["http://inside.example/"],
            page_cap=5,
            collection=gather_collection,
        )


def test_gather_robots_disallowed_skipped(gather_pipeline, gather_collection):
    pages = {
        "/robots.txt": ("text/plain", "User-agent: *\nDisallow: /site/private\n"),
        "/site/p0.html": (
            "text/html",
            '<html><head><title>open</title></head><body>'
            '<a href="/site/private.html">secret</a></body></html>',
        ),
        "/site/private.html": (
            "text/html",
            "<html><head><title>private</title></head><body>hidden</body></html>",
        ),
    }
    server = serve_pages(pages)
    try:
        result = gather_pipeline.gather(
            [server.url + "/site/p0.html"],
            [server.url + "/site/"],
            page_cap=10,
            collection=gather_collection,
        )
    finally:
        server.shutdown()
    assert result.committed == 1
    assert any("robots" in f[2] for f in result.findings)


def test_gather_politeness_floor(gather_pipeline, gather_collection):
    server = serve_pages(linked_site(4))
    delay = 0.05
    try:
        result = gather_pipeline.gather(
            [server.url + "/site/p0.html"],
            [server.url + "/site/"],
            page_cap=10,
            collection=gather_collection,
            politeness_delay=delay,
        )
    finally:
        server.shutdown()
    stamps = [ts for ts, _ in result.request_log]
    gaps = [b - a for a, b in zip(stamps, stamps[1:])]
    assert all(gap >= delay * 0.99 for gap in gaps)


def test_gather_non_html_skipped(gather_pipeline, gather_collection):
    pages = {
        "/site/p0.html": (
            "text/html",
            '<html><head><title>idx</title></head><body>'
            '<a href="/site/data.bin">blob</a></body></html>',
        ),
        "/site/data.bin": ("application/octet-stream", b"\x00\x01"),
    }
    server = serve_pages(pages)
    try:
        result = gather_pipeline.gather(
            [server.url + "/site/p0.html"],
            [server.url + "/site/"],
            page_cap=10,
            collection=gather_collection,
        )
    finally:
        server.shutdown()
    assert result.committed == 1
    assert any("non-HTML" in f[2] for f in result.findings)
