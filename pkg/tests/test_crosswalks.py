import json
from pathlib import Path

import pytest

from stacks.errors import CrosswalkError, UnsupportedFormat, ValidationFailure
from stacks.ingest import CrosswalkRegistry, NativeRecord, default_crosswalk_dir
from stacks.ingest.normalize import Normalizer

FIXTURES = Path(__file__).parent / "fixtures" / "crosswalks"


@pytest.fixture(scope="module")
def registry():
    return CrosswalkRegistry.load(default_crosswalk_dir())


def fixture_native(format_id):
    inputs = {
        "nsdl_qdc": "nsdl_qdc.xml",
        "oai_dc": "oai_dc.xml",
        "edu_lom": "edu_lom.xml",
        "dc_csv": "dc_csv.json",
        "gathered_html": "gathered_html.html",
    }
    payload = (FIXTURES / inputs[format_id]).read_bytes()
    attrs = {}
    source = "fixture:%s" % format_id
    if format_id == "gathered_html":
        source = "http://example.org/rocks"
        attrs = {"content_type": "text/html"}
    return NativeRecord(format_id, payload, source, attrs=attrs)


def test_shipped_registry_has_the_five_builtins(registry):
    assert set(registry.formats()) == {
        "nsdl_qdc",
        "oai_dc",
        "edu_lom",
        "dc_csv",
        "gathered_html",
    }


@pytest.mark.parametrize(
    "format_id", ["nsdl_qdc", "oai_dc", "edu_lom", "dc_csv", "gathered_html"]
)
def test_every_shipped_crosswalk_matches_committed_fixture_bytes(registry, format_id):
    native = fixture_native(format_id)
    expected = (FIXTURES / ("%s.expected.json" % format_id)).read_bytes().rstrip(b"\n")
    qdc = registry.get(format_id).convert(native)
    assert qdc.canonical_json() == expected


@pytest.mark.parametrize(
    "format_id", ["nsdl_qdc", "oai_dc", "edu_lom", "dc_csv", "gathered_html"]
)
def test_crosswalk_determinism(registry, format_id):
    native = fixture_native(format_id)
    walk = registry.get(format_id)
    assert walk.convert(native).canonical_json() == walk.convert(native).canonical_json()


def test_identity_crosswalk_is_byte_identical(registry):
    from stacks.qdc import parse_qdc_xml

    native = fixture_native("nsdl_qdc")
    qdc = registry.get("nsdl_qdc").convert(native)
    assert qdc.canonical_json() == parse_qdc_xml(native.payload).canonical_json()


def test_unregistered_format(registry):
    with pytest.raises(UnsupportedFormat):
        registry.get("marc21")


def test_validate_ok_zero_findings(registry):
    report = registry.get("nsdl_qdc").validate(fixture_native("nsdl_qdc"))
    assert report.status == "ok" and report.findings == []


def test_validate_missing_required_title_fails(registry):
    payload = b"<lom><technical><location>http://x</location></technical></lom>"
    report = registry.get("edu_lom").validate(NativeRecord("edu_lom", payload))
    assert report.status == "fail"
    assert any(f[0] == "general/title" and f[1] == "fail" for f in report.findings)


def test_validate_date_normalization_warns(registry):
    payload = (
        b'<dc><title>t</title><identifier>http://x</identifier>'
        b"<date>3/5/1998</date></dc>"
    )
    report = registry.get("oai_dc").validate(NativeRecord("oai_dc", payload))
    assert report.status == "warn"
    assert any("1998-03-05" in f[2] for f in report.findings)
    qdc = registry.get("oai_dc").convert(NativeRecord("oai_dc", payload))
    assert qdc.first("date") == "1998-03-05"


def test_unparseable_date_is_fail_level(registry):
    payload = (
        b"<dc><title>t</title><identifier>http://x</identifier>"
        b"<date>sometime later</date></dc>"
    )
    report = registry.get("oai_dc").validate(NativeRecord("oai_dc", payload))
    assert report.status == "fail"
    with pytest.raises(CrosswalkError):
        registry.get("oai_dc").convert(NativeRecord("oai_dc", payload))


def test_malformed_xml_fails(registry):
    report = registry.get("oai_dc").validate(NativeRecord("oai_dc", b"<dc><title>"))
    assert report.status == "fail"


def test_wrong_root_fails(registry):
    report = registry.get("edu_lom").validate(NativeRecord("edu_lom", b"<dc/>"))
    assert report.status == "fail"


def test_lom_audience_maps_to_education_extension(registry):
    qdc = registry.get("edu_lom").convert(fixture_native("edu_lom"))
    assert qdc.values("audience", "grade") == ["grade 4"]
    assert qdc.first("typicalLearningTime") == "PT45M"


def test_csv_row_maps_three_columns(registry):
    payload = json.dumps(
        {"title": "T", "url": "http://x", "subject": "a; b"}
    ).encode()
    qdc = registry.get("dc_csv").convert(NativeRecord("dc_csv", payload))
    assert qdc.first("title") == "T"
    assert qdc.values("identifier", "url") == ["http://x"]
    assert qdc.values("subject") == ["a", "b"]


def test_gathered_page_title_fallback_to_url(registry):
    native = NativeRecord(
        "gathered_html",
        b"<html><body>no title here</body></html>",
        "http://example.org/bare",
        attrs={"content_type": "text/html"},
    )
    report = registry.get("gathered_html").validate(native)
    assert report.status == "warn"
    assert any(f[0] == "title" for f in report.findings)
    qdc = registry.get("gathered_html").convert(native)
    assert qdc.first("title") == "http://example.org/bare"


def test_spec_rules_must_target_registered_elements():
    from stacks.ingest.crosswalks import SpecCrosswalk

    with pytest.raises(ValidationFailure):
        SpecCrosswalk(
            {"format_id": "x", "rules": [{"source": "a", "element": "price"}]}
        )
    with pytest.raises(ValidationFailure):
        SpecCrosswalk(
            {
                "format_id": "x",
                "rules": [{"source": "a", "element": "title", "qualifier": "nope"}],
            }
        )


def test_join_and_const_rules():
    from stacks.ingest.crosswalks import SpecCrosswalk

    walk = SpecCrosswalk(
        {
            "format_id": "x",
            "source_kind": "xml",
            "rules": [
                {
                    "join": ["city", "country"],
                    "separator": ", ",
                    "element": "coverage",
                    "qualifier": "spatial",
                },
                {"element": "type", "const": "Dataset"},
                {"source": "name", "element": "title"},
                {"source": "link", "element": "identifier"},
            ],
        },
        Normalizer(),
    )
    native = NativeRecord(
        "x",
        b"<r><city>Ithaca</city><country>USA</country><name>n</name>"
        b"<link>http://x</link></r>",
    )
    qdc = walk.convert(native)
    assert qdc.values("coverage", "spatial") == ["Ithaca, USA"]
    assert qdc.first("type") == "Dataset"


def test_normalizer_fixture_list():
    rules = json.loads(
        (default_crosswalk_dir() / "normalize.json").read_text(encoding="utf-8")
    )
    norm = Normalizer(rules)
    cases = [
        ("3/5/1998", "1998-03-05"),
        ("1998/03/05", "1998-03-05"),
        ("5 March 1998", "1998-03-05"),
        ("March 5, 1998", "1998-03-05"),
        ("Mar 5, 1998", "1998-03-05"),
        ("1998-03-05", "1998-03-05"),
        ("1998-03", "1998-03"),
        ("1998", "1998"),
    ]
    for raw, want in cases:
        got, findings = norm.normalize("date", raw)
        assert got == want, raw
        assert all(f[1] != "fail" for f in findings)
    got, findings = norm.normalize("date", "the nineties")
    assert any(f[1] == "fail" for f in findings)


def test_whitespace_collapse_reported():
    norm = Normalizer()
    value, findings = norm.normalize("title", "  two   words ")
    assert value == "two words"
    assert findings and findings[0][1] == "warn"
