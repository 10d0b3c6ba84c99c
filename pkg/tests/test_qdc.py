import json

import pytest

from stacks.errors import ValidationFailure
from stacks.qdc import DC_ELEMENTS, QdcRecord, parse_qdc_xml


def test_fifteen_core_elements():
    assert len(DC_ELEMENTS) == 15


def test_add_and_read_back():
    rec = QdcRecord()
    rec.add("title", "Water cycles")
    rec.add("title", "El ciclo del agua", "alternative")
    rec.add("date", "1998-03-05", "issued")
    assert rec.values("title") == ["Water cycles", "El ciclo del agua"]
    assert rec.values("title", "alternative") == ["El ciclo del agua"]
    assert rec.first("date") == "1998-03-05"


def test_unknown_element_rejected():
    with pytest.raises(ValidationFailure):
        QdcRecord().add("bogus", "x")


def test_unknown_qualifier_rejected():
    with pytest.raises(ValidationFailure):
        QdcRecord().add("title", "x", "subtitle")


def test_case_insensitive_element_lookup():
    rec = QdcRecord().add("Title", "t").add("typicallearningtime", "PT30M")
    assert rec.first("title") == "t"
    assert rec.first("typicalLearningTime") == "PT30M"


def test_item_invariant_requires_identifier():
    rec = QdcRecord().add("title", "no locator")
    findings = rec.findings("item")
    assert [f[0] for f in findings] == ["identifier"]
    assert all(f[1] == "fail" for f in findings)


def test_collection_invariant_requires_title_and_description():
    findings = QdcRecord().add("identifier", "http://x").findings("collection")
    assert {f[0] for f in findings} == {"title", "description"}


def test_control_chars_stripped():
    rec = QdcRecord().add("title", "bad\x00byte\x1f")
    assert rec.first("title") == "badbyte"


def test_canonical_json_is_deterministic_and_ordered():
    a = QdcRecord()
    a.add("subject", "comets")
    a.add("title", "Comet basics")
    b = QdcRecord()
    b.add("title", "Comet basics")
    b.add("subject", "comets")
    assert a.canonical_json() == b.canonical_json()
    keys = list(json.loads(a.canonical_json()))
    assert keys == ["title", "subject"]


def test_qdc_xml_round_trip():
    rec = QdcRecord()
    rec.add("title", "Acids & bases <intro>")
    rec.add("audience", "grade 4", "grade")
    rec.add("identifier", "http://x/a?b=1&c=2")
    back = parse_qdc_xml(rec.to_qdc_xml())
    assert back == rec


def test_oai_dc_projection_drops_qualifiers_and_education_elements():
    rec = QdcRecord()
    rec.add("title", "T")
    rec.add("date", "1998", "issued")
    rec.add("audience", "grade 4", "grade")
    xml = rec.to_oai_dc_xml()
    assert "<dc:date>1998</dc:date>" in xml
    assert "qualifier" not in xml
    assert "audience" not in xml


def test_parse_rejects_unknown_child():
    with pytest.raises(ValidationFailure):
        parse_qdc_xml("<dc><title>t</title><price>9</price></dc>")


def test_parse_rejects_malformed_xml():
    with pytest.raises(ValidationFailure):
        parse_qdc_xml("<dc><title>t")


def test_only_identifier_detection():
    assert QdcRecord().add("identifier", "http://x").only_identifier()
    assert not QdcRecord().add("identifier", "http://x").add("title", "t").only_identifier()
    assert not QdcRecord().only_identifier()
