import warnings
from datetime import datetime, timezone

import pytest
from hypothesis import given, settings

from strategies import requests, responses
from proteus.documents import (
    UnknownElementWarning,
    format_decimal,
    parse_fault,
    parse_request,
    parse_response,
    schema_errors,
    serialize_fault,
    serialize_request,
    serialize_response,
)
from proteus.errors import SchemaError, XMLSyntaxError
from proteus.model import RequirementKind, USQLResponse

MINIMAL = b'<USQLRequest><Requirements><Capability description="book flight"/></Requirements></USQLRequest>'


def test_minimal_request_gets_defaults():
    req = parse_request(MINIMAL)
    assert len(req.requirements) == 1
    r = req.requirements[0]
    assert r.kind is RequirementKind.CAPABILITY and r.weight == 1.0 and r.description == "book flight"
    assert req.min_degree_of_match == 0.5 and req.max_results == 50
    assert req.targets == () and req.filters == ()


@pytest.mark.parametrize("weight", ["0", "-1", "nan", "inf", "heavy"])
def test_bad_weight_names_the_attribute(weight):
    doc = f'<USQLRequest><Requirements><Capability weight="{weight}" description="x"/></Requirements></USQLRequest>'
    with pytest.raises(SchemaError) as info:
        parse_request(doc)
    assert info.value.path == "/USQLRequest/Requirements/Capability[1]/@weight"


def test_error_paths_count_same_named_siblings():
    doc = ('<USQLRequest><Requirements><Capability description="x"/>'
           '<InputElement description="a"/><InputElement weight="0" description="b"/></Requirements></USQLRequest>')
    with pytest.raises(SchemaError) as info:
        parse_request(doc)
    assert info.value.path == "/USQLRequest/Requirements/InputElement[2]/@weight"


@pytest.mark.parametrize(
    "doc",
    [
        b"<USQLRequest><Requirements/></USQLRequest>",
        b"<USQLRequest/>",
        b'<USQLRequest minDegreeOfMatch="1.5"><Requirements><Capability description="x"/></Requirements></USQLRequest>',
        b'<USQLRequest maxResults="0"><Requirements><Capability description="x"/></Requirements></USQLRequest>',
        b"<USQLRequest><Requirements><Capability/></Requirements></USQLRequest>",
        b'<USQLRequest><Requirements><QoS name="ResponseTime" operator="LT" value="1"/></Requirements></USQLRequest>',
        b"<Other/>",
    ],
)
def test_invalid_requests(doc):
    with pytest.raises(SchemaError):
        parse_request(doc)


def test_malformed_xml():
    with pytest.raises(XMLSyntaxError):
        parse_request(b"<USQLRequest><Requirements>")


def test_unknown_content_strict_versus_lenient():
    doc = b'<USQLRequest extra="1"><Requirements><Capability description="x"><Note/></Capability></Requirements></USQLRequest>'
    with pytest.raises(SchemaError):
        parse_request(doc, strict=True)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        req = parse_request(doc)
    assert req.requirements[0].description == "x"
    assert {type(w.message) for w in caught} == {UnknownElementWarning}
    assert len(caught) == 2


def test_empty_response_and_score_format():
    empty = USQLResponse("r", (), datetime(2026, 1, 1, tzinfo=timezone.utc))
    doc = serialize_response(empty)
    assert b"MatchedServiceEntry" not in doc
    assert schema_errors(doc) == []
    assert parse_response(doc) == empty


def test_degree_one_formats_with_six_decimals(fixtures_dir):
    doc = (fixtures_dir / "usql" / "response-mixed.xml").read_bytes()
    resp = parse_response(doc)
    entry = resp.entries[0]
    one = serialize_response(USQLResponse("r", (type(entry)(**{**entry.__dict__, "degree_of_match": 1.0}),), resp.generated_at))
    assert b'degreeOfMatch="1.000000"' in one


def test_fault_round_trip():
    doc = serialize_fault("UnknownQoSName", "no matcher for 'Latency' & co", "/USQLRequest/Requirements/QoS[1]/@name")
    assert parse_fault(doc) == ("UnknownQoSName", "no matcher for 'Latency' & co", "/USQLRequest/Requirements/QoS[1]/@name")
    assert schema_errors(doc) == []


@pytest.mark.parametrize("value,text", [(1.0, "1.0"), (0.1, "0.1"), (1e-7, "0.0000001"), (2e20, "200000000000000000000.0"), (-3.5, "-3.5")])
def test_decimal_format_has_no_exponent(value, text):
    assert format_decimal(value) == text
    assert float(format_decimal(value)) == value


def test_fixture_corpus_is_canonical_and_valid(fixtures_dir):
    docs = sorted((fixtures_dir / "usql").glob("*.xml"))
    assert docs
    for path in docs:
        raw = path.read_bytes()
        assert schema_errors(raw) == [], path.name
        if path.name.startswith("request"):
            assert serialize_request(parse_request(raw, strict=True)) == raw, path.name
        elif path.name.startswith("response"):
            assert serialize_response(parse_response(raw)) == raw, path.name
        else:
            assert serialize_fault(*parse_fault(raw)) == raw, path.name


def test_non_canonical_input_is_normalised():
    doc = b"""<?xml version='1.0'?>
<USQLRequest   maxResults='50'><Requirements><Capability description='book flight'
   weight='1'/></Requirements></USQLRequest>"""
    canonical = serialize_request(parse_request(doc))
    assert canonical == serialize_request(parse_request(canonical))
    assert canonical.startswith(b'<?xml version="1.0" encoding="UTF-8"?>\n<USQLRequest minDegreeOfMatch="0.5"')


@settings(max_examples=200)
@given(requests)
def test_request_round_trip(req):
    doc = serialize_request(req)
    assert parse_request(doc, strict=True) == req
    assert serialize_request(parse_request(doc)) == doc
    assert schema_errors(doc) == []


@settings(max_examples=200)
@given(responses)
def test_response_round_trip(resp):
    doc = serialize_response(resp)
    assert parse_response(doc) == resp
    assert serialize_response(parse_response(doc)) == doc
