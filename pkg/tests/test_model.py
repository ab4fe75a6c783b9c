from datetime import datetime, timezone

import pytest

from proteus.errors import SchemaError
from proteus.model import (
    AdvertisedProperty,
    BrokerDescriptor,
    CriterionScore,
    InvocationDetails,
    MatchedServiceEntry,
    QoSOperator,
    RequirementKind as K,
    SearchFilter,
    ServiceAdvertisement,
    ServiceRequirement,
    ServiceType,
    USQLRequest,
    advertisement_id,
    ranking_key,
)


def test_requirement_validation():
    with pytest.raises(SchemaError):
        ServiceRequirement(K.CAPABILITY, description="x", weight=0)
    with pytest.raises(SchemaError):
        ServiceRequirement(K.CAPABILITY)
    with pytest.raises(SchemaError):
        ServiceRequirement(K.QOS, qos_name="ResponseTime")
    with pytest.raises(SchemaError):
        ServiceRequirement(K.CAPABILITY, description="x", qos_name="ResponseTime")
    ServiceRequirement(K.QOS, qos_name="ResponseTime", qos_operator=QoSOperator.LE, qos_value=1)


def test_request_validation():
    cap = ServiceRequirement(K.CAPABILITY, description="x")
    with pytest.raises(SchemaError):
        USQLRequest(())
    with pytest.raises(SchemaError):
        USQLRequest((cap,), min_degree_of_match=1.1)
    with pytest.raises(SchemaError):
        USQLRequest((cap,), max_results=0)
    with pytest.raises(SchemaError):
        SearchFilter("provider", "")
    with pytest.raises(SchemaError):
        BrokerDescriptor("b", "sim-p2p", crawl_interval_seconds=0)


def test_advertisement_ids_are_stable_and_distinct():
    assert advertisement_id("b", "doc", "op") == advertisement_id("b", "doc", "op")
    assert len({advertisement_id("b", "doc", "op"), advertisement_id("b2", "doc", "op"),
                advertisement_id("b", "doc", "op2"), advertisement_id("b", "docop", "")}) == 4


def test_filter_attributes_include_provider_and_type():
    ad = ServiceAdvertisement(
        "a", ServiceType.GRID, "prov", "op", AdvertisedProperty(K.CAPABILITY, "op", description="d"),
        InvocationDetails(ServiceType.GRID, {"endpoint": "e"}), "b", datetime(2026, 1, 1, tzinfo=timezone.utc),
    )
    assert ad.filter_attributes == {"provider": "prov", "serviceType": "GridService"}


def test_ranking_order():
    def entry(d, provider, name, id_):
        return MatchedServiceEntry(d, provider, name, "", ServiceType.WEB, (CriterionScore(0, d),),
                                   InvocationDetails(ServiceType.WEB, {"e": "x"}), id_)

    entries = [entry(0.5, "b", "x", "1"), entry(0.9, "z", "a", "2"), entry(0.5, "a", "y", "3"), entry(0.5, "a", "y", "0")]
    assert [e.advertisement_id for e in sorted(entries, key=ranking_key)] == ["2", "0", "3", "1"]
