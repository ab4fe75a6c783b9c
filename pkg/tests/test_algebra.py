import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import argmax_pairing, calculator
from proteus.algebra import (
    MatcherSuite,
    combine,
    degree_of_match,
    match_described,
    match_described_typed,
    match_pair,
    pair_requirements,
    partition_by_weight,
    score_pair,
)
from proteus.brokersim import concept_uri
from proteus.errors import EmptyRequirements, NonPositiveWeight, UnknownQoSName
from proteus.model import (
    AdvertisedProperty as Prop,
    DataTypeRef,
    InvocationDetails,
    QoSOperator,
    RequirementKind as K,
    ServiceAdvertisement,
    ServiceRequirement as Req,
    ServiceType,
    USQLRequest,
)
from proteus.plugins.matchers import XSD_NAMESPACE

# A suite whose QoS matcher echoes the requested value lets tests dictate pair scores.
ECHO = MatcherSuite(text=lambda a, b: 0.0, ontology=lambda a, b: 0.0, datatype=lambda a, b: 0.0,
                    qos={"S": lambda r, p: r.qos_value})
_PROP = Prop(K.QOS, "S", qos_name="S", qos_value=0.0)


def scored(score, weight):
    return Req(K.QOS, qos_name="S", qos_operator=QoSOperator.GE, qos_value=score, weight=weight), _PROP


def dom(scores, weights):
    pairs = [scored(s, w) for s, w in zip(scores, weights)]
    return degree_of_match(partition_by_weight(pairs), ECHO)[0]


def cap(desc=None, onto=None, w=1.0):
    return Req(K.CAPABILITY, description=desc, ontology_reference=onto, weight=w)


def xsd(local):
    return DataTypeRef(XSD_NAMESPACE, local)


# -- partition ----------------------------------------------------------------


def test_single_distinct_weight_gives_one_group():
    part = partition_by_weight([scored(0.1, 1.0)] * 3)
    assert part.k == 1 and part.groups[0].size == 3


def test_groups_are_ascending_and_keep_request_indexes():
    part = partition_by_weight([scored(0, 2), scored(0, 1), scored(0, 2)])
    assert part.weights == (1, 2)
    assert [m[0] for m in part.groups[0].members] == [1]
    assert [m[0] for m in part.groups[1].members] == [0, 2]


def test_four_requirements_three_weights():
    part = partition_by_weight([scored(0, w) for w in (0.5, 3, 0.5, 7)])
    assert part.k == 3
    assert [g.size for g in part.groups] == [2, 1, 1]


def test_partition_rejects_empty_and_non_positive():
    with pytest.raises(EmptyRequirements):
        partition_by_weight([])
    req = scored(0, 1)[0]
    object.__setattr__(req, "weight", 0.0)  # bypass model validation
    with pytest.raises(NonPositiveWeight):
        partition_by_weight([(req, _PROP)])


# -- calculator ---------------------------------------------------------------


def test_all_ones_is_one():
    assert dom([1, 1, 1, 1], [1, 2, 2, 5]) == pytest.approx(1.0, abs=1e-15)


def test_top_group_zero_vetoes():
    assert dom([1, 1, 0], [1, 1, 3]) == 0.0


def test_two_group_worked_example():
    # (1/3)(0.5*0.8) + (2/3)(0.8)
    assert combine([1, 2], [0.5, 0.8]) == pytest.approx(0.666667, abs=5e-7)
    assert combine([1, 2], [0.5, 0.8]) == pytest.approx(calculator([1, 2], [0.5, 0.8]), abs=1e-15)


def test_single_group_is_the_mean():
    assert dom([0.2, 0.4, 0.9], [3, 3, 3]) == pytest.approx(0.5, abs=1e-15)


weights_st = st.lists(st.sampled_from([0.5, 1.0, 2.0, 3.5]), min_size=1, max_size=6)


@settings(max_examples=300)
@given(st.data())
def test_matches_exact_oracle(data):
    weights = data.draw(weights_st)
    scores = data.draw(st.lists(st.floats(0, 1), min_size=len(weights), max_size=len(weights)))
    assert abs(dom(scores, weights) - calculator(weights, scores)) <= 1e-12


@settings(max_examples=300)
@given(st.data())
def test_degree_in_unit_interval(data):
    weights = data.draw(weights_st)
    scores = data.draw(st.lists(st.floats(0, 1), min_size=len(weights), max_size=len(weights)))
    assert 0.0 <= dom(scores, weights) <= 1.0


@settings(max_examples=300)
@given(st.data())
def test_monotone_in_each_score(data):
    weights = data.draw(weights_st)
    scores = data.draw(st.lists(st.floats(0, 1), min_size=len(weights), max_size=len(weights)))
    i = data.draw(st.integers(0, len(weights) - 1))
    bumped = list(scores)
    bumped[i] = data.draw(st.floats(scores[i], 1))
    assert dom(bumped, weights) >= dom(scores, weights) - 1e-15


@settings(max_examples=300)
@given(st.data())
def test_invariant_under_weight_scaling(data):
    weights = data.draw(st.lists(st.integers(1, 5), min_size=1, max_size=6))
    scores = data.draw(st.lists(st.floats(0, 1), min_size=len(weights), max_size=len(weights)))
    c = data.draw(st.floats(1e-3, 1e3))
    assert math.isclose(dom(scores, [w * c for w in weights]), dom(scores, weights), abs_tol=1e-12)


# -- matcher compositions -----------------------------------------------------


def test_phi_identical_text_without_concepts(suite):
    assert match_described(cap("book flight"), Prop(K.CAPABILITY, "x", description="book flight"), suite) == 1.0


def test_phi_identical_concepts_without_text(suite):
    c = concept_uri("BookFlight")
    assert match_described(cap(onto=c), Prop(K.CAPABILITY, "x", ontology_reference=c), suite) == 1.0


def test_phi_is_max_of_text_and_concept(suite):
    r = cap("book flight", concept_uri("BookFlight"))
    p = Prop(K.CAPABILITY, "x", description="book a flight", ontology_reference=concept_uri("BookFlightSpecialized"))
    ps = score_pair(r, p, suite)
    assert ps.ontology == 0.5
    assert ps.score == pytest.approx(2 / math.sqrt(6), abs=1e-9)
    assert ps.score == pytest.approx(0.816497, abs=1e-6)


def test_psi_perfect_and_untyped(suite):
    r = Req(K.INPUT, description="travel date", data_type=xsd("date"))
    assert match_described_typed(r, Prop(K.INPUT, "d", description="travel date", data_type=xsd("date")), suite) == 1.0
    untyped = Req(K.INPUT, description="travel date")
    assert match_described_typed(untyped, Prop(K.INPUT, "d", description="travel date", data_type=xsd("date")), suite) == 0.5


def test_psi_with_widening(suite):
    r = Req(K.OUTPUT, description="book flight", data_type=xsd("int"))
    p = Prop(K.OUTPUT, "o", description="book a flight", data_type=xsd("long"))
    assert match_pair(r, p, suite) == pytest.approx(0.5 * (2 / math.sqrt(6) + 0.8), abs=1e-9)
    assert match_pair(r, p, suite) == pytest.approx(0.808, abs=5e-4)


def test_resource_property_uses_psi(suite):
    r = Req(K.RESOURCE_PROPERTY, description="processor cores", data_type=xsd("long"))
    p = Prop(K.RESOURCE_PROPERTY, "cpus", description="processor cores", data_type=xsd("int"))
    assert match_pair(r, p, suite) == pytest.approx(0.9, abs=1e-12)


def test_qos_pair_and_absence(suite):
    r = Req(K.QOS, qos_name="ResponseTime", qos_operator=QoSOperator.LE, qos_value=200, qos_unit="ms")
    p = Prop(K.QOS, "ResponseTime", qos_name="ResponseTime", qos_value=150, unit="ms")
    assert match_pair(r, p, suite) == 1.0
    assert match_pair(r, None, suite) == 0.0
    assert match_pair(cap("book"), None, suite) == 0.0


def test_unregistered_qos_name_raises(suite):
    r = Req(K.QOS, qos_name="Latency", qos_operator=QoSOperator.LE, qos_value=1)
    with pytest.raises(UnknownQoSName):
        match_pair(r, None, suite)


# -- pairing ------------------------------------------------------------------


def _ad(**kw):
    base = dict(
        id="a", service_type=ServiceType.WEB, provider="p", operation_name="op",
        capability=Prop(K.CAPABILITY, "op", description="book flight"),
        invocation=InvocationDetails(ServiceType.WEB, {"endpoint": "x"}),
        source_broker_id="b", harvested_at=None,
    )
    base.update(kw)
    return ServiceAdvertisement(**base)


def test_capability_only_request_pairs_with_capability(suite):
    ad = _ad()
    pairs = pair_requirements(USQLRequest((cap("book flight"),)), ad, suite)
    assert pairs == [(cap("book flight"), ad.capability)]


def test_missing_qos_property_pairs_with_nothing(suite):
    r = Req(K.QOS, qos_name="Availability", qos_operator=QoSOperator.GE, qos_value=0.9)
    assert pair_requirements(USQLRequest((r,)), _ad(), suite) == [(r, None)]


def test_pairing_is_argmax_over_score_matrix(suite):
    inputs = (
        Prop(K.INPUT, "a", description="departure airport code", data_type=xsd("string")),
        Prop(K.INPUT, "b", description="travel date", data_type=xsd("dateTime")),
        Prop(K.INPUT, "c", description="departure day", data_type=xsd("date")),
    )
    reqs = (
        Req(K.INPUT, description="departure airport", data_type=xsd("string")),
        Req(K.INPUT, description="travel date", data_type=xsd("date")),
    )
    pairs = pair_requirements(USQLRequest(reqs), _ad(inputs=inputs), suite)
    expected = argmax_pairing(reqs, inputs, lambda r, p: match_pair(r, p, suite))
    assert [inputs.index(p) for _, p in pairs] == expected


def test_pairing_first_maximum_wins_and_is_not_exclusive(suite):
    same = (Prop(K.INPUT, "x", description="date"), Prop(K.INPUT, "y", description="date"))
    reqs = (Req(K.INPUT, description="date"), Req(K.INPUT, description="date"))
    pairs = pair_requirements(USQLRequest(reqs), _ad(inputs=same), suite)
    assert [p.name for _, p in pairs] == ["x", "x"]
