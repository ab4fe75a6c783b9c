"""The USQL matchmaking algebra.

A request and an advertisement are seen as two ordered sets of the same
length: requirement ``i`` is matched against property ``i`` (or against
nothing, when the advertisement has no counterpart). Requirements are grouped
by weight; the groups are scored by the arithmetic mean of their pair scores
and combined by the degree-of-match calculator::

    d = sum_i  w'_i * prod_{j >= i} m_j

where groups are ordered by ascending weight and ``w'_i`` are the weights
normalised to sum to one. A group of higher weight multiplies into every
term below it, so a zero in the top group vetoes the whole candidate.

Matcher functions (text, ontology concept, data type, QoS) are supplied by a
:class:`MatcherSuite` and are treated as black boxes with values in [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from .errors import EmptyRequirements, NonPositiveWeight, UnknownQoSName
from .model import (
    AdvertisedProperty,
    DataTypeRef,
    RequirementKind,
    ServiceAdvertisement,
    ServiceRequirement,
    USQLRequest,
)

TextMatcher = Callable[[str, str], float]
OntologyMatcher = Callable[[str, str], float]
DatatypeMatcher = Callable[[DataTypeRef, DataTypeRef], float]
QoSMatcher = Callable[[ServiceRequirement, AdvertisedProperty], float]

Pair = tuple[ServiceRequirement, "AdvertisedProperty | None"]


def _clamp(x: float) -> float:
    return 0.0 if x < 0.0 else 1.0 if x > 1.0 else float(x)


@dataclass(frozen=True)
class MatcherSuite:
    """The external value matchers the algebra is parameterised over."""

    text: TextMatcher
    ontology: OntologyMatcher
    datatype: DatatypeMatcher
    qos: Mapping[str, QoSMatcher] = field(default_factory=dict)


@dataclass(frozen=True)
class PairScore:
    """Score of one (requirement, property) pair with its constituent arms.

    Arms that do not apply to the requirement kind are ``None``.
    """

    score: float
    matcher: str
    text: float | None = None
    ontology: float | None = None
    datatype: float | None = None
    paired: bool = True


@dataclass(frozen=True)
class WeightGroup:
    weight: float
    #: ``(request index, requirement, paired property)`` in request order.
    members: tuple[tuple[int, ServiceRequirement, AdvertisedProperty | None], ...]

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class WeightGroupPartition:
    groups: tuple[WeightGroup, ...]

    @property
    def n(self) -> int:
        return sum(g.size for g in self.groups)

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(g.weight for g in self.groups)


def partition_by_weight(pairs: Sequence[Pair]) -> WeightGroupPartition:
    """Split pairs into groups of equal requirement weight, lightest first."""
    if not pairs:
        raise EmptyRequirements("at least one requirement is needed")
    buckets: dict[float, list] = {}
    for index, (req, prop) in enumerate(pairs):
        if not req.weight > 0:
            raise NonPositiveWeight(f"requirement {index} has weight {req.weight!r}")
        buckets.setdefault(req.weight, []).append((index, req, prop))
    return WeightGroupPartition(
        tuple(WeightGroup(w, tuple(buckets[w])) for w in sorted(buckets))
    )


def _described_arms(
    r: ServiceRequirement, p: AdvertisedProperty, suite: MatcherSuite
) -> tuple[float, float]:
    # A missing description or concept on either side contributes 0.
    text = 0.0
    if r.description and p.description:
        text = _clamp(suite.text(r.description, p.description))
    onto = 0.0
    if r.ontology_reference and p.ontology_reference:
        onto = _clamp(suite.ontology(r.ontology_reference, p.ontology_reference))
    return text, onto


def match_described(r: ServiceRequirement, p: AdvertisedProperty, suite: MatcherSuite) -> float:
    """phi(r, p) = max(text(r, p), ontology(r, p))."""
    return max(_described_arms(r, p, suite))


def _datatype_arm(r: ServiceRequirement, p: AdvertisedProperty, suite: MatcherSuite) -> float:
    if r.data_type is None or p.data_type is None:
        return 0.0
    return _clamp(suite.datatype(r.data_type, p.data_type))


def match_described_typed(r: ServiceRequirement, p: AdvertisedProperty, suite: MatcherSuite) -> float:
    """psi(r, p) = (phi(r, p) + datatype(r, p)) / 2."""
    return 0.5 * (match_described(r, p, suite) + _datatype_arm(r, p, suite))


def match_capability(r: ServiceRequirement, p: AdvertisedProperty, suite: MatcherSuite) -> float:
    return match_described(r, p, suite)


def score_pair(
    r: ServiceRequirement, p: AdvertisedProperty | None, suite: MatcherSuite
) -> PairScore:
    """Score a pair and keep the intermediate arm values."""
    if r.kind is RequirementKind.QOS:
        matcher = suite.qos.get(r.qos_name)
        if matcher is None:
            raise UnknownQoSName(r.qos_name)
        if p is None:
            return PairScore(0.0, f"qos:{r.qos_name}", paired=False)
        return PairScore(_clamp(matcher(r, p)), f"qos:{r.qos_name}")
    if p is None:
        return PairScore(0.0, "unpaired", paired=False)
    text, onto = _described_arms(r, p, suite)
    phi = max(text, onto)
    if r.kind is RequirementKind.CAPABILITY:
        return PairScore(phi, "phi", text=text, ontology=onto)
    gamma = _datatype_arm(r, p, suite)
    return PairScore(0.5 * (phi + gamma), "psi", text=text, ontology=onto, datatype=gamma)


def match_pair(r: ServiceRequirement, p: AdvertisedProperty | None, suite: MatcherSuite) -> float:
    """Dispatch on requirement kind; an absent property scores 0."""
    return score_pair(r, p, suite).score


def combine(weights: Sequence[float], group_means: Sequence[float]) -> float:
    """The degree-of-match calculator over per-group means.

    ``weights`` must be strictly ascending and aligned with ``group_means``.
    """
    total = sum(weights)
    d = 0.0
    # Suffix products: tail[i] = prod_{j >= i} m_j.
    tail = 1.0
    for w, m in zip(reversed(weights), reversed(group_means)):
        tail *= m
        d += (w / total) * tail
    return _clamp(d)


def degree_of_match(
    partition: WeightGroupPartition, suite: MatcherSuite
) -> tuple[float, list[float]]:
    """Overall degree of match plus every pair score in original request order."""
    scores = [0.0] * partition.n
    means = []
    for group in partition.groups:
        acc = 0.0
        for index, req, prop in group.members:
            s = match_pair(req, prop, suite)
            scores[index] = s
            acc += s
        means.append(acc / group.size)
    return combine(partition.weights, means), scores


def _candidates(ad: ServiceAdvertisement, kind: RequirementKind) -> Sequence[AdvertisedProperty]:
    if kind is RequirementKind.INPUT:
        return ad.inputs
    if kind is RequirementKind.OUTPUT:
        return ad.outputs
    if kind is RequirementKind.RESOURCE_PROPERTY:
        return ad.resource_properties
    raise ValueError(kind)


def pair_requirements(
    request: USQLRequest, ad: ServiceAdvertisement, suite: MatcherSuite
) -> list[Pair]:
    """Build the requirement/property correspondence for one advertisement.

    Interface and resource requirements take the best-scoring candidate of
    their kind; the first maximum wins and a candidate may serve several
    requirements.
    """
    pairs: list[Pair] = []
    for req in request.requirements:
        if req.kind is RequirementKind.CAPABILITY:
            pairs.append((req, ad.capability))
        elif req.kind is RequirementKind.QOS:
            prop = next((q for q in ad.qos_properties if q.qos_name == req.qos_name), None)
            pairs.append((req, prop))
        else:
            best, best_score = None, -1.0
            for cand in _candidates(ad, req.kind):
                s = match_pair(req, cand, suite)
                if s > best_score:
                    best, best_score = cand, s
            pairs.append((req, best))
    return pairs
