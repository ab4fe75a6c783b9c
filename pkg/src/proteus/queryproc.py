"""Query processor: filter, pair, score, threshold and rank."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Iterable

from .algebra import (
    MatcherSuite,
    PairScore,
    partition_by_weight,
    pair_requirements,
    score_pair,
    degree_of_match,
)
from .clock import Clock, SystemClock
from .documents import serialize_request
from .errors import NotFound, UnknownQoSName, UnknownTarget
from .model import (
    AdvertisedProperty,
    CriterionScore,
    MatchedServiceEntry,
    RequirementKind,
    ServiceAdvertisement,
    ServiceRequirement,
    USQLRequest,
    USQLResponse,
    ranking_key,
)
from .repository import Repository, RepositoryState, RetrievalStats


def request_id(request: USQLRequest) -> str:
    """Content hash of the canonical request document."""
    return hashlib.sha256(serialize_request(request)).hexdigest()[:16]


class QueryProcessor:
    """Executes USQL requests against a repository.

    ``known_brokers`` names the search targets a request may address beyond
    those already present in the repository (a configured broker may hold no
    advertisements yet).
    """

    def __init__(
        self,
        repository: Repository,
        suite: MatcherSuite,
        clock: Clock | None = None,
        known_brokers: Iterable[str] = (),
    ) -> None:
        self.repository = repository
        self.suite = suite
        self.clock = clock or SystemClock()
        self.known_brokers = frozenset(known_brokers)

    def validate(self, request: USQLRequest, state: RepositoryState | None = None) -> None:
        """Raise a query fault before any scoring happens."""
        self.repository.check_filters(request.filters)
        state = state or self.repository.snapshot_state()
        for target in request.targets:
            if target not in self.known_brokers and target not in state.by_broker:
                raise UnknownTarget(target)
        for req in request.requirements:
            if req.kind is RequirementKind.QOS:
                matcher = self.suite.qos.get(req.qos_name)
                if matcher is None:
                    raise UnknownQoSName(req.qos_name)
                check = getattr(matcher, "check_requirement", None)
                if check is not None:
                    check(req)

    def score(
        self, request: USQLRequest, ad: ServiceAdvertisement
    ) -> tuple[float, list[float]]:
        pairs = pair_requirements(request, ad, self.suite)
        return degree_of_match(partition_by_weight(pairs), self.suite)

    def execute(
        self, request: USQLRequest, *, stats: RetrievalStats | None = None
    ) -> USQLResponse:
        state = self.repository.snapshot_state()
        self.validate(request, state)
        candidates = self.repository.retrieve(request.filters, request.targets, state=state, stats=stats)
        entries = []
        for ad in candidates:
            d, scores = self.score(request, ad)
            if d < request.min_degree_of_match:
                continue
            entries.append(
                MatchedServiceEntry(
                    degree_of_match=d,
                    provider=ad.provider,
                    name=ad.operation_name,
                    description=ad.capability.description or "",
                    service_type=ad.service_type,
                    criterion_scores=tuple(CriterionScore(i, s) for i, s in enumerate(scores)),
                    invocation=ad.invocation,
                    advertisement_id=ad.id,
                )
            )
        entries.sort(key=ranking_key)
        return USQLResponse(request_id(request), tuple(entries[: request.max_results]), self.clock.now())

    def explain(self, request: USQLRequest, advertisement_id: str) -> Explanation:
        state = self.repository.snapshot_state()
        ad = state.ads.get(advertisement_id)
        if ad is None:
            raise NotFound(f"no advertisement {advertisement_id!r}")
        self.validate(request, state)
        pairs = pair_requirements(request, ad, self.suite)
        partition = partition_by_weight(pairs)
        total = sum(partition.weights)
        rows: list[ExplanationRow | None] = [None] * len(pairs)
        group_means = []
        for g, group in enumerate(partition.groups):
            acc = 0.0
            for index, req, prop in group.members:
                ps = score_pair(req, prop, self.suite)
                rows[index] = ExplanationRow(index, req, prop, ps, g, group.weight, group.weight / total)
                acc += ps.score
            group_means.append(acc / group.size)
        d, _ = degree_of_match(partition, self.suite)
        return Explanation(ad, tuple(rows), tuple(partition.weights), tuple(group_means), d)


@dataclass(frozen=True)
class ExplanationRow:
    index: int
    requirement: ServiceRequirement
    property: AdvertisedProperty | None
    pair: PairScore
    group: int
    weight: float
    normalized_weight: float


@dataclass(frozen=True)
class Explanation:
    advertisement: ServiceAdvertisement
    rows: tuple[ExplanationRow, ...]
    group_weights: tuple[float, ...]
    group_means: tuple[float, ...]
    degree_of_match: float

    def terms(self) -> list[float]:
        """Per-group contributions ``w'_i * prod_{j>=i} m_j``; they sum to the degree."""
        total = sum(self.group_weights)
        out = []
        for i, w in enumerate(self.group_weights):
            prod = 1.0
            for m in self.group_means[i:]:
                prod *= m
            out.append(w / total * prod)
        return out

    def render(self) -> str:
        ad = self.advertisement
        lines = [f"advertisement {ad.id} ({ad.provider} / {ad.operation_name}, {ad.service_type.value})"]
        for row in self.rows:
            req = row.requirement
            label = req.qos_name if req.kind is RequirementKind.QOS else (req.description or req.ontology_reference)
            target = row.property.name if row.property is not None else "<unpaired>"
            arms = ", ".join(
                f"{name}={value:.6f}"
                for name, value in (("text", row.pair.text), ("ontology", row.pair.ontology), ("datatype", row.pair.datatype))
                if value is not None
            )
            lines.append(
                f"  [{row.index}] {req.kind.value} {label!r} -> {target}: "
                f"score={row.pair.score:.6f} via {row.pair.matcher}"
                + (f" ({arms})" if arms else "")
                + f" group={row.group} weight={row.weight:g} w'={row.normalized_weight:.6f}"
            )
        for i, (m, t) in enumerate(zip(self.group_means, self.terms())):
            lines.append(f"  group {i}: weight={self.group_weights[i]:g} mean={m:.6f} term={t:.6f}")
        lines.append(f"  degreeOfMatch={self.degree_of_match:.6f}")
        return "\n".join(lines)
