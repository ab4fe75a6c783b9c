"""USQL domain types.

All types are immutable value objects. Validation happens in ``__post_init__``
so that an instance that exists is an instance that satisfies its invariants;
violations raise :class:`~proteus.errors.SchemaError`.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Mapping

from .errors import SchemaError


class RequirementKind(str, enum.Enum):
    CAPABILITY = "Capability"
    INPUT = "InputElement"
    OUTPUT = "OutputElement"
    RESOURCE_PROPERTY = "ResourceProperty"
    QOS = "QoS"

    @property
    def typed(self) -> bool:
        """Whether requirements of this kind may carry a data type."""
        return self in _TYPED_KINDS


_TYPED_KINDS = frozenset(
    {RequirementKind.INPUT, RequirementKind.OUTPUT, RequirementKind.RESOURCE_PROPERTY}
)


class QoSOperator(str, enum.Enum):
    LE = "LE"
    GE = "GE"
    EQ = "EQ"


class ServiceType(str, enum.Enum):
    WEB = "WebService"
    P2P = "P2PService"
    GRID = "GridService"


#: Filter names understood by the repository out of the box.
FILTER_VOCABULARY = frozenset(
    {"provider", "classification", "peerGroup", "peerId", "virtualOrganization", "serviceType"}
)


@dataclass(frozen=True)
class DataTypeRef:
    namespace: str
    local_name: str

    def __post_init__(self) -> None:
        if not self.namespace:
            raise SchemaError("data type namespace must be non-empty")
        if not self.local_name:
            raise SchemaError("data type localName must be non-empty")


def _check_described(kind: RequirementKind, description, ontology_reference, what: str) -> None:
    if kind is RequirementKind.QOS:
        return
    if not description and not ontology_reference:
        raise SchemaError(f"{what} of kind {kind.value} needs a description or ontologyReference")


@dataclass(frozen=True)
class ServiceRequirement:
    """One weighted search criterion of a request."""

    kind: RequirementKind
    description: str | None = None
    ontology_reference: str | None = None
    data_type: DataTypeRef | None = None
    qos_name: str | None = None
    qos_operator: QoSOperator | None = None
    qos_value: float | None = None
    qos_unit: str | None = None
    weight: float = 1.0

    def __post_init__(self) -> None:
        if not self.weight > 0:
            raise SchemaError(f"weight must be > 0, got {self.weight!r}", "@weight")
        _check_described(self.kind, self.description, self.ontology_reference, "requirement")
        if self.data_type is not None and not self.kind.typed:
            raise SchemaError(f"{self.kind.value} requirements cannot carry a data type")
        if self.kind is RequirementKind.QOS:
            if not self.qos_name or self.qos_operator is None or self.qos_value is None:
                raise SchemaError("QoS requirements need name, operator and value")
        elif self.qos_name or self.qos_operator is not None or self.qos_value is not None:
            raise SchemaError(f"{self.kind.value} requirements cannot carry QoS fields")


@dataclass(frozen=True)
class SearchFilter:
    name: str
    value: str

    def __post_init__(self) -> None:
        if not self.name:
            raise SchemaError("filter name must be non-empty", "@name")
        if not self.value:
            raise SchemaError(f"filter {self.name!r} needs a non-empty value", "@value")


@dataclass(frozen=True)
class BrokerDescriptor:
    id: str
    broker_type: str
    access_details: Mapping[str, str] = field(default_factory=dict)
    crawl_interval_seconds: int = 3600

    def __post_init__(self) -> None:
        if not self.id:
            raise SchemaError("broker id must be non-empty")
        if not self.broker_type:
            raise SchemaError(f"broker {self.id!r} needs a type")
        if int(self.crawl_interval_seconds) <= 0:
            raise SchemaError(f"broker {self.id!r}: crawlIntervalSeconds must be positive")


@dataclass(frozen=True)
class USQLRequest:
    requirements: tuple[ServiceRequirement, ...]
    targets: tuple[str, ...] = ()
    filters: tuple[SearchFilter, ...] = ()
    min_degree_of_match: float = 0.5
    max_results: int = 50

    def __post_init__(self) -> None:
        object.__setattr__(self, "requirements", tuple(self.requirements))
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "filters", tuple(self.filters))
        if not self.requirements:
            raise SchemaError("a request needs at least one requirement", "/USQLRequest/Requirements")
        if not 0.0 <= self.min_degree_of_match <= 1.0:
            raise SchemaError(
                f"minDegreeOfMatch must lie in [0, 1], got {self.min_degree_of_match!r}",
                "/USQLRequest/@minDegreeOfMatch",
            )
        if self.max_results <= 0:
            raise SchemaError("maxResults must be positive", "/USQLRequest/@maxResults")


@dataclass(frozen=True)
class AdvertisedProperty:
    """A property of an advertised operation that a requirement may be paired with."""

    kind: RequirementKind
    name: str
    description: str | None = None
    ontology_reference: str | None = None
    data_type: DataTypeRef | None = None
    qos_name: str | None = None
    qos_value: float | None = None
    unit: str | None = None

    def __post_init__(self) -> None:
        _check_described(self.kind, self.description, self.ontology_reference, f"property {self.name!r}")
        if self.data_type is not None and not self.kind.typed:
            raise SchemaError(f"{self.kind.value} properties cannot carry a data type")
        if self.kind is RequirementKind.QOS and (not self.qos_name or self.qos_value is None):
            raise SchemaError(f"QoS property {self.name!r} needs a name and value")


@dataclass(frozen=True)
class InvocationDetails:
    service_type: ServiceType
    entries: Mapping[str, str]

    def __post_init__(self) -> None:
        if not self.entries:
            raise SchemaError("invocation details need at least one entry")


def advertisement_id(broker_id: str, document_id: str, operation_name: str) -> str:
    """Stable identifier of the advertisement for one operation of one document."""
    raw = "\x1f".join((broker_id, document_id, operation_name)).encode("utf-8")
    return hashlib.sha256(raw).hexdigest()[:20]


@dataclass(frozen=True)
class ServiceAdvertisement:
    id: str
    service_type: ServiceType
    provider: str
    operation_name: str
    capability: AdvertisedProperty
    invocation: InvocationDetails
    source_broker_id: str
    harvested_at: datetime
    inputs: tuple[AdvertisedProperty, ...] = ()
    outputs: tuple[AdvertisedProperty, ...] = ()
    resource_properties: tuple[AdvertisedProperty, ...] = ()
    qos_properties: tuple[AdvertisedProperty, ...] = ()
    filter_attributes: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("inputs", "outputs", "resource_properties", "qos_properties"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.capability.kind is not RequirementKind.CAPABILITY:
            raise SchemaError("advertisement capability must be of kind Capability")
        attrs = dict(self.filter_attributes)
        attrs.setdefault("provider", self.provider)
        attrs.setdefault("serviceType", self.service_type.value)
        object.__setattr__(self, "filter_attributes", attrs)

    def same_content(self, other: ServiceAdvertisement) -> bool:
        """Equality ignoring the harvest timestamp."""
        return self == replace(other, harvested_at=self.harvested_at)


@dataclass(frozen=True)
class CriterionScore:
    requirement_index: int
    score: float


@dataclass(frozen=True)
class MatchedServiceEntry:
    degree_of_match: float
    provider: str
    name: str
    description: str
    service_type: ServiceType
    criterion_scores: tuple[CriterionScore, ...]
    invocation: InvocationDetails
    advertisement_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "criterion_scores", tuple(self.criterion_scores))
        if not 0.0 <= self.degree_of_match <= 1.0:
            raise SchemaError(f"degreeOfMatch out of range: {self.degree_of_match!r}")


@dataclass(frozen=True)
class USQLResponse:
    request_id: str
    entries: tuple[MatchedServiceEntry, ...]
    generated_at: datetime

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))


def ranking_key(entry: MatchedServiceEntry) -> tuple:
    """Sort key: degree descending, then provider and operation name ascending.

    The advertisement id is a last resort so that ordering is total.
    """
    return (-entry.degree_of_match, entry.provider, entry.name, entry.advertisement_id)
