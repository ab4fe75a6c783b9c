"""Shared crawler types and the harvester/parser plugin interfaces."""

from __future__ import annotations

import io
import json
import xml.etree.ElementTree as ET
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import datetime
from typing import Mapping

from ..errors import ParseError
from ..model import BrokerDescriptor, ServiceAdvertisement

WSDL_NAMESPACE = "http://schemas.xmlsoap.org/wsdl/"
SOAP_NAMESPACE = "http://schemas.xmlsoap.org/wsdl/soap/"
ANNOTATION_NAMESPACE = "urn:proteus:annotations"
P2P_JSON_NAMESPACE = "urn:proteus:p2p-json:1"
GRID_DESC_NAMESPACE = "urn:proteus:grid-desc:1"


@dataclass(frozen=True)
class ServicePublication:
    """One description document as found in a broker."""

    source_broker_id: str
    document_id: str
    schema_namespace: str
    content: bytes
    broker_attributes: Mapping[str, str] = field(default_factory=dict)
    retrieved_at: datetime | None = None

    def __post_init__(self) -> None:
        if not self.schema_namespace:
            raise ValueError(f"publication {self.document_id!r} has no schema namespace")


@dataclass
class CrawlReport:
    broker_id: str
    started_at: datetime
    finished_at: datetime | None = None
    publications_found: int = 0
    advertisements_stored: int = 0
    parse_failures: list[tuple[str, str]] = field(default_factory=list)
    #: ``(error code, message)`` when the broker could not be crawled.
    error: tuple[str, str] | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def permanent_failure(self) -> bool:
        return self.error is not None and self.error[0] != "BrokerUnreachable"

    def summary(self) -> str:
        line = (
            f"{self.broker_id}: found={self.publications_found} "
            f"stored={self.advertisements_stored} failures={len(self.parse_failures)}"
        )
        if self.error:
            line += f" error={self.error[0]}: {self.error[1]}"
        return line

    def to_dict(self) -> dict:
        return {
            "brokerId": self.broker_id,
            "startedAt": self.started_at.isoformat(),
            "finishedAt": self.finished_at.isoformat() if self.finished_at else None,
            "publicationsFound": self.publications_found,
            "advertisementsStored": self.advertisements_stored,
            "parseFailures": [list(f) for f in self.parse_failures],
            "error": list(self.error) if self.error else None,
        }


class Harvester(ABC):
    """Lists the current publications of one kind of broker."""

    @abstractmethod
    def harvest(self, broker: BrokerDescriptor) -> list[ServicePublication]:
        """Return every publication in deterministic order.

        Raises BrokerUnreachable for transient and AccessDenied for
        permanent failures.
        """


class Parser(ABC):
    """Turns one description schema into advertisements, one per operation."""

    namespace: str

    @abstractmethod
    def parse(self, publication: ServicePublication) -> list[ServiceAdvertisement]: ...


def sniff_namespace(content: bytes) -> str:
    """Schema namespace of a description: JSON ``namespace`` key or XML root namespace."""
    head = content.lstrip()[:1]
    if head == b"{":
        try:
            ns = json.loads(content).get("namespace", "")
        except (ValueError, AttributeError):
            raise ParseError("unreadable JSON description") from None
        if not ns:
            raise ParseError("JSON description lacks a 'namespace' key")
        return ns
    try:
        for _event, elem in ET.iterparse(io.BytesIO(content), events=("start",)):
            if elem.tag.startswith("{"):
                return elem.tag[1:].split("}", 1)[0]
            raise ParseError(f"root element {elem.tag!r} has no namespace")
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from None
    raise ParseError("empty document")
