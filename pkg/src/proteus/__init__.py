"""Unified discovery over heterogeneous service brokers.

Advertisements harvested from web service registries, peer groups and grid
indexes are normalised into one store and ranked against weighted USQL
requests.
"""

from .errors import ProteusError
from .model import (
    AdvertisedProperty,
    BrokerDescriptor,
    DataTypeRef,
    MatchedServiceEntry,
    QoSOperator,
    RequirementKind,
    SearchFilter,
    ServiceAdvertisement,
    ServiceRequirement,
    ServiceType,
    USQLRequest,
    USQLResponse,
)

__version__ = "0.1.0"

__all__ = [
    "AdvertisedProperty",
    "BrokerDescriptor",
    "DataTypeRef",
    "MatchedServiceEntry",
    "ProteusError",
    "QoSOperator",
    "RequirementKind",
    "SearchFilter",
    "ServiceAdvertisement",
    "ServiceRequirement",
    "ServiceType",
    "USQLRequest",
    "USQLResponse",
]
