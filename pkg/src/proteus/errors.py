"""Exception hierarchy shared across the engine."""

from __future__ import annotations


class ProteusError(Exception):
    """Base class for all engine errors."""

    #: Short machine-readable code used in fault documents.
    code = "InternalError"


class DocumentError(ProteusError):
    """A USQL document could not be turned into a domain object."""

    def __init__(self, message: str, path: str = "") -> None:
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class XMLSyntaxError(DocumentError):
    """The document is not well-formed XML."""

    code = "SyntaxError"


class SchemaError(DocumentError):
    """The document is well-formed but violates the USQL schema or invariants."""

    code = "SchemaError"


class DecodeError(ProteusError):
    """A line of an advertisement store could not be decoded."""

    code = "DecodeError"

    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class StorageError(ProteusError):
    code = "StorageError"


class UnknownFilterName(ProteusError):
    code = "UnknownFilterName"

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"unknown search filter {name!r}")


class UnknownTarget(ProteusError):
    code = "UnknownTarget"

    def __init__(self, broker_id: str) -> None:
        self.broker_id = broker_id
        super().__init__(f"unknown search target {broker_id!r}")


class UnknownQoSName(ProteusError):
    code = "UnknownQoSName"

    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"no QoS matcher registered for {name!r}")


class UnitMismatch(ProteusError):
    code = "UnitMismatch"


class EmptyRequirements(ProteusError):
    code = "EmptyRequirements"


class NonPositiveWeight(ProteusError):
    code = "NonPositiveWeight"


class PluginError(ProteusError):
    code = "PluginError"


class DuplicatePlugin(PluginError):
    code = "DuplicatePlugin"

    def __init__(self, kind: object, key: str) -> None:
        self.kind = kind
        self.key = key
        super().__init__(f"plugin already registered: {kind}/{key}")


class PluginNotFound(PluginError):
    code = "PluginNotFound"

    def __init__(self, kind: object, key: str) -> None:
        self.kind = kind
        self.key = key
        super().__init__(f"no plugin registered for {kind}/{key}")


class HarvestError(ProteusError):
    code = "HarvestError"


class BrokerUnreachable(HarvestError):
    """Transient failure; the broker is retried on its next scheduled visit."""

    code = "BrokerUnreachable"


class AccessDenied(HarvestError):
    """Permanent failure; the broker is skipped."""

    code = "AccessDenied"


class ParseError(ProteusError):
    code = "ParseError"


class NotFound(ProteusError):
    code = "NotFound"


class ConfigError(ProteusError):
    code = "ConfigError"
