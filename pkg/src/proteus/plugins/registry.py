"""Plugin registry and selector."""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from typing import Any, Callable

from ..errors import DuplicatePlugin, PluginNotFound


class PluginKind(str, enum.Enum):
    HARVESTER = "Harvester"
    PARSER = "Parser"
    QOS_MATCHER = "QoSMatcher"
    DATATYPE_MATCHER = "DatatypeMatcher"
    TEXT_MATCHER = "TextMatcher"
    ONTOLOGY_MATCHER = "OntologyMatcher"


@dataclass(frozen=True)
class PluginDescriptor:
    """Meta-information about one contributed plugin.

    ``key`` is interpreted per kind: broker type for harvesters, schema
    namespace for parsers, QoS name for QoS matchers, data type namespace for
    datatype matchers and a free name for text/ontology matchers.

    With ``shared=True`` the factory is called once and the instance reused,
    which requires the instance to be safe for concurrent use.
    """

    kind: PluginKind
    key: str
    factory: Callable[[], Any]
    version: str = "1.0"
    shared: bool = True
    description: str = ""


class PluginRegistry:
    def __init__(self) -> None:
        self._descriptors: dict[tuple[PluginKind, str], PluginDescriptor] = {}
        self._instances: dict[tuple[PluginKind, str], Any] = {}
        self._lock = threading.RLock()

    def register(self, descriptor: PluginDescriptor) -> None:
        slot = (PluginKind(descriptor.kind), descriptor.key)
        with self._lock:
            if slot in self._descriptors:
                raise DuplicatePlugin(slot[0].value, descriptor.key)
            self._descriptors[slot] = descriptor

    def deregister(self, kind: PluginKind, key: str) -> None:
        slot = (PluginKind(kind), key)
        with self._lock:
            if slot not in self._descriptors:
                raise PluginNotFound(slot[0].value, key)
            del self._descriptors[slot]
            self._instances.pop(slot, None)

    def descriptor(self, kind: PluginKind, key: str) -> PluginDescriptor:
        try:
            return self._descriptors[(PluginKind(kind), key)]
        except KeyError:
            raise PluginNotFound(PluginKind(kind).value, key) from None

    def select(self, kind: PluginKind, key: str) -> Any:
        """Resolve and instantiate the plugin registered under ``(kind, key)``."""
        desc = self.descriptor(kind, key)
        if not desc.shared:
            return desc.factory()
        slot = (desc.kind, desc.key)
        instance = self._instances.get(slot)
        if instance is None:
            with self._lock:
                instance = self._instances.get(slot)
                if instance is None:
                    instance = desc.factory()
                    self._instances[slot] = instance
        return instance

    def has(self, kind: PluginKind, key: str) -> bool:
        return (PluginKind(kind), key) in self._descriptors

    def list(self, kind: PluginKind | None = None) -> list[PluginDescriptor]:
        """Descriptors in registration order, optionally of a single kind."""
        with self._lock:
            items = list(self._descriptors.values())
        if kind is not None:
            items = [d for d in items if d.kind is PluginKind(kind)]
        return items
