"""Engine configuration file and assembly of the engine's parts.

The configuration is a JSON object::

    {
      "store": "store.jsonl",
      "taxonomy": "taxonomy.tsv",
      "brokers": [
        {"id": "reg-1", "type": "sim-registry",
         "accessDetails": {"path": "brokers/reg-1"},
         "crawlIntervalSeconds": 300}
      ]
    }

Relative ``store``, ``taxonomy`` and ``accessDetails.path`` values are
resolved against the configuration file's directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from .clock import Clock, SystemClock
from .crawler import Crawler
from .errors import ConfigError, SchemaError
from .model import BrokerDescriptor
from .plugins import OntologyTaxonomy, PluginKind, build_suite, default_registry
from .plugins.registry import PluginRegistry
from .queryproc import QueryProcessor
from .repository import Repository

CONFIG_ENV = "PROTEUS_CONFIG"


@dataclass
class EngineConfig:
    brokers: list[BrokerDescriptor] = field(default_factory=list)
    store: Path | None = None
    taxonomy: Path | None = None


def broker_from_dict(raw: dict, base: Path | None = None) -> BrokerDescriptor:
    try:
        access = {str(k): str(v) for k, v in (raw.get("accessDetails") or {}).items()}
        if base is not None and "path" in access and not os.path.isabs(access["path"]):
            access["path"] = str(base / access["path"])
        return BrokerDescriptor(
            id=raw["id"],
            broker_type=raw["type"],
            access_details=access,
            crawl_interval_seconds=int(raw.get("crawlIntervalSeconds", 3600)),
        )
    except KeyError as exc:
        raise ConfigError(f"broker entry lacks {exc}") from None
    except (SchemaError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def broker_to_dict(broker: BrokerDescriptor) -> dict:
    return {
        "id": broker.id,
        "type": broker.broker_type,
        "accessDetails": dict(broker.access_details),
        "crawlIntervalSeconds": broker.crawl_interval_seconds,
    }


def load_config(path: str | Path | None = None) -> EngineConfig:
    if path is None:
        path = os.environ.get(CONFIG_ENV)
        if not path:
            raise ConfigError(f"no configuration given (use --config or set {CONFIG_ENV})")
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    base = path.resolve().parent
    brokers = [broker_from_dict(b, base) for b in raw.get("brokers", [])]
    ids = [b.id for b in brokers]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ConfigError(f"duplicate broker ids: {', '.join(dupes)}")

    def resolve(key: str) -> Path | None:
        value = raw.get(key)
        return None if not value else (base / value if not os.path.isabs(value) else Path(value))

    return EngineConfig(brokers, resolve("store"), resolve("taxonomy"))


class Engine:
    """Wires registry, repository, crawler and query processor together."""

    def __init__(
        self,
        config: EngineConfig,
        clock: Clock | None = None,
        registry: PluginRegistry | None = None,
        repository: Repository | None = None,
    ) -> None:
        self.config = config
        self.clock = clock or SystemClock()
        taxonomy = OntologyTaxonomy.load(config.taxonomy) if config.taxonomy else None
        self.registry = registry or default_registry(taxonomy)
        for broker in config.brokers:
            if not self.registry.has(PluginKind.HARVESTER, broker.broker_type):
                raise ConfigError(f"broker {broker.id}: no harvester for type {broker.broker_type!r}")
        if repository is None:
            repository = (
                Repository.load(config.store, missing_ok=True) if config.store else Repository()
            )
        self.repository = repository
        self.crawler = Crawler(self.registry, self.repository, self.clock)
        self.processor = QueryProcessor(
            self.repository, build_suite(self.registry), self.clock, known_brokers=[b.id for b in config.brokers]
        )

    def crawl_once(self):
        return self.crawler.crawl_once(self.config.brokers)
