"""Built-in harvesters.

``dir`` and ``http-index`` read real description files; the ``sim-*``
harvesters read the on-disk brokers materialised by :mod:`proteus.brokersim`,
each with its own listing layout:

sim-registry
    ``registry.json`` lists entries with a classification and a file.
sim-p2p
    ``peers/<peerId>/*.json``; every publication carries the broker's peer
    group and its peer id.
sim-grid
    ``index.json`` names the virtual organisation and its resource files.

Every simulated broker directory also holds ``broker.json`` with an
``online`` flag (offline means unreachable) and an optional access ``token``.
"""

from __future__ import annotations

import json
import logging
import urllib.error
import urllib.parse
import urllib.request
from pathlib import Path

from ..errors import AccessDenied, BrokerUnreachable, HarvestError, ParseError
from ..model import BrokerDescriptor
from .base import Harvester, ServicePublication, sniff_namespace

log = logging.getLogger(__name__)

#: accessDetails keys with this prefix become publication broker attributes.
ATTRIBUTE_PREFIX = "attr."

DESCRIPTION_SUFFIXES = (".wsdl", ".xml", ".json", ".grid")


def _broker_attributes(broker: BrokerDescriptor) -> dict[str, str]:
    return {
        k[len(ATTRIBUTE_PREFIX):]: v
        for k, v in broker.access_details.items()
        if k.startswith(ATTRIBUTE_PREFIX) and v
    }


def _root(broker: BrokerDescriptor) -> Path:
    raw = broker.access_details.get("path")
    if not raw:
        raise AccessDenied(f"broker {broker.id}: accessDetails.path is not set")
    root = Path(raw)
    if not root.is_dir():
        raise BrokerUnreachable(f"broker {broker.id}: {root} is not reachable")
    return root


def _read(path: Path, broker: BrokerDescriptor) -> bytes:
    try:
        return path.read_bytes()
    except PermissionError as exc:
        raise AccessDenied(f"broker {broker.id}: {exc}") from None
    except FileNotFoundError as exc:
        raise BrokerUnreachable(f"broker {broker.id}: {exc}") from None


def _read_json(path: Path, broker: BrokerDescriptor):
    try:
        return json.loads(_read(path, broker))
    except ValueError as exc:
        raise HarvestError(f"broker {broker.id}: corrupt listing {path.name}: {exc}") from None


def _publication(broker, doc_id: str, content: bytes, attrs: dict[str, str]) -> ServicePublication:
    try:
        namespace = sniff_namespace(content)
    except ParseError:
        # Left for the crawler to report as a parse failure.
        namespace = "urn:proteus:unrecognized"
    return ServicePublication(broker.id, doc_id, namespace, content, attrs)


class DirectoryHarvester(Harvester):
    """Every description file below ``accessDetails.path``, sorted by relative path."""

    def harvest(self, broker: BrokerDescriptor) -> list[ServicePublication]:
        root = _root(broker)
        attrs = _broker_attributes(broker)
        files = sorted(
            p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in DESCRIPTION_SUFFIXES
        )
        return [
            _publication(broker, p.relative_to(root).as_posix(), _read(p, broker), attrs) for p in files
        ]


class HttpIndexHarvester(Harvester):
    """Fetches ``accessDetails.url``: a plain-text index of description URLs, one per line."""

    def _get(self, url: str, broker: BrokerDescriptor) -> bytes:
        req = urllib.request.Request(url)
        token = broker.access_details.get("token")
        if token:
            req.add_header("Authorization", f"Bearer {token}")
        timeout = float(broker.access_details.get("timeout", "10"))
        try:
            with urllib.request.urlopen(req, timeout=timeout) as resp:
                return resp.read()
        except urllib.error.HTTPError as exc:
            if exc.code in (401, 403):
                raise AccessDenied(f"broker {broker.id}: HTTP {exc.code} for {url}") from None
            raise BrokerUnreachable(f"broker {broker.id}: HTTP {exc.code} for {url}") from None
        except (urllib.error.URLError, OSError) as exc:
            raise BrokerUnreachable(f"broker {broker.id}: {exc}") from None

    def harvest(self, broker: BrokerDescriptor) -> list[ServicePublication]:
        index_url = broker.access_details.get("url")
        if not index_url:
            raise AccessDenied(f"broker {broker.id}: accessDetails.url is not set")
        index = self._get(index_url, broker).decode("utf-8")
        attrs = _broker_attributes(broker)
        pubs = []
        for line in index.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            url = urllib.parse.urljoin(index_url, line)
            pubs.append(_publication(broker, url, self._get(url, broker), attrs))
        return pubs


class _SimHarvester(Harvester):
    broker_type = ""

    def _open(self, broker: BrokerDescriptor) -> tuple[Path, dict]:
        root = _root(broker)
        meta_path = root / "broker.json"
        if not meta_path.exists():
            raise BrokerUnreachable(f"broker {broker.id}: no broker.json in {root}")
        meta = _read_json(meta_path, broker)
        if meta.get("brokerType") != self.broker_type:
            raise AccessDenied(
                f"broker {broker.id}: directory holds a {meta.get('brokerType')!r} broker, not {self.broker_type!r}"
            )
        if not meta.get("online", True):
            raise BrokerUnreachable(f"broker {broker.id} is offline")
        token = meta.get("token")
        if token and broker.access_details.get("token") != token:
            raise AccessDenied(f"broker {broker.id}: invalid access token")
        return root, meta

    def _attrs(self, broker: BrokerDescriptor, meta: dict, **extra: str) -> dict[str, str]:
        attrs = dict(meta.get("attributes", {}))
        attrs.update(_broker_attributes(broker))
        attrs.update({k: v for k, v in extra.items() if v})
        return attrs


class SimRegistryHarvester(_SimHarvester):
    broker_type = "sim-registry"

    def harvest(self, broker: BrokerDescriptor) -> list[ServicePublication]:
        root, meta = self._open(broker)
        listing = _read_json(root / "registry.json", broker)
        pubs = []
        for entry in sorted(listing.get("entries", []), key=lambda e: e["key"]):
            content = _read(root / entry["file"], broker)
            attrs = self._attrs(broker, meta, classification=entry.get("classification", ""))
            pubs.append(_publication(broker, entry["key"], content, attrs))
        return pubs


class SimP2PHarvester(_SimHarvester):
    broker_type = "sim-p2p"

    def harvest(self, broker: BrokerDescriptor) -> list[ServicePublication]:
        root, meta = self._open(broker)
        pubs = []
        peers = root / "peers"
        if not peers.is_dir():
            return pubs
        for peer_dir in sorted(p for p in peers.iterdir() if p.is_dir()):
            for path in sorted(peer_dir.glob("*.json")):
                attrs = self._attrs(broker, meta, peerId=peer_dir.name)
                doc_id = f"{peer_dir.name}/{path.name}"
                pubs.append(_publication(broker, doc_id, _read(path, broker), attrs))
        return pubs


class SimGridHarvester(_SimHarvester):
    broker_type = "sim-grid"

    def harvest(self, broker: BrokerDescriptor) -> list[ServicePublication]:
        root, meta = self._open(broker)
        index = _read_json(root / "index.json", broker)
        vo = index.get("virtualOrganization", "")
        pubs = []
        for res in sorted(index.get("resources", []), key=lambda r: r["key"]):
            attrs = self._attrs(broker, meta, virtualOrganization=vo)
            pubs.append(_publication(broker, res["key"], _read(root / res["file"], broker), attrs))
        return pubs
