"""Crawler: harvest, parse, and store, one broker at a time."""

from __future__ import annotations

import logging
import threading
from collections import defaultdict
from dataclasses import replace
from typing import Sequence

from ..clock import Clock, SystemClock
from ..errors import AccessDenied, HarvestError, PluginNotFound, ProteusError, StorageError
from ..model import BrokerDescriptor, ServiceAdvertisement
from ..plugins.registry import PluginKind, PluginRegistry
from ..repository import Repository
from .base import CrawlReport, ServicePublication

log = logging.getLogger(__name__)


class Crawler:
    """Visits brokers through harvester plugins and syncs the repository.

    Each broker is fully re-synchronised on every visit: advertisements of
    publications that disappeared from the broker are dropped. Crawls of the
    same broker never overlap.
    """

    def __init__(self, registry: PluginRegistry, repository: Repository, clock: Clock | None = None) -> None:
        self.registry = registry
        self.repository = repository
        self.clock = clock or SystemClock()
        self._broker_locks: defaultdict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()

    def _lock_for(self, broker_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._broker_locks[broker_id]

    def harvest(self, broker: BrokerDescriptor) -> list[ServicePublication]:
        harvester = self.registry.select(PluginKind.HARVESTER, broker.broker_type)
        try:
            return harvester.harvest(broker)
        except (KeyError, TypeError, ValueError, OSError) as exc:
            # Malformed listings or I/O trouble stay confined to this broker.
            raise HarvestError(f"broker {broker.id}: harvest failed: {exc!r}") from exc

    def parse(self, publication: ServicePublication) -> list[ServiceAdvertisement]:
        parser = self.registry.select(PluginKind.PARSER, publication.schema_namespace)
        return parser.parse(publication)

    def crawl_broker(self, broker: BrokerDescriptor) -> CrawlReport:
        with self._lock_for(broker.id):
            return self._crawl(broker)

    def _crawl(self, broker: BrokerDescriptor) -> CrawlReport:
        report = CrawlReport(broker.id, started_at=self.clock.now())
        try:
            publications = self.harvest(broker)
        except (HarvestError, PluginNotFound) as exc:
            if isinstance(exc, (AccessDenied, PluginNotFound)):
                log.error("skipping broker %s: %s", broker.id, exc)
            else:
                log.warning("broker %s unreachable: %s", broker.id, exc)
            report.error = (exc.code, str(exc))
            report.finished_at = self.clock.now()
            return report

        report.publications_found = len(publications)
        now = self.clock.now()
        batch: dict[str, ServiceAdvertisement] = {}
        for pub in publications:
            try:
                ads = self.parse(replace(pub, retrieved_at=now))
            except ProteusError as exc:
                report.parse_failures.append((pub.document_id, f"{exc.code}: {exc}"))
                continue
            for ad in ads:
                batch[ad.id] = replace(ad, harvested_at=now)
        try:
            self.repository.upsert_broker_batch(broker.id, list(batch.values()))
        except StorageError as exc:
            log.error("cannot store advertisements of %s: %s", broker.id, exc)
            report.error = (exc.code, str(exc))
        else:
            report.advertisements_stored = len(batch)
        report.finished_at = self.clock.now()
        log.info(report.summary())
        return report

    def crawl_once(self, brokers: Sequence[BrokerDescriptor]) -> list[CrawlReport]:
        """Crawl every broker in order; a failing broker never stops the others."""
        return [self.crawl_broker(b) for b in brokers]


class Scheduler:
    """Periodic crawling driven by an injectable clock.

    Each broker is crawled at start-up and then again every
    ``crawl_interval_seconds``. A crawl that outlasts its interval pushes the
    next visit back to its own end, so crawls of one broker never overlap.
    """

    def __init__(self, crawler: Crawler, brokers: Sequence[BrokerDescriptor], clock: Clock | None = None) -> None:
        self.crawler = crawler
        self.brokers = list(brokers)
        self.clock = clock or crawler.clock
        self.reports: list[CrawlReport] = []
        self.crawl_counts: dict[str, int] = {b.id: 0 for b in self.brokers}

    def run(self, duration: float | None = None, stop: threading.Event | None = None) -> list[CrawlReport]:
        if not self.brokers:
            return self.reports
        start = self.clock.time()
        end = start + duration if duration is not None else float("inf")
        next_due = {b.id: start for b in self.brokers}
        while not (stop and stop.is_set()):
            broker = min(self.brokers, key=lambda b: next_due[b.id])
            due = next_due[broker.id]
            if due >= end:
                break
            now = self.clock.time()
            if due > now:
                self.clock.sleep(due - now)
                continue
            began = self.clock.time()
            try:
                report = self.crawler.crawl_broker(broker)
            except ProteusError as exc:
                log.error("crawl of %s failed: %s", broker.id, exc)
                report = CrawlReport(broker.id, self.clock.now(), self.clock.now(), error=(exc.code, str(exc)))
            self.reports.append(report)
            self.crawl_counts[broker.id] += 1
            next_due[broker.id] = max(began + broker.crawl_interval_seconds, self.clock.time())
        return self.reports


def run_scheduled(
    crawler: Crawler,
    brokers: Sequence[BrokerDescriptor],
    clock: Clock | None = None,
    duration: float | None = None,
    stop: threading.Event | None = None,
) -> Scheduler:
    scheduler = Scheduler(crawler, brokers, clock)
    scheduler.run(duration, stop)
    return scheduler
