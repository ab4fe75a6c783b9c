"""Crawler subsystem: harvesters, parsers and the crawl/sync loop."""

from .base import CrawlReport, Harvester, Parser, ServicePublication, sniff_namespace
from .engine import Crawler, Scheduler, run_scheduled

__all__ = [
    "CrawlReport",
    "Crawler",
    "Harvester",
    "Parser",
    "Scheduler",
    "ServicePublication",
    "run_scheduled",
    "sniff_namespace",
]
