"""Extensibility mechanism: plugin registry, selector and built-in plugins."""

from .builtin import build_suite, default_registry, register_builtin_plugins
from .matchers import (
    OntologyTaxonomy,
    datatype_match,
    ontology_similarity,
    qos_match,
    text_similarity,
)
from .registry import PluginDescriptor, PluginKind, PluginRegistry

__all__ = [
    "OntologyTaxonomy",
    "PluginDescriptor",
    "PluginKind",
    "PluginRegistry",
    "build_suite",
    "datatype_match",
    "default_registry",
    "ontology_similarity",
    "qos_match",
    "register_builtin_plugins",
    "text_similarity",
]
