"""Registration of the built-in plugins and assembly of a matcher suite."""

from __future__ import annotations

from ..algebra import MatcherSuite
from ..model import DataTypeRef
from .matchers import (
    BUILTIN_QOS,
    JSON_SCHEMA_NAMESPACE,
    XSD_NAMESPACE,
    NamespaceDatatypeMatcher,
    NumericQoSMatcher,
    OntologyTaxonomy,
    TaxonomyPathMatcher,
    TokenCosineMatcher,
    load_promotions,
)
from .registry import PluginDescriptor, PluginKind, PluginRegistry

DEFAULT_TEXT_MATCHER = "token-cosine"
DEFAULT_ONTOLOGY_MATCHER = "taxonomy-path"


def register_builtin_plugins(registry: PluginRegistry, taxonomy: OntologyTaxonomy | None = None) -> PluginRegistry:
    from ..crawler import harvesters, parsers

    def reg(kind, key, factory, description=""):
        registry.register(PluginDescriptor(kind, key, factory, description=description))

    reg(PluginKind.HARVESTER, "dir", harvesters.DirectoryHarvester, "description files in a folder")
    reg(PluginKind.HARVESTER, "http-index", harvesters.HttpIndexHarvester, "HTTP index of description URLs")
    reg(PluginKind.HARVESTER, "sim-registry", harvesters.SimRegistryHarvester, "simulated web service registry")
    reg(PluginKind.HARVESTER, "sim-p2p", harvesters.SimP2PHarvester, "simulated peer group")
    reg(PluginKind.HARVESTER, "sim-grid", harvesters.SimGridHarvester, "simulated virtual organisation index")

    for parser in (parsers.WSDLSubsetParser, parsers.P2PJSONParser, parsers.GridDescriptorParser):
        reg(PluginKind.PARSER, parser.namespace, parser, parser.__doc__ or parser.__name__)

    for name, unit in BUILTIN_QOS.items():
        reg(PluginKind.QOS_MATCHER, name, lambda n=name, u=unit: NumericQoSMatcher(n, u), f"binary, default unit {unit}")

    promotions = load_promotions()
    for ns in (XSD_NAMESPACE, JSON_SCHEMA_NAMESPACE):
        table = promotions.get(ns, frozenset())
        reg(PluginKind.DATATYPE_MATCHER, ns, lambda ns=ns, t=table: NamespaceDatatypeMatcher(ns, t), "exact or widening")

    reg(PluginKind.TEXT_MATCHER, DEFAULT_TEXT_MATCHER, TokenCosineMatcher, "token count cosine")
    reg(
        PluginKind.ONTOLOGY_MATCHER,
        DEFAULT_ONTOLOGY_MATCHER,
        lambda: TaxonomyPathMatcher(taxonomy),
        "subsumption path length",
    )
    return registry


def default_registry(taxonomy: OntologyTaxonomy | None = None) -> PluginRegistry:
    return register_builtin_plugins(PluginRegistry(), taxonomy)


def build_suite(
    registry: PluginRegistry,
    text: str = DEFAULT_TEXT_MATCHER,
    ontology: str = DEFAULT_ONTOLOGY_MATCHER,
) -> MatcherSuite:
    """Resolve a matcher suite from the registry.

    Datatype matchers are selected per namespace at call time; two types of
    different namespaces never match.
    """

    def datatype(t1: DataTypeRef, t2: DataTypeRef) -> float:
        if t1.namespace != t2.namespace:
            return 0.0
        return registry.select(PluginKind.DATATYPE_MATCHER, t1.namespace)(t1, t2)

    qos = {d.key: registry.select(PluginKind.QOS_MATCHER, d.key) for d in registry.list(PluginKind.QOS_MATCHER)}
    return MatcherSuite(
        text=registry.select(PluginKind.TEXT_MATCHER, text),
        ontology=registry.select(PluginKind.ONTOLOGY_MATCHER, ontology),
        datatype=datatype,
        qos=qos,
    )


__all__ = ["build_suite", "default_registry", "register_builtin_plugins"]
