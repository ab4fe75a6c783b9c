"""Built-in value matchers: text, ontology concept, data type and QoS."""

from __future__ import annotations

import functools
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import ConfigError, UnitMismatch
from ..model import AdvertisedProperty, DataTypeRef, QoSOperator, ServiceRequirement

XSD_NAMESPACE = "http://www.w3.org/2001/XMLSchema"
JSON_SCHEMA_NAMESPACE = "https://json-schema.org/draft/2020-12/schema"

_TOKEN = re.compile(r"[a-z0-9]+")


def _data_lines(name: str) -> list[list[str]]:
    text = resources.files("proteus.plugins").joinpath("data", name).read_text(encoding="utf-8")
    return [line.split("\t") for line in text.splitlines() if line.strip() and not line.startswith("#")]


# -- text -------------------------------------------------------------------


@functools.lru_cache(maxsize=65536)
def _token_vector(text: str) -> tuple[Counter, int]:
    counts = Counter(_TOKEN.findall(text.lower()))
    return counts, sum(c * c for c in counts.values())


def text_similarity(a: str, b: str) -> float:
    """Cosine similarity of lowercase alphanumeric token counts."""
    va, na2 = _token_vector(a)
    vb, nb2 = _token_vector(b)
    if not na2 or not nb2:
        return 0.0
    if len(va) > len(vb):
        va, vb = vb, va
    dot = sum(c * vb[t] for t, c in va.items() if t in vb)
    # One square root over integer norms keeps identical texts at exactly 1.
    return min(1.0, dot / math.sqrt(na2 * nb2))


# -- ontology ---------------------------------------------------------------


@dataclass(frozen=True)
class OntologyTaxonomy:
    """A forest of concepts linked by child -> parent ``isA`` edges."""

    parents: Mapping[str, str] = field(default_factory=dict)
    concepts: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        concepts = set(self.concepts) | set(self.parents) | set(self.parents.values())
        object.__setattr__(self, "concepts", frozenset(concepts))
        for start in self.parents:
            seen = {start}
            node = self.parents.get(start)
            while node is not None:
                if node in seen:
                    raise ConfigError(f"taxonomy cycle through {node!r}")
                seen.add(node)
                node = self.parents.get(node)

    @classmethod
    def from_edges(cls, edges: Iterable[tuple[str, str]]) -> OntologyTaxonomy:
        parents: dict[str, str] = {}
        for child, parent in edges:
            if child in parents and parents[child] != parent:
                raise ConfigError(f"concept {child!r} has two parents; taxonomy must be a forest")
            parents[child] = parent
        return cls(parents)

    @classmethod
    def load(cls, path: str | Path) -> OntologyTaxonomy:
        """Read ``child<TAB>parent`` lines; lines starting with ``#`` are comments."""
        edges = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                # Only whole-line comments: concept URIs may contain '#'.
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 2 or not all(p.strip() for p in parts):
                    raise ConfigError(f"{path}:{lineno}: expected child<TAB>parent")
                edges.append((parts[0].strip(), parts[1].strip()))
        return cls.from_edges(edges)

    def dump(self) -> str:
        return "".join(f"{c}\t{p}\n" for c, p in sorted(self.parents.items()))

    def ancestors(self, concept: str) -> Iterable[tuple[str, int]]:
        depth = 0
        node = self.parents.get(concept)
        while node is not None:
            depth += 1
            yield node, depth
            node = self.parents.get(node)

    def distance(self, c1: str, c2: str) -> int | None:
        """Number of isA edges between two concepts when one subsumes the other."""
        for node, d in self.ancestors(c1):
            if node == c2:
                return d
        for node, d in self.ancestors(c2):
            if node == c1:
                return d
        return None


def ontology_similarity(c1: str, c2: str, taxonomy: OntologyTaxonomy) -> float:
    """1 for the same concept, 1/(1+path) under subsumption, else 0."""
    if c1 == c2:
        return 1.0
    if c1 not in taxonomy.concepts or c2 not in taxonomy.concepts:
        return 0.0
    d = taxonomy.distance(c1, c2)
    return 0.0 if d is None else 1.0 / (1.0 + d)


class TaxonomyPathMatcher:
    def __init__(self, taxonomy: OntologyTaxonomy | None = None) -> None:
        self.taxonomy = taxonomy or OntologyTaxonomy()

    def __call__(self, c1: str, c2: str) -> float:
        return ontology_similarity(c1, c2, self.taxonomy)


class TokenCosineMatcher:
    def __call__(self, a: str, b: str) -> float:
        return text_similarity(a, b)


# -- data types -------------------------------------------------------------

WIDENING_SCORE = 0.8


def load_promotions() -> dict[str, frozenset[tuple[str, str]]]:
    """Promotion table per namespace, closed under transitivity."""
    edges: dict[str, set[tuple[str, str]]] = {}
    for ns, narrow, wide in _data_lines("promotions.tsv"):
        edges.setdefault(ns, set()).add((narrow, wide))
    closed = {}
    for ns, pairs in edges.items():
        pairs = set(pairs)
        while True:
            extra = {(a, d) for a, b in pairs for c, d in pairs if b == c} - pairs
            if not extra:
                break
            pairs |= extra
        closed[ns] = frozenset(pairs)
    return closed


class NamespaceDatatypeMatcher:
    """Exact match scores 1, a table-listed widening in either direction 0.8."""

    def __init__(self, namespace: str, promotions: frozenset[tuple[str, str]] = frozenset()) -> None:
        self.namespace = namespace
        self.promotions = promotions

    def __call__(self, t1: DataTypeRef, t2: DataTypeRef) -> float:
        if t1.namespace != t2.namespace:
            return 0.0
        if t1.local_name == t2.local_name:
            return 1.0
        pair = (t1.local_name, t2.local_name)
        if pair in self.promotions or pair[::-1] in self.promotions:
            return WIDENING_SCORE
        return 0.0


def datatype_match(t1: DataTypeRef, t2: DataTypeRef) -> float:
    if t1.namespace != t2.namespace:
        return 0.0
    table = _promotions().get(t1.namespace, frozenset())
    return NamespaceDatatypeMatcher(t1.namespace, table)(t1, t2)


@functools.lru_cache(maxsize=1)
def _promotions() -> dict[str, frozenset[tuple[str, str]]]:
    return load_promotions()


# -- QoS --------------------------------------------------------------------


@dataclass(frozen=True)
class Unit:
    name: str
    dimension: str
    factor: float


@functools.lru_cache(maxsize=1)
def unit_table() -> dict[str, Unit]:
    return {name: Unit(name, dim, float(f)) for name, dim, f in _data_lines("units.tsv")}


_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(text: str) -> tuple[float, str | None]:
    """Split ``"150ms"``, ``"98%"`` or ``"0.2 s"`` into value and unit."""
    m = _QUANTITY.match(text)
    if not m:
        raise ValueError(f"not a quantity: {text!r}")
    return float(m.group(1)), (m.group(2) or None)


class NumericQoSMatcher:
    """Binary constraint check: 1.0 when the advertised value satisfies the requirement."""

    def __init__(self, name: str, default_unit: str) -> None:
        self.name = name
        self.default_unit = default_unit
        self.dimension = unit_table()[default_unit].dimension

    def _unit(self, unit: str | None) -> Unit:
        table = unit_table()
        unit = unit or self.default_unit
        if unit not in table or table[unit].dimension != self.dimension:
            raise UnitMismatch(f"{self.name}: unit {unit!r} is not a {self.dimension} unit")
        return table[unit]

    def check_requirement(self, r: ServiceRequirement) -> None:
        self._unit(r.qos_unit)

    def __call__(self, r: ServiceRequirement, p: AdvertisedProperty) -> float:
        wanted = r.qos_value * self._unit(r.qos_unit).factor
        try:
            offered = p.qos_value * self._unit(p.unit).factor
        except UnitMismatch:
            # Unverifiable offer: treat as not satisfying the constraint.
            return 0.0
        if r.qos_operator is QoSOperator.LE:
            ok = offered <= wanted or math.isclose(offered, wanted, rel_tol=1e-9)
        elif r.qos_operator is QoSOperator.GE:
            ok = offered >= wanted or math.isclose(offered, wanted, rel_tol=1e-9)
        else:
            ok = math.isclose(offered, wanted, rel_tol=1e-9, abs_tol=1e-12)
        return 1.0 if ok else 0.0


#: Built-in QoS matchers and the unit assumed when a value carries none.
BUILTIN_QOS = {
    "ResponseTime": "ms",
    "Availability": "ratio",
    "Reliability": "ratio",
    "Throughput": "req/s",
}


def qos_match(name: str, r: ServiceRequirement, p: AdvertisedProperty) -> float:
    """Evaluate a QoS requirement with the built-in matcher for ``name``.

    Raises :class:`UnitMismatch` when the requirement's unit cannot be
    converted to the matcher's dimension.
    """
    matcher = NumericQoSMatcher(name, BUILTIN_QOS[name])
    matcher.check_requirement(r)
    return matcher(r, p)
