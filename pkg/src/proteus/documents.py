"""XML codecs for USQLRequest, USQLResponse and fault documents.

Serialization is canonical: fixed element and attribute order, two-space
indentation, an XML declaration and a trailing newline. Request numbers use
the shortest decimal form that reads back to the same float; response scores
use six fractional digits.
"""

from __future__ import annotations

import functools
import warnings
import xml.etree.ElementTree as ET
from datetime import datetime
from decimal import Decimal
from importlib import resources

from .errors import SchemaError, XMLSyntaxError
from .model import (
    CriterionScore,
    DataTypeRef,
    InvocationDetails,
    MatchedServiceEntry,
    QoSOperator,
    RequirementKind,
    SearchFilter,
    ServiceRequirement,
    ServiceType,
    USQLRequest,
    USQLResponse,
)

_DECLARATION = '<?xml version="1.0" encoding="UTF-8"?>\n'

_REQUIREMENT_ATTRS = {
    RequirementKind.QOS: {"weight", "name", "operator", "value", "unit"},
}
_DESCRIBED_ATTRS = {"weight", "description", "ontologyReference"}


class UnknownElementWarning(UserWarning):
    """Raised through :mod:`warnings` for unknown content in lenient mode."""


def format_decimal(value: float) -> str:
    """Shortest plain decimal string that parses back to ``value``."""
    text = repr(float(value))
    if "e" in text or "E" in text:
        text = format(Decimal(text), "f")
    if "." not in text:
        text += ".0"
    return text


def format_score(value: float) -> str:
    return f"{value:.6f}"


def _to_bytes(root: ET.Element) -> bytes:
    ET.indent(root, space="  ")
    return (_DECLARATION + ET.tostring(root, encoding="unicode") + "\n").encode("utf-8")


def _parse_root(document: bytes | str, expected: str) -> ET.Element:
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        raise XMLSyntaxError(f"malformed XML: {exc}") from None
    if root.tag != expected:
        raise SchemaError(f"expected root element {expected}, found {root.tag}", f"/{root.tag}")
    return root


class _Reader:
    """Tracks strictness and reports unknown content with its element path."""

    def __init__(self, strict: bool) -> None:
        self.strict = strict

    def unknown(self, what: str, path: str) -> None:
        if self.strict:
            raise SchemaError(f"unknown {what}", path)
        warnings.warn(f"{path}: ignoring unknown {what}", UnknownElementWarning, stacklevel=4)

    def check_attrs(self, elem: ET.Element, allowed: set[str], path: str) -> None:
        for name in elem.attrib:
            if name not in allowed:
                self.unknown(f"attribute {name!r}", f"{path}/@{name}")

    def check_no_children(self, elem: ET.Element, path: str, allowed: frozenset[str] = frozenset()) -> None:
        for child in elem:
            if child.tag not in allowed:
                self.unknown(f"element {child.tag!r}", f"{path}/{child.tag}")


def _number(elem: ET.Element, name: str, path: str, default: float | None = None) -> float | None:
    raw = elem.get(name)
    if raw is None:
        return default
    try:
        value = Decimal(raw.strip())
    except ArithmeticError:
        value = None
    if value is None or not value.is_finite():
        raise SchemaError(f"not a decimal number: {raw!r}", f"{path}/@{name}")
    return float(value)


def _required(elem: ET.Element, name: str, path: str) -> str:
    value = elem.get(name)
    if not value:
        raise SchemaError(f"missing attribute {name!r}", f"{path}/@{name}")
    return value


# -- requests ---------------------------------------------------------------


def _parse_requirement(elem: ET.Element, path: str, reader: _Reader) -> ServiceRequirement:
    try:
        kind = RequirementKind(elem.tag)
    except ValueError:
        raise SchemaError(f"unknown requirement element {elem.tag!r}", path) from None
    weight = _number(elem, "weight", path, 1.0)
    if not weight > 0:
        raise SchemaError(f"weight must be > 0, got {elem.get('weight')!r}", f"{path}/@weight")
    if kind is RequirementKind.QOS:
        reader.check_attrs(elem, _REQUIREMENT_ATTRS[kind], path)
        reader.check_no_children(elem, path)
        op_raw = _required(elem, "operator", path)
        try:
            operator = QoSOperator(op_raw)
        except ValueError:
            raise SchemaError(f"unsupported QoS operator {op_raw!r}", f"{path}/@operator") from None
        if elem.get("value") is None:
            raise SchemaError("missing attribute 'value'", f"{path}/@value")
        return ServiceRequirement(
            kind=kind,
            qos_name=_required(elem, "name", path),
            qos_operator=operator,
            qos_value=_number(elem, "value", path),
            qos_unit=elem.get("unit") or None,
            weight=weight,
        )

    reader.check_attrs(elem, _DESCRIBED_ATTRS, path)
    data_type = None
    for child in elem:
        if kind.typed and child.tag == "DataType" and data_type is None:
            child_path = f"{path}/DataType"
            reader.check_attrs(child, {"namespace", "localName"}, child_path)
            data_type = DataTypeRef(
                _required(child, "namespace", child_path), _required(child, "localName", child_path)
            )
        else:
            reader.unknown(f"element {child.tag!r}", f"{path}/{child.tag}")
    description = elem.get("description") or None
    ontology = elem.get("ontologyReference") or None
    if description is None and ontology is None:
        raise SchemaError("requirement needs a description or ontologyReference", path)
    return ServiceRequirement(
        kind=kind,
        description=description,
        ontology_reference=ontology,
        data_type=data_type,
        weight=weight,
    )


def parse_request(document: bytes | str, *, strict: bool = False) -> USQLRequest:
    """Parse and validate a USQLRequest document.

    In strict mode unknown elements and attributes raise
    :class:`SchemaError`; otherwise they are skipped with an
    :class:`UnknownElementWarning`.
    """
    reader = _Reader(strict)
    root = _parse_root(document, "USQLRequest")
    reader.check_attrs(root, {"minDegreeOfMatch", "maxResults"}, "/USQLRequest")

    min_degree = _number(root, "minDegreeOfMatch", "/USQLRequest", 0.5)
    if not 0.0 <= min_degree <= 1.0:
        raise SchemaError(
            f"minDegreeOfMatch must lie in [0, 1], got {root.get('minDegreeOfMatch')!r}",
            "/USQLRequest/@minDegreeOfMatch",
        )
    max_raw = root.get("maxResults", "50")
    try:
        max_results = int(max_raw)
    except ValueError:
        raise SchemaError(f"not an integer: {max_raw!r}", "/USQLRequest/@maxResults") from None
    if max_results <= 0:
        raise SchemaError("maxResults must be positive", "/USQLRequest/@maxResults")

    targets: list[str] = []
    filters: list[SearchFilter] = []
    requirements: list[ServiceRequirement] = []
    seen_requirements = False
    for section in root:
        path = f"/USQLRequest/{section.tag}"
        if section.tag == "Targets":
            for i, target in enumerate(section, 1):
                tpath = f"{path}/{target.tag}[{i}]"
                if target.tag != "Target":
                    reader.unknown(f"element {target.tag!r}", tpath)
                    continue
                reader.check_attrs(target, {"brokerId"}, tpath)
                targets.append(_required(target, "brokerId", tpath))
        elif section.tag == "Filters":
            for i, filt in enumerate(section, 1):
                fpath = f"{path}/{filt.tag}[{i}]"
                if filt.tag != "Filter":
                    reader.unknown(f"element {filt.tag!r}", fpath)
                    continue
                reader.check_attrs(filt, {"name", "value"}, fpath)
                filters.append(SearchFilter(_required(filt, "name", fpath), _required(filt, "value", fpath)))
        elif section.tag == "Requirements":
            seen_requirements = True
            position: dict[str, int] = {}
            for elem in section:
                # XPath positions count siblings of the same name.
                position[elem.tag] = position.get(elem.tag, 0) + 1
                requirements.append(_parse_requirement(elem, f"{path}/{elem.tag}[{position[elem.tag]}]", reader))
        else:
            reader.unknown(f"element {section.tag!r}", path)

    if not seen_requirements or not requirements:
        raise SchemaError("a request needs at least one requirement", "/USQLRequest/Requirements")
    return USQLRequest(
        requirements=tuple(requirements),
        targets=tuple(targets),
        filters=tuple(filters),
        min_degree_of_match=min_degree,
        max_results=max_results,
    )


def _requirement_element(parent: ET.Element, req: ServiceRequirement) -> None:
    elem = ET.SubElement(parent, req.kind.value)
    elem.set("weight", format_decimal(req.weight))
    if req.kind is RequirementKind.QOS:
        elem.set("name", req.qos_name)
        elem.set("operator", req.qos_operator.value)
        elem.set("value", format_decimal(req.qos_value))
        if req.qos_unit:
            elem.set("unit", req.qos_unit)
        return
    if req.description is not None:
        elem.set("description", req.description)
    if req.ontology_reference is not None:
        elem.set("ontologyReference", req.ontology_reference)
    if req.data_type is not None:
        ET.SubElement(
            elem, "DataType", namespace=req.data_type.namespace, localName=req.data_type.local_name
        )


def serialize_request(request: USQLRequest) -> bytes:
    root = ET.Element("USQLRequest")
    root.set("minDegreeOfMatch", format_decimal(request.min_degree_of_match))
    root.set("maxResults", str(request.max_results))
    if request.targets:
        targets = ET.SubElement(root, "Targets")
        for broker_id in request.targets:
            ET.SubElement(targets, "Target", brokerId=broker_id)
    if request.filters:
        filters = ET.SubElement(root, "Filters")
        for f in request.filters:
            ET.SubElement(filters, "Filter", name=f.name, value=f.value)
    reqs = ET.SubElement(root, "Requirements")
    for req in request.requirements:
        _requirement_element(reqs, req)
    return _to_bytes(root)


# -- responses --------------------------------------------------------------


def serialize_response(response: USQLResponse) -> bytes:
    root = ET.Element("USQLResponse")
    root.set("requestId", response.request_id)
    root.set("generatedAt", response.generated_at.isoformat())
    for entry in response.entries:
        e = ET.SubElement(root, "MatchedServiceEntry")
        e.set("advertisementId", entry.advertisement_id)
        e.set("degreeOfMatch", format_score(entry.degree_of_match))
        e.set("provider", entry.provider)
        e.set("name", entry.name)
        e.set("description", entry.description)
        e.set("serviceType", entry.service_type.value)
        scores = ET.SubElement(e, "CriterionScores")
        for cs in entry.criterion_scores:
            ET.SubElement(
                scores, "CriterionScore", requirement=str(cs.requirement_index), score=format_score(cs.score)
            )
        inv = ET.SubElement(e, "InvocationDetails", serviceType=entry.invocation.service_type.value)
        for key in sorted(entry.invocation.entries):
            ET.SubElement(inv, "Entry", key=key, value=entry.invocation.entries[key])
    return _to_bytes(root)


def _service_type(raw: str | None, path: str) -> ServiceType:
    try:
        return ServiceType(raw)
    except ValueError:
        raise SchemaError(f"unknown serviceType {raw!r}", f"{path}/@serviceType") from None


def parse_response(document: bytes | str) -> USQLResponse:
    root = _parse_root(document, "USQLResponse")
    entries = []
    for i, e in enumerate(root.iter("MatchedServiceEntry"), 1):
        path = f"/USQLResponse/MatchedServiceEntry[{i}]"
        scores = tuple(
            CriterionScore(int(cs.get("requirement")), float(cs.get("score")))
            for cs in e.iterfind("CriterionScores/CriterionScore")
        )
        inv = e.find("InvocationDetails")
        if inv is None:
            raise SchemaError("missing InvocationDetails", path)
        invocation = InvocationDetails(
            _service_type(inv.get("serviceType"), f"{path}/InvocationDetails"),
            {x.get("key"): x.get("value", "") for x in inv.iterfind("Entry")},
        )
        entries.append(
            MatchedServiceEntry(
                degree_of_match=float(_required(e, "degreeOfMatch", path)),
                provider=e.get("provider", ""),
                name=e.get("name", ""),
                description=e.get("description", ""),
                service_type=_service_type(e.get("serviceType"), path),
                criterion_scores=scores,
                invocation=invocation,
                advertisement_id=_required(e, "advertisementId", path),
            )
        )
    return USQLResponse(
        request_id=_required(root, "requestId", "/USQLResponse"),
        entries=tuple(entries),
        generated_at=datetime.fromisoformat(_required(root, "generatedAt", "/USQLResponse")),
    )


# -- faults -----------------------------------------------------------------


def serialize_fault(code: str, message: str, path: str = "") -> bytes:
    root = ET.Element("USQLFault", code=code)
    if path:
        root.set("path", path)
    root.text = message
    return _to_bytes(root)


def parse_fault(document: bytes | str) -> tuple[str, str, str]:
    """Return ``(code, message, path)`` of a fault document."""
    root = _parse_root(document, "USQLFault")
    return root.get("code", ""), root.text or "", root.get("path", "")


# -- schema validation ------------------------------------------------------


@functools.lru_cache(maxsize=1)
def usql_schema():
    import xmlschema

    source = resources.files("proteus.schema").joinpath("usql.xsd").read_text(encoding="utf-8")
    return xmlschema.XMLSchema(source)


def schema_errors(document: bytes | str) -> list[str]:
    """Validate against the shipped XSD; returns a list of messages, empty if valid."""
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    return [str(err.reason or err.message) for err in usql_schema().iter_errors(document)]
