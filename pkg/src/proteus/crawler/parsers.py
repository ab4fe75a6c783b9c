"""Built-in description parsers.

WSDL subset
    WSDL 1.1 ``definitions`` with ``message/part``, ``portType/operation``,
    ``binding`` and ``service/port/soap:address``. Annotations in
    :data:`ANNOTATION_NAMESPACE` add provider, classification, descriptions,
    ontology references and ``qos`` elements.
P2P JSON
    A peer service advertisement object listing operations with typed inputs
    and outputs, peer and pipe identifiers.
Grid descriptor
    An XML ``GridService`` with resource properties shared by all operations
    and a WS-Resource style endpoint plus resource key.

All three yield one advertisement per operation.
"""

from __future__ import annotations

import io
import json
import xml.etree.ElementTree as ET
from datetime import datetime, timezone

from ..errors import ParseError, SchemaError
from ..model import (
    AdvertisedProperty,
    DataTypeRef,
    InvocationDetails,
    RequirementKind,
    ServiceAdvertisement,
    ServiceType,
    advertisement_id,
)
from ..plugins.matchers import parse_quantity
from .base import (
    ANNOTATION_NAMESPACE,
    GRID_DESC_NAMESPACE,
    P2P_JSON_NAMESPACE,
    SOAP_NAMESPACE,
    WSDL_NAMESPACE,
    Parser,
    ServicePublication,
)

_W = "{%s}" % WSDL_NAMESPACE
_A = "{%s}" % ANNOTATION_NAMESPACE
_S = "{%s}" % SOAP_NAMESPACE
_G = "{%s}" % GRID_DESC_NAMESPACE

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)

#: Document-level attributes that become filter attributes when present.
_DOC_FILTERS = ("classification", "peerGroup", "virtualOrganization")


def _local(qname: str) -> str:
    return qname.rsplit(":", 1)[-1]


def _qos_property(name: str, raw_value: str, unit: str | None = None) -> AdvertisedProperty:
    try:
        value, parsed_unit = parse_quantity(str(raw_value))
    except ValueError:
        raise ParseError(f"QoS {name!r}: bad value {raw_value!r}") from None
    return AdvertisedProperty(
        kind=RequirementKind.QOS, name=name, qos_name=name, qos_value=value, unit=unit or parsed_unit
    )


def _filter_attrs(provider: str, service_type: ServiceType, doc: dict, pub: ServicePublication) -> dict:
    attrs = {"provider": provider, "serviceType": service_type.value}
    for key in _DOC_FILTERS:
        if doc.get(key):
            attrs[key] = doc[key]
    for key, value in pub.broker_attributes.items():
        if value:
            attrs[key] = value
    return attrs


def _build(
    pub: ServicePublication,
    service_type: ServiceType,
    provider: str,
    op_name: str,
    capability: AdvertisedProperty,
    invocation: dict,
    doc_attrs: dict,
    *,
    inputs=(),
    outputs=(),
    resource_properties=(),
    qos=(),
) -> ServiceAdvertisement:
    if not provider:
        raise ParseError("description does not name a provider")
    return ServiceAdvertisement(
        id=advertisement_id(pub.source_broker_id, pub.document_id, op_name),
        service_type=service_type,
        provider=provider,
        operation_name=op_name,
        capability=capability,
        invocation=InvocationDetails(service_type, {k: v for k, v in invocation.items() if v}),
        source_broker_id=pub.source_broker_id,
        harvested_at=pub.retrieved_at or _EPOCH,
        inputs=tuple(inputs),
        outputs=tuple(outputs),
        resource_properties=tuple(resource_properties),
        qos_properties=tuple(qos),
        filter_attributes=_filter_attrs(provider, service_type, doc_attrs, pub),
    )


def _xml_with_prefixes(content: bytes) -> tuple[ET.Element, dict[str, str]]:
    prefixes: dict[str, str] = {}
    root = None
    try:
        for event, item in ET.iterparse(io.BytesIO(content), events=("start-ns", "start")):
            if event == "start-ns":
                prefix, uri = item
                prefixes.setdefault(prefix, uri)
            elif root is None:
                root = item
    except ET.ParseError as exc:
        raise ParseError(f"malformed XML: {exc}") from None
    if root is None:
        raise ParseError("empty document")
    return root, prefixes


class WSDLSubsetParser(Parser):
    namespace = WSDL_NAMESPACE

    def _type(self, qname: str | None, prefixes: dict[str, str]) -> DataTypeRef | None:
        if not qname:
            return None
        prefix, _, local = qname.rpartition(":")
        ns = prefixes.get(prefix)
        if ns is None:
            raise ParseError(f"undeclared prefix in type {qname!r}")
        return DataTypeRef(ns, local)

    def _part(self, part: ET.Element, kind: RequirementKind, prefixes) -> AdvertisedProperty:
        name = part.get("name", "")
        return AdvertisedProperty(
            kind=kind,
            name=name,
            description=part.get(_A + "description") or name or None,
            ontology_reference=part.get(_A + "ontologyReference"),
            data_type=self._type(part.get("type") or part.get("element"), prefixes),
        )

    def parse(self, publication: ServicePublication) -> list[ServiceAdvertisement]:
        root, prefixes = _xml_with_prefixes(publication.content)
        if root.tag != _W + "definitions":
            raise ParseError(f"expected wsdl:definitions, found {root.tag}")
        provider = root.get(_A + "provider", "")
        doc_attrs = {"classification": root.get(_A + "classification", "")}

        messages = {
            m.get("name"): m.findall(_W + "part") for m in root.findall(_W + "message")
        }
        binding_port_type = {
            b.get("name"): _local(b.get("type", "")) for b in root.findall(_W + "binding")
        }
        # portType name -> (service name, port name, binding, endpoint)
        ports: dict[str, tuple[str, str, str, str]] = {}
        first_port = None
        for service in root.findall(_W + "service"):
            for port in service.findall(_W + "port"):
                binding = _local(port.get("binding", ""))
                address = port.find(_S + "address")
                entry = (
                    service.get("name", ""),
                    port.get("name", ""),
                    binding,
                    address.get("location", "") if address is not None else "",
                )
                first_port = first_port or entry
                pt = binding_port_type.get(binding)
                if pt and pt not in ports:
                    ports[pt] = entry

        qos_by_op: dict[str | None, list[AdvertisedProperty]] = {}
        for q in root.findall(_A + "qos"):
            qos_by_op.setdefault(q.get("operation"), []).append(
                _qos_property(q.get("name", ""), q.get("value", ""), q.get("unit"))
            )

        ads = []
        try:
            for port_type in root.findall(_W + "portType"):
                pt_name = port_type.get("name", "")
                service_name, port_name, binding, endpoint = ports.get(pt_name) or first_port or ("", "", "", "")
                if not endpoint:
                    raise ParseError(f"portType {pt_name!r} has no endpoint address")
                for op in port_type.findall(_W + "operation"):
                    op_name = op.get("name")
                    if not op_name:
                        raise ParseError("operation without a name")
                    doc = op.findtext(_W + "documentation")
                    capability = AdvertisedProperty(
                        kind=RequirementKind.CAPABILITY,
                        name=op_name,
                        description=(doc or "").strip() or op_name,
                        ontology_reference=op.get(_A + "ontologyReference"),
                    )

                    def parts(tag: str, kind: RequirementKind) -> list[AdvertisedProperty]:
                        ref = op.find(_W + tag)
                        if ref is None:
                            return []
                        msg = _local(ref.get("message", ""))
                        if msg not in messages:
                            raise ParseError(f"operation {op_name!r} references unknown message {msg!r}")
                        return [self._part(p, kind, prefixes) for p in messages[msg]]

                    ads.append(
                        _build(
                            publication,
                            ServiceType.WEB,
                            provider,
                            op_name,
                            capability,
                            {
                                "endpoint": endpoint,
                                "binding": binding,
                                "portName": port_name,
                                "serviceName": service_name,
                                "operation": op_name,
                                "targetNamespace": root.get("targetNamespace", ""),
                            },
                            doc_attrs,
                            inputs=parts("input", RequirementKind.INPUT),
                            outputs=parts("output", RequirementKind.OUTPUT),
                            qos=qos_by_op.get(None, []) + qos_by_op.get(op_name, []),
                        )
                    )
        except SchemaError as exc:
            raise ParseError(str(exc)) from None
        if not ads:
            raise ParseError("description declares no operations")
        return ads


def _json_type(raw) -> DataTypeRef | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise ParseError(f"bad type {raw!r}")
    return DataTypeRef(raw.get("namespace", ""), raw.get("localName", ""))


class P2PJSONParser(Parser):
    namespace = P2P_JSON_NAMESPACE

    def _element(self, raw: dict, kind: RequirementKind) -> AdvertisedProperty:
        name = raw.get("name", "")
        return AdvertisedProperty(
            kind=kind,
            name=name,
            description=raw.get("description") or name or None,
            ontology_reference=raw.get("ontologyReference"),
            data_type=_json_type(raw.get("type")),
        )

    def parse(self, publication: ServicePublication) -> list[ServiceAdvertisement]:
        try:
            doc = json.loads(publication.content)
        except ValueError as exc:
            raise ParseError(f"malformed JSON: {exc}") from None
        if not isinstance(doc, dict) or doc.get("namespace") != P2P_JSON_NAMESPACE:
            raise ParseError("not a P2P JSON service advertisement")
        ads = []
        try:
            for op in doc.get("operations") or []:
                op_name = op["name"]
                capability = AdvertisedProperty(
                    kind=RequirementKind.CAPABILITY,
                    name=op_name,
                    description=op.get("description") or op_name,
                    ontology_reference=op.get("ontologyReference"),
                )
                ads.append(
                    _build(
                        publication,
                        ServiceType.P2P,
                        doc.get("provider", ""),
                        op_name,
                        capability,
                        {
                            "peerId": doc.get("peerId", ""),
                            "pipeId": doc.get("pipeId", ""),
                            "peerGroup": doc.get("peerGroup", ""),
                            "serviceName": doc.get("service", ""),
                            "operation": op_name,
                        },
                        doc,
                        inputs=[self._element(x, RequirementKind.INPUT) for x in op.get("inputs", [])],
                        outputs=[self._element(x, RequirementKind.OUTPUT) for x in op.get("outputs", [])],
                        qos=[_qos_property(q["name"], q["value"], q.get("unit")) for q in op.get("qos", [])],
                    )
                )
        except (KeyError, TypeError, AttributeError) as exc:
            raise ParseError(f"malformed advertisement: {exc!r}") from None
        except SchemaError as exc:
            raise ParseError(str(exc)) from None
        if not ads:
            raise ParseError("advertisement declares no operations")
        return ads


class GridDescriptorParser(Parser):
    namespace = GRID_DESC_NAMESPACE

    def _typed(self, elem: ET.Element, kind: RequirementKind) -> AdvertisedProperty:
        name = elem.get("name", "")
        dtype = None
        if elem.get("type"):
            dtype = DataTypeRef(elem.get("typeNamespace", ""), elem.get("type"))
        return AdvertisedProperty(
            kind=kind,
            name=name,
            description=elem.get("description") or name or None,
            ontology_reference=elem.get("ontologyReference"),
            data_type=dtype,
        )

    def parse(self, publication: ServicePublication) -> list[ServiceAdvertisement]:
        root, _ = _xml_with_prefixes(publication.content)
        if root.tag != _G + "GridService":
            raise ParseError(f"expected GridService, found {root.tag}")
        endpoint = root.find(_G + "Endpoint")
        if endpoint is None or not endpoint.get("address"):
            raise ParseError("grid service has no endpoint address")
        doc_attrs = {"virtualOrganization": root.get("virtualOrganization", "")}
        ads = []
        try:
            props = [
                self._typed(p, RequirementKind.RESOURCE_PROPERTY)
                for p in root.findall(f"{_G}ResourceProperties/{_G}Property")
            ]
            qos = [_qos_property(q.get("name", ""), q.get("value", ""), q.get("unit")) for q in root.findall(_G + "QoS")]
            for op in root.findall(_G + "Operation"):
                op_name = op.get("name")
                if not op_name:
                    raise ParseError("operation without a name")
                capability = AdvertisedProperty(
                    kind=RequirementKind.CAPABILITY,
                    name=op_name,
                    description=op.get("description") or op_name,
                    ontology_reference=op.get("ontologyReference"),
                )
                ads.append(
                    _build(
                        publication,
                        ServiceType.GRID,
                        root.get("provider", ""),
                        op_name,
                        capability,
                        {
                            "endpoint": endpoint.get("address", ""),
                            "resourceKey": endpoint.get("resourceKey", ""),
                            "serviceName": root.get("name", ""),
                            "operation": op_name,
                        },
                        doc_attrs,
                        inputs=[self._typed(x, RequirementKind.INPUT) for x in op.findall(_G + "Input")],
                        outputs=[self._typed(x, RequirementKind.OUTPUT) for x in op.findall(_G + "Output")],
                        resource_properties=props,
                        qos=qos,
                    )
                )
        except SchemaError as exc:
            raise ParseError(str(exc)) from None
        if not ads:
            raise ParseError("grid service declares no operations")
        return ads
