"""Line-record codec for advertisements.

Every advertisement becomes one compact JSON object on one line, with a fixed
key order. Absent optional fields are omitted rather than written as null.
"""

from __future__ import annotations

import json
from datetime import datetime
from typing import IO, Iterable, Iterator

from .errors import DecodeError, SchemaError
from .model import (
    AdvertisedProperty,
    DataTypeRef,
    InvocationDetails,
    RequirementKind,
    ServiceAdvertisement,
    ServiceType,
)


def _encode_property(p: AdvertisedProperty) -> dict:
    out: dict = {"kind": p.kind.value, "name": p.name}
    if p.description is not None:
        out["description"] = p.description
    if p.ontology_reference is not None:
        out["ontologyReference"] = p.ontology_reference
    if p.data_type is not None:
        out["dataType"] = {"namespace": p.data_type.namespace, "localName": p.data_type.local_name}
    if p.qos_name is not None:
        out["qosName"] = p.qos_name
    if p.qos_value is not None:
        out["qosValue"] = p.qos_value
    if p.unit is not None:
        out["unit"] = p.unit
    return out


def encode_advertisement(ad: ServiceAdvertisement) -> str:
    """Encode to a single line (without the terminating LF)."""
    record = {
        "id": ad.id,
        "serviceType": ad.service_type.value,
        "provider": ad.provider,
        "operationName": ad.operation_name,
        "sourceBrokerId": ad.source_broker_id,
        "harvestedAt": ad.harvested_at.isoformat(),
        "capability": _encode_property(ad.capability),
        "inputs": [_encode_property(p) for p in ad.inputs],
        "outputs": [_encode_property(p) for p in ad.outputs],
        "resourceProperties": [_encode_property(p) for p in ad.resource_properties],
        "qosProperties": [_encode_property(p) for p in ad.qos_properties],
        "filterAttributes": {k: ad.filter_attributes[k] for k in sorted(ad.filter_attributes)},
        "invocation": {
            "serviceType": ad.invocation.service_type.value,
            "entries": {k: ad.invocation.entries[k] for k in sorted(ad.invocation.entries)},
        },
    }
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"), allow_nan=False)


def _decode_property(raw: dict) -> AdvertisedProperty:
    dt = raw.get("dataType")
    return AdvertisedProperty(
        kind=RequirementKind(raw["kind"]),
        name=raw["name"],
        description=raw.get("description"),
        ontology_reference=raw.get("ontologyReference"),
        data_type=DataTypeRef(dt["namespace"], dt["localName"]) if dt is not None else None,
        qos_name=raw.get("qosName"),
        qos_value=float(raw["qosValue"]) if "qosValue" in raw else None,
        unit=raw.get("unit"),
    )


def decode_advertisement(line: str, lineno: int | None = None) -> ServiceAdvertisement:
    try:
        raw = json.loads(line)
        inv = raw["invocation"]
        return ServiceAdvertisement(
            id=raw["id"],
            service_type=ServiceType(raw["serviceType"]),
            provider=raw["provider"],
            operation_name=raw["operationName"],
            source_broker_id=raw["sourceBrokerId"],
            harvested_at=datetime.fromisoformat(raw["harvestedAt"]),
            capability=_decode_property(raw["capability"]),
            inputs=tuple(_decode_property(p) for p in raw["inputs"]),
            outputs=tuple(_decode_property(p) for p in raw["outputs"]),
            resource_properties=tuple(_decode_property(p) for p in raw["resourceProperties"]),
            qos_properties=tuple(_decode_property(p) for p in raw["qosProperties"]),
            filter_attributes=dict(raw["filterAttributes"]),
            invocation=InvocationDetails(ServiceType(inv["serviceType"]), dict(inv["entries"])),
        )
    except json.JSONDecodeError as exc:
        raise DecodeError(f"invalid JSON: {exc.msg}", lineno) from None
    except (KeyError, TypeError) as exc:
        raise DecodeError(f"missing or malformed field {exc}", lineno) from None
    except (ValueError, SchemaError) as exc:
        raise DecodeError(str(exc), lineno) from None


def write_records(stream: IO[str], ads: Iterable[ServiceAdvertisement]) -> None:
    for ad in ads:
        stream.write(encode_advertisement(ad))
        stream.write("\n")


def read_records(stream: IO[str]) -> Iterator[ServiceAdvertisement]:
    """Decode a store stream; blank lines are skipped."""
    for lineno, line in enumerate(stream, 1):
        line = line.rstrip("\n")
        if line.strip():
            yield decode_advertisement(line, lineno)
