"""Synthetic heterogeneous brokers with constructive ground truth.

A corpus is built from query templates. For every query the generator emits
services that are relevant by construction plus distractors derived from them
by perturbation:

``R``  relevant: capability, interface and QoS satisfy the query (with small
       lexical, ontological and type-widening variations)
``A``  capability right, interface unrelated
``B``  capability and interface right, QoS constraint violated
``C``  token-swapped description, sibling concept, unrelated interface
``D``  homonym: same wording and interface, but a sibling concept

Requests are written at three cumulative levels: L1 capability only, L2 adds
the interface, L3 adds the QoS constraint. Relevance is checked at generation
time by scoring every relevant advertisement against its L3 request.
"""

from __future__ import annotations

import json
import random
import statistics
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape, quoteattr

from .algebra import degree_of_match, pair_requirements, partition_by_weight
from .crawler.base import (
    ANNOTATION_NAMESPACE,
    GRID_DESC_NAMESPACE,
    P2P_JSON_NAMESPACE,
    SOAP_NAMESPACE,
    WSDL_NAMESPACE,
    ServicePublication,
)
from .documents import parse_request, serialize_request
from .errors import ProteusError
from .model import (
    DataTypeRef,
    QoSOperator,
    RequirementKind,
    SearchFilter,
    ServiceAdvertisement,
    ServiceRequirement,
    USQLRequest,
)
from .plugins import OntologyTaxonomy, PluginKind, build_suite, default_registry
from .plugins.matchers import XSD_NAMESPACE

ONTOLOGY_BASE = "http://proteus.example.org/onto#"

LEVELS = ("L1", "L2", "L3")

#: Weights per criterion class; QoS is the top priority.
INTERFACE_WEIGHT = 1.0
CAPABILITY_WEIGHT = 1.2
QOS_WEIGHT = 1.4
DEFAULT_THRESHOLD = 0.75

ROLE_CYCLE = ("R", "R", "R", "A", "A", "B", "B", "C", "C", "D")

SIM_BROKER_TYPES = ("sim-registry", "sim-p2p", "sim-grid")


class GenerationError(ProteusError):
    code = "GenerationError"


@dataclass(frozen=True)
class Element:
    name: str
    description: str
    type: str


@dataclass(frozen=True)
class QueryTemplate:
    domain: str
    description: str
    concept: str
    sibling: str
    inputs: tuple[Element, Element]
    output: Element
    qos: tuple[str, QoSOperator, float, str]
    filler: str = "online"


def _t(domain, desc, concept, sibling, i1, i2, out, qos) -> QueryTemplate:
    return QueryTemplate(
        domain, desc, concept, sibling, (Element(*i1), Element(*i2)), Element(*out),
        (qos[0], QoSOperator(qos[1]), qos[2], qos[3]),
    )


TEMPLATES: tuple[QueryTemplate, ...] = (
    _t("travel", "book flight ticket", "BookFlight", "CancelFlight",
       ("origin", "departure airport", "string"), ("date", "travel date", "date"),
       ("confirmation", "booking code", "string"), ("ResponseTime", "LE", 200, "ms")),
    _t("travel", "reserve hotel room", "ReserveHotel", "CancelHotel",
       ("city", "destination city", "string"), ("nights", "stay nights", "int"),
       ("reservation", "reservation number", "long"), ("Availability", "GE", 0.99, "ratio")),
    _t("travel", "rent car vehicle", "RentCar", "ReturnCar",
       ("pickup", "pickup place", "string"), ("days", "rental days", "int"),
       ("price", "rental price", "decimal"), ("ResponseTime", "LE", 500, "ms")),
    _t("travel", "check flight status", "FlightStatus", "FlightDelayClaim",
       ("flight", "flight number", "string"), ("day", "departure day", "date"),
       ("status", "arrival status", "string"), ("Reliability", "GE", 0.95, "ratio")),
    _t("travel", "convert currency amount", "ConvertCurrency", "ExchangeRateHistory",
       ("amount", "money sum", "decimal"), ("code", "target currency code", "string"),
       ("converted", "converted sum", "decimal"), ("Throughput", "GE", 100, "req/s")),
    _t("travel", "find train connection", "TrainConnection", "TrainSeatMap",
       ("from", "start station", "string"), ("to", "end station", "string"),
       ("route", "journey itinerary", "string"), ("ResponseTime", "LE", 300, "ms")),
    _t("travel", "get weather forecast", "WeatherForecast", "ClimateArchive",
       ("region", "geographic region", "string"), ("hours", "forecast horizon hours", "int"),
       ("outlook", "temperature outlook", "float"), ("Availability", "GE", 0.98, "ratio")),
    _t("health", "schedule doctor appointment", "DoctorAppointment", "DentistAppointment",
       ("patient", "patient identifier", "string"), ("slot", "preferred time slot", "dateTime"),
       ("appointment", "appointment ticket", "long"), ("ResponseTime", "LE", 400, "ms")),
    _t("health", "retrieve patient record", "PatientRecord", "PatientBilling",
       ("patient", "patient identifier", "string"), ("section", "record section", "string"),
       ("history", "medical history document", "string"), ("Reliability", "GE", 0.99, "ratio")),
    _t("health", "locate nearby pharmacy", "LocatePharmacy", "PharmacyStock",
       ("lat", "latitude coordinate", "double"), ("lon", "longitude coordinate", "double"),
       ("pharmacy", "pharmacy address", "string"), ("ResponseTime", "LE", 250, "ms")),
    _t("health", "order blood test", "BloodTest", "UrineTest",
       ("patient", "patient identifier", "string"), ("panel", "laboratory panel", "string"),
       ("order", "lab order number", "long"), ("Availability", "GE", 0.97, "ratio")),
    _t("health", "monitor heart rate", "HeartRateMonitoring", "BloodPressureMonitoring",
       ("sensor", "sensor device", "string"), ("interval", "sampling interval seconds", "int"),
       ("bpm", "beats per minute", "int"), ("Throughput", "GE", 50, "req/s")),
    _t("health", "prescribe medication dosage", "PrescribeMedication", "MedicationRecall",
       ("drug", "drug name", "string"), ("mass", "body mass kilograms", "float"),
       ("dose", "dose milligrams", "double"), ("Reliability", "GE", 0.999, "ratio")),
    _t("crisis", "dispatch ambulance unit", "DispatchAmbulance", "AmbulanceMaintenance",
       ("address", "incident address", "string"), ("severity", "triage severity", "int"),
       ("eta", "arrival estimate minutes", "int"), ("ResponseTime", "LE", 100, "ms")),
    _t("crisis", "report fire incident", "ReportFire", "FireDrillPlanning",
       ("place", "fire place", "string"), ("extent", "blaze extent", "decimal"),
       ("case", "incident case number", "long"), ("Availability", "GE", 0.999, "ratio")),
    _t("crisis", "locate shelter capacity", "ShelterCapacity", "ShelterConstruction",
       ("zone", "evacuation zone", "string"), ("people", "evacuee count", "int"),
       ("beds", "free beds", "int"), ("ResponseTime", "LE", 800, "ms")),
    _t("crisis", "coordinate rescue team", "CoordinateRescue", "RescueTraining",
       ("team", "team roster", "string"), ("area", "search area", "string"),
       ("plan", "deployment plan", "string"), ("Reliability", "GE", 0.98, "ratio")),
    _t("crisis", "track flood level", "FloodTracking", "FloodInsurance",
       ("gauge", "river gauge station", "string"), ("since", "observation start", "dateTime"),
       ("height", "water height meters", "double"), ("Throughput", "GE", 200, "req/s")),
    _t("crisis", "broadcast emergency alert", "EmergencyBroadcast", "AlertArchive",
       ("message", "warning text", "string"), ("radius", "coverage radius kilometers", "float"),
       ("recipients", "reached subscribers", "long"), ("ResponseTime", "LE", 150, "ms")),
    _t("crisis", "allocate relief supplies", "AllocateSupplies", "SupplyAuditing",
       ("depot", "warehouse depot", "string"), ("quantity", "pallet quantity", "int"),
       ("shipment", "shipment manifest", "string"), ("Availability", "GE", 0.99, "ratio")),
)

#: Interface elements sharing no tokens or types with any template.
NOISE_ELEMENTS = (
    Element("blob", "binary payload chunk", "base64Binary"),
    Element("flag", "toggle switch setting", "boolean"),
    Element("link", "hyperlink locator", "anyURI"),
    Element("digest", "checksum hash", "hexBinary"),
    Element("span", "elapsed duration", "duration"),
    Element("year", "calendar year", "gYear"),
)

SWAP_TOKENS = ("archive", "legacy", "batch", "audit", "export", "sync", "inventory", "metrics")

_WIDENINGS = {"int": "long", "long": "decimal", "float": "double"}

PEER_GROUPS = {"travel": "travellers", "health": "medics", "crisis": "rescue"}


def concept_uri(name: str) -> str:
    return ONTOLOGY_BASE + name


def build_taxonomy(templates: Sequence[QueryTemplate] = TEMPLATES) -> OntologyTaxonomy:
    edges = []
    for domain in sorted({t.domain for t in templates}):
        edges.append((concept_uri(domain.capitalize()), concept_uri("Service")))
    for t in templates:
        parent = concept_uri(t.domain.capitalize())
        edges.append((concept_uri(t.concept), parent))
        edges.append((concept_uri(t.sibling), parent))
        edges.append((concept_uri(t.concept + "Specialized"), concept_uri(t.concept)))
    return OntologyTaxonomy.from_edges(edges)


def _camel(desc: str) -> str:
    words = desc.split()
    return words[0] + "".join(w.capitalize() for w in words[1:])


# -- requests ---------------------------------------------------------------


def _xsd(local: str) -> DataTypeRef:
    return DataTypeRef(XSD_NAMESPACE, local)


def build_request(t: QueryTemplate, level: str, threshold: float = DEFAULT_THRESHOLD) -> USQLRequest:
    reqs = [
        ServiceRequirement(
            RequirementKind.CAPABILITY,
            description=t.description,
            ontology_reference=concept_uri(t.concept),
            weight=CAPABILITY_WEIGHT if level != "L1" else 1.0,
        )
    ]
    if level in ("L2", "L3"):
        for el in t.inputs:
            reqs.append(ServiceRequirement(RequirementKind.INPUT, description=el.description,
                                           data_type=_xsd(el.type), weight=INTERFACE_WEIGHT))
        reqs.append(ServiceRequirement(RequirementKind.OUTPUT, description=t.output.description,
                                       data_type=_xsd(t.output.type), weight=INTERFACE_WEIGHT))
    if level == "L3":
        name, op, value, unit = t.qos
        reqs.append(ServiceRequirement(RequirementKind.QOS, qos_name=name, qos_operator=op,
                                       qos_value=float(value), qos_unit=unit, weight=QOS_WEIGHT))
    return USQLRequest(requirements=tuple(reqs), min_degree_of_match=threshold, max_results=100000)


# -- service blueprints -----------------------------------------------------


@dataclass
class Blueprint:
    """Abstract description of one generated service operation."""

    key: str
    query: int
    role: str
    provider: str
    description: str
    concept: str
    inputs: list[tuple[Element, str]]
    outputs: list[tuple[Element, str]]
    qos: list[tuple[str, str]]
    domain: str
    broker_index: int = -1

    @property
    def operation(self) -> str:
        return _camel(self.description)


def _qos_value(rng: random.Random, t: QueryTemplate, satisfy: bool) -> str:
    name, op, value, unit = t.qos
    if unit == "ms":
        v = value * (rng.uniform(0.3, 0.9) if satisfy else rng.uniform(1.3, 3.0))
        return f"{v / 1000:.4f}s" if rng.random() < 0.3 else f"{v:.1f}ms"
    if unit == "ratio":
        if satisfy:
            v = value + (1 - value) * rng.uniform(0.3, 1.0)
        else:
            v = max(0.0, value - rng.uniform(0.03, 0.2))
        return f"{v * 100:.3f}%" if rng.random() < 0.5 else f"{v:.5f}"
    v = value * (rng.uniform(1.2, 3.0) if satisfy else rng.uniform(0.2, 0.8))
    return f"{v:.1f}"


def _variant(rng: random.Random, el: Element, t: QueryTemplate) -> tuple[Element, str]:
    r = rng.random()
    if r < 0.2 and el.type in _WIDENINGS:
        return el, _WIDENINGS[el.type]
    if r < 0.35:
        return Element(el.name, f"{el.description} {t.filler}", el.type), el.type
    return el, el.type


def _blueprint(rng: random.Random, key: str, qi: int, t: QueryTemplate, role: str, provider: str) -> Blueprint:
    noise = lambda n: [(e, e.type) for e in rng.sample(NOISE_ELEMENTS, n)]  # noqa: E731
    desc, concept = t.description, t.concept
    inputs = [(e, e.type) for e in t.inputs]
    outputs = [(t.output, t.output.type)]
    satisfy_qos = True
    if role == "R":
        r = rng.random()
        if r < 0.25:
            desc = f"{t.description} {t.filler}"
        elif r < 0.45:
            concept = t.concept + "Specialized"
        inputs = [_variant(rng, e, t) for e in t.inputs]
        outputs = [_variant(rng, t.output, t)]
    elif role == "A":
        inputs, outputs = noise(2), noise(1)
    elif role == "B":
        satisfy_qos = False
    elif role == "C":
        words = t.description.split()
        swaps = rng.sample(SWAP_TOKENS, len(words) - 1)
        desc = " ".join([words[0]] + swaps)
        concept = t.sibling
        inputs, outputs = noise(2), noise(1)
    elif role == "D":
        concept = t.sibling
    else:
        raise ValueError(role)
    qos = [(t.qos[0], _qos_value(rng, t, satisfy_qos))]
    return Blueprint(key, qi, role, provider, desc, concept, inputs, outputs, qos, t.domain)


# -- rendering --------------------------------------------------------------


def _render_wsdl(bp: Blueprint) -> bytes:
    op = bp.operation
    tns = f"urn:sim:{bp.key}"

    def parts(items):
        return "".join(
            f'    <part name={quoteattr(e.name)} type="xsd:{typ}" px:description={quoteattr(e.description)}/>\n'
            for e, typ in items
        )

    qos = "".join(
        f'  <px:qos operation={quoteattr(op)} name={quoteattr(n)} value={quoteattr(v)}/>\n' for n, v in bp.qos
    )
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<definitions xmlns="{WSDL_NAMESPACE}" xmlns:soap="{SOAP_NAMESPACE}" '
        f'xmlns:xsd="{XSD_NAMESPACE}" xmlns:px="{ANNOTATION_NAMESPACE}" xmlns:tns="{tns}" '
        f'name="{bp.key}" targetNamespace="{tns}" px:provider={quoteattr(bp.provider)} '
        f'px:classification={quoteattr(bp.domain)}>\n'
        f'  <message name="{op}Request">\n{parts(bp.inputs)}  </message>\n'
        f'  <message name="{op}Response">\n{parts(bp.outputs)}  </message>\n'
        f'  <portType name="{bp.key}PortType">\n'
        f'    <operation name="{op}" px:ontologyReference={quoteattr(concept_uri(bp.concept))}>\n'
        f'      <documentation>{escape(bp.description)}</documentation>\n'
        f'      <input message="tns:{op}Request"/>\n'
        f'      <output message="tns:{op}Response"/>\n'
        '    </operation>\n'
        '  </portType>\n'
        f'  <binding name="{bp.key}Binding" type="tns:{bp.key}PortType"/>\n'
        f'  <service name="{bp.key}">\n'
        f'    <port name="{bp.key}Port" binding="tns:{bp.key}Binding">\n'
        f'      <soap:address location="http://ws.sim.example/{bp.provider}/{bp.key}"/>\n'
        '    </port>\n'
        '  </service>\n'
        f'{qos}'
        '</definitions>\n'
    ).encode("utf-8")


def _render_p2p(bp: Blueprint, peer_group: str, peer_id: str) -> bytes:
    def elements(items):
        return [
            {"name": e.name, "description": e.description,
             "type": {"namespace": XSD_NAMESPACE, "localName": typ}}
            for e, typ in items
        ]

    doc = {
        "namespace": P2P_JSON_NAMESPACE,
        "service": bp.key,
        "provider": bp.provider,
        "peerId": peer_id,
        "peerGroup": peer_group,
        "pipeId": f"urn:sim:pipe:{bp.key}",
        "operations": [
            {
                "name": bp.operation,
                "description": bp.description,
                "ontologyReference": concept_uri(bp.concept),
                "inputs": elements(bp.inputs),
                "outputs": elements(bp.outputs),
                "qos": [{"name": n, "value": v} for n, v in bp.qos],
            }
        ],
    }
    return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode("utf-8")


def _render_grid(bp: Blueprint, vo: str, rng: random.Random) -> bytes:
    def typed(tag, items):
        return "".join(
            f'    <{tag} name={quoteattr(e.name)} description={quoteattr(e.description)} '
            f'typeNamespace="{XSD_NAMESPACE}" type="{typ}"/>\n'
            for e, typ in items
        )

    props = [
        (Element("cpus", "processor cores", "int"), "int"),
        (Element("storage", "disk capacity gigabytes", "long"), "long"),
        (Element("queue", "scheduler queue name", "string"), "string"),
    ]
    chosen = props[: 2 + (rng.random() < 0.5)]
    prop_xml = "".join(
        f'    <Property name={quoteattr(e.name)} description={quoteattr(e.description)} '
        f'typeNamespace="{XSD_NAMESPACE}" type="{typ}"/>\n'
        for e, typ in chosen
    )
    qos = "".join(f"  <QoS name={quoteattr(n)} value={quoteattr(v)}/>\n" for n, v in bp.qos)
    return (
        '<?xml version="1.0" encoding="UTF-8"?>\n'
        f'<GridService xmlns="{GRID_DESC_NAMESPACE}" name="{bp.key}" provider={quoteattr(bp.provider)} '
        f'virtualOrganization={quoteattr(vo)}>\n'
        f'  <Endpoint address="https://grid.sim.example/{vo}/{bp.key}" resourceKey="rk-{bp.key}"/>\n'
        f'  <ResourceProperties>\n{prop_xml}  </ResourceProperties>\n'
        f'  <Operation name="{bp.operation}" description={quoteattr(bp.description)} '
        f'ontologyReference={quoteattr(concept_uri(bp.concept))}>\n'
        f'{typed("Input", bp.inputs)}{typed("Output", bp.outputs)}'
        '  </Operation>\n'
        f'{qos}'
        '</GridService>\n'
    ).encode("utf-8")


# -- corpus -----------------------------------------------------------------


@dataclass
class SimCorpusSpec:
    seed: int = 42
    brokers: list[tuple[str, int]] = field(
        default_factory=lambda: [("sim-registry", 67), ("sim-p2p", 67), ("sim-grid", 66)]
    )
    queries: int = 20
    threshold: float = DEFAULT_THRESHOLD
    #: Services per provider; sets the size of the provider pool.
    provider_share: int = 20
    #: Broker ids whose ``broker.json`` is marked offline.
    offline: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        self.brokers = [(str(t), int(n)) for t, n in self.brokers]
        for t, n in self.brokers:
            if t not in SIM_BROKER_TYPES:
                raise ValueError(f"unknown simulated broker type {t!r}")
            if n < 0:
                raise ValueError("publication counts must be non-negative")
        if not 1 <= self.queries <= len(TEMPLATES):
            raise ValueError(f"queries must lie in [1, {len(TEMPLATES)}]")

    @property
    def total(self) -> int:
        return sum(n for _, n in self.brokers)

    def broker_ids(self) -> list[str]:
        return [f"{t}-{i + 1}" for i, (t, _) in enumerate(self.brokers)]

    @classmethod
    def load(cls, path: str | Path) -> SimCorpusSpec:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            seed=int(raw.get("seed", 42)),
            brokers=[tuple(b) for b in raw.get("brokers", cls().brokers)],
            queries=int(raw.get("queries", 20)),
            threshold=float(raw.get("threshold", DEFAULT_THRESHOLD)),
            provider_share=int(raw.get("providerShare", 20)),
            offline=tuple(raw.get("offline", ())),
        )

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "brokers": [list(b) for b in self.brokers],
            "queries": self.queries,
            "threshold": self.threshold,
            "providerShare": self.provider_share,
            "offline": list(self.offline),
        }


@dataclass
class SimBroker:
    id: str
    type: str
    attributes: dict[str, str]
    #: relative path -> file content
    files: dict[str, bytes] = field(default_factory=dict)
    #: (document id, content, broker attributes) in harvest order
    publications: list[tuple[str, bytes, dict[str, str]]] = field(default_factory=list)


@dataclass
class SimCorpus:
    spec: SimCorpusSpec
    brokers: list[SimBroker]
    blueprints: list[Blueprint]
    requests: dict[str, dict[str, USQLRequest]]
    relevant: dict[str, list[str]]
    roles: dict[str, str]
    taxonomy: OntologyTaxonomy
    oracle_scores: dict[str, float]

    def publications(self) -> Iterable[ServicePublication]:
        ns_of = {"sim-registry": WSDL_NAMESPACE, "sim-p2p": P2P_JSON_NAMESPACE, "sim-grid": GRID_DESC_NAMESPACE}
        for b in self.brokers:
            for doc_id, content, attrs in b.publications:
                yield ServicePublication(b.id, doc_id, ns_of[b.type], content, attrs)

    def advertisements(self, registry=None) -> list[ServiceAdvertisement]:
        """Parse every publication directly, bypassing harvesting."""
        registry = registry or default_registry(self.taxonomy)
        ads = []
        for pub in self.publications():
            ads.extend(registry.select(PluginKind.PARSER, pub.schema_namespace).parse(pub))
        return ads

    def manifest(self) -> dict:
        return {
            "seed": self.spec.seed,
            "threshold": self.spec.threshold,
            "queries": {
                qid: {
                    "template": TEMPLATES[int(qid[1:]) - 1].description,
                    "levels": {lvl: f"queries/{qid}-{lvl}.xml" for lvl in LEVELS},
                    "relevant": self.relevant[qid],
                }
                for qid in sorted(self.requests)
            },
            "roles": dict(sorted(self.roles.items())),
        }


def _assign_brokers(rng: random.Random, blueprints: list[Blueprint], spec: SimCorpusSpec) -> None:
    # Rotate through brokers with spare capacity so that the services of one
    # query spread over all broker types.
    remaining = [n for _, n in spec.brokers]
    cursor = rng.randrange(len(remaining)) if remaining else 0
    for bp in blueprints:
        for step in range(len(remaining)):
            i = (cursor + step) % len(remaining)
            if remaining[i] > 0:
                bp.broker_index = i
                remaining[i] -= 1
                cursor = i + 1
                break


def build_corpus(spec: SimCorpusSpec) -> SimCorpus:
    """Build the whole corpus in memory; same spec, same bytes."""
    rng = random.Random(spec.seed)
    templates = TEMPLATES[: spec.queries]
    total = spec.total
    n_providers = max(1, -(-total // max(1, spec.provider_share)))
    providers = [f"provider-{i:04d}" for i in range(n_providers)]

    blueprints: list[Blueprint] = []
    per_query = [total // spec.queries + (1 if q < total % spec.queries else 0) for q in range(spec.queries)]
    counter = 0
    for qi, count in enumerate(per_query):
        for j in range(count):
            counter += 1
            role = ROLE_CYCLE[j % len(ROLE_CYCLE)]
            # providers are shuffled in the same rng stream: deterministic
            provider = providers[rng.randrange(n_providers)]
            blueprints.append(_blueprint(rng, f"svc-{counter:05d}", qi, templates[qi], role, provider))
    _assign_brokers(rng, blueprints, spec)

    ids = spec.broker_ids()
    brokers: list[SimBroker] = []
    for i, (btype, _) in enumerate(spec.brokers):
        mine = [bp for bp in blueprints if bp.broker_index == i]
        domain = templates[i % len(templates)].domain
        broker = SimBroker(ids[i], btype, {})
        meta = {"brokerType": btype, "brokerId": ids[i], "online": ids[i] not in spec.offline, "attributes": {}}
        order = list(range(len(mine)))
        rng.shuffle(order)
        if btype == "sim-registry":
            entries = []
            for k in order:
                bp = mine[k]
                path = f"entries/{bp.key}.wsdl"
                broker.files[path] = _render_wsdl(bp)
                entries.append({"key": bp.key, "classification": bp.domain, "file": path})
            entries.sort(key=lambda e: e["key"])
            broker.files["registry.json"] = (json.dumps({"entries": entries}, indent=2) + "\n").encode()
            for e in entries:
                broker.publications.append((e["key"], broker.files[e["file"]], {"classification": e["classification"]}))
        elif btype == "sim-p2p":
            group = PEER_GROUPS[domain]
            meta["attributes"] = {"peerGroup": group}
            placed = []
            for n, k in enumerate(order):
                bp = mine[k]
                peer = f"peer-{n % 5:02d}"
                path = f"peers/{peer}/{bp.key}.json"
                broker.files[path] = _render_p2p(bp, group, peer)
                placed.append((peer, bp.key, path))
            for peer, key, path in sorted(placed):
                broker.publications.append(
                    (f"{peer}/{key}.json", broker.files[path], {"peerGroup": group, "peerId": peer})
                )
        else:
            vo = f"vo-{domain}-{i + 1}"
            resources = []
            for k in order:
                bp = mine[k]
                path = f"resources/{bp.key}.grid"
                broker.files[path] = _render_grid(bp, vo, rng)
                resources.append({"key": bp.key, "file": path})
            resources.sort(key=lambda r: r["key"])
            broker.files["index.json"] = (
                json.dumps({"virtualOrganization": vo, "resources": resources}, indent=2) + "\n"
            ).encode()
            for r in resources:
                broker.publications.append((r["key"], broker.files[r["file"]], {"virtualOrganization": vo}))
        broker.attributes = meta["attributes"]
        broker.files["broker.json"] = (json.dumps(meta, indent=2, sort_keys=True) + "\n").encode()
        brokers.append(broker)

    requests = {
        f"q{qi + 1:02d}": {lvl: build_request(t, lvl, spec.threshold) for lvl in LEVELS}
        for qi, t in enumerate(templates)
    }
    taxonomy = build_taxonomy(templates)
    corpus = SimCorpus(spec, brokers, blueprints, requests, {}, {}, taxonomy, {})
    _label(corpus)
    return corpus


def _label(corpus: SimCorpus) -> None:
    """Attach ground truth and verify that every relevant service really scores."""
    registry = default_registry(corpus.taxonomy)
    suite = build_suite(registry)
    by_key = {bp.key: bp for bp in corpus.blueprints}
    relevant: dict[str, list[str]] = {qid: [] for qid in corpus.requests}
    for ad in corpus.advertisements(registry):
        bp = by_key[ad.invocation.entries["serviceName"]]
        qid = f"q{bp.query + 1:02d}"
        corpus.roles[ad.id] = bp.role
        request = corpus.requests[qid]["L3"]
        d, _ = degree_of_match(partition_by_weight(pair_requirements(request, ad, suite)), suite)
        corpus.oracle_scores[ad.id] = d
        if bp.role == "R":
            if d < corpus.spec.threshold:
                raise GenerationError(f"relevant service {bp.key} scores {d:.6f} < {corpus.spec.threshold}")
            relevant[qid].append(ad.id)
    corpus.relevant = {qid: sorted(ids) for qid, ids in relevant.items()}


def generate(spec: SimCorpusSpec, root: str | Path) -> SimCorpus:
    """Materialise a corpus below ``root`` and return it.

    Layout: ``brokers/<id>/...`` consumed by the sim harvesters,
    ``queries/<qid>-<level>.xml``, ``manifest.json``, ``taxonomy.tsv``,
    ``corpus.json`` and an engine configuration ``brokers.json``.
    """
    root = Path(root)
    corpus = build_corpus(spec)
    for broker in corpus.brokers:
        for rel, content in broker.files.items():
            path = root / "brokers" / broker.id / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(content)
    (root / "queries").mkdir(parents=True, exist_ok=True)
    for qid, levels in corpus.requests.items():
        for lvl, req in levels.items():
            (root / "queries" / f"{qid}-{lvl}.xml").write_bytes(serialize_request(req))
    (root / "manifest.json").write_text(json.dumps(corpus.manifest(), indent=2) + "\n", encoding="utf-8")
    (root / "taxonomy.tsv").write_text(corpus.taxonomy.dump(), encoding="utf-8")
    (root / "corpus.json").write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")
    config = {
        "store": "store.jsonl",
        "taxonomy": "taxonomy.tsv",
        "brokers": [
            {"id": b.id, "type": b.type, "accessDetails": {"path": f"brokers/{b.id}"}, "crawlIntervalSeconds": 300}
            for b in corpus.brokers
        ],
    }
    (root / "brokers.json").write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")
    return corpus


# -- evaluation -----------------------------------------------------------------


@dataclass(frozen=True)
class QueryCase:
    id: str
    levels: dict[str, USQLRequest]
    relevant: frozenset[str]


def load_query_set(root: str | Path) -> list[QueryCase]:
    root = Path(root)
    manifest = json.loads((root / "manifest.json").read_text(encoding="utf-8"))
    cases = []
    for qid, entry in sorted(manifest["queries"].items()):
        levels = {lvl: parse_request((root / rel).read_bytes(), strict=True) for lvl, rel in entry["levels"].items()}
        cases.append(QueryCase(qid, levels, frozenset(entry["relevant"])))
    return cases


def query_set(corpus: SimCorpus) -> list[QueryCase]:
    return [QueryCase(qid, dict(levels), frozenset(corpus.relevant[qid])) for qid, levels in sorted(corpus.requests.items())]


def prf(returned: Iterable[str], relevant: Iterable[str]) -> tuple[float, float, float]:
    """Precision, recall, F1; each is 0 when its denominator is 0."""
    returned, relevant = set(returned), set(relevant)
    tp = len(returned & relevant)
    p = tp / len(returned) if returned else 0.0
    r = tp / len(relevant) if relevant else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass(frozen=True)
class MetricRow:
    query: str
    level: str
    returned: int
    relevant: int
    precision: float
    recall: float
    f1: float


@dataclass
class EvaluationReport:
    rows: list[MetricRow]

    def mean(self, level: str, metric: str = "f1") -> float:
        values = [getattr(r, metric) for r in self.rows if r.level == level]
        return statistics.fmean(values) if values else 0.0

    def levels(self) -> list[str]:
        return sorted({r.level for r in self.rows})

    def to_text(self) -> str:
        lines = ["query level returned relevant precision recall f1"]
        lines += [
            f"{r.query} {r.level} {r.returned} {r.relevant} {r.precision:.4f} {r.recall:.4f} {r.f1:.4f}"
            for r in self.rows
        ]
        for lvl in self.levels():
            lines.append(
                f"mean {lvl} - - {self.mean(lvl, 'precision'):.4f} {self.mean(lvl, 'recall'):.4f} {self.mean(lvl):.4f}"
            )
        return "\n".join(lines) + "\n"

    def to_records(self) -> list[dict]:
        return [r.__dict__.copy() for r in self.rows]

    def to_json(self) -> str:
        summary = {
            lvl: {m: round(self.mean(lvl, m), 6) for m in ("precision", "recall", "f1")} for lvl in self.levels()
        }
        return json.dumps({"rows": self.to_records(), "summary": summary}, indent=2) + "\n"


def evaluate(queries: Sequence[QueryCase], processor) -> EvaluationReport:
    """Run every query at every level and score results against ground truth."""
    rows = []
    for case in queries:
        for lvl in sorted(case.levels):
            response = processor.execute(case.levels[lvl])
            returned = [e.advertisement_id for e in response.entries]
            p, r, f = prf(returned, case.relevant)
            rows.append(MetricRow(case.id, lvl, len(returned), len(case.relevant), p, r, f))
    return EvaluationReport(rows)


# -- scaling --------------------------------------------------------------------


@dataclass(frozen=True)
class ScaleRow:
    size: int
    crawl_seconds: float
    median_latency: float
    p95_latency: float
    mean_candidates: float
    index_lookups: int


@dataclass
class ScaleReport:
    rows: list[ScaleRow]
    repeats: int
    #: relative spread (max-min)/median of the per-repeat median latency, per size
    spread: dict[int, float]

    def to_text(self) -> str:
        worst = max(self.spread.values()) if self.spread else 0.0
        lines = [
            f"# run-to-run noise: median latency spread up to {worst * 100:.1f}% over {self.repeats} repeats",
            "size crawl_s median_ms p95_ms candidates lookups",
        ]
        for r in self.rows:
            lines.append(
                f"{r.size} {r.crawl_seconds:.3f} {r.median_latency * 1000:.3f} "
                f"{r.p95_latency * 1000:.3f} {r.mean_candidates:.1f} {r.index_lookups}"
            )
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(
            {"repeats": self.repeats, "spread": {str(k): v for k, v in self.spread.items()},
             "rows": [r.__dict__ for r in self.rows]},
            indent=2,
        ) + "\n"


def _split(size: int) -> list[tuple[str, int]]:
    base = size // 3
    counts = [base + (1 if i < size % 3 else 0) for i in range(3)]
    return list(zip(SIM_BROKER_TYPES, counts))


def scale_bench(
    sizes: Sequence[int],
    query_count: int = 50,
    *,
    seed: int = 42,
    repeats: int = 3,
    workdir: str | Path | None = None,
) -> ScaleReport:
    """Crawl time and per-query latency with one selective provider filter."""
    from .clock import SystemClock
    from .config import Engine, EngineConfig, broker_from_dict
    from .repository import RetrievalStats

    sizes = sorted(sizes)
    rows, spread = [], {}
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        for size in sizes:
            root = Path(tmp) / f"size-{size}"
            spec = SimCorpusSpec(seed=seed, brokers=_split(size), queries=min(20, max(1, size // 10)))
            corpus = generate(spec, root)
            raw = json.loads((root / "brokers.json").read_text())
            config = EngineConfig(
                [broker_from_dict(b, root) for b in raw["brokers"]], None, root / "taxonomy.tsv"
            )
            engine = Engine(config, SystemClock())
            t0 = time.perf_counter()
            engine.crawl_once()
            crawl_s = time.perf_counter() - t0

            providers = sorted({bp.provider for bp in corpus.blueprints})
            qrng = random.Random(seed)
            requests = []
            for i in range(query_count):
                template_req = corpus.requests[f"q{i % spec.queries + 1:02d}"]["L3"]
                provider = providers[qrng.randrange(len(providers))]
                requests.append(
                    USQLRequest(template_req.requirements, filters=(SearchFilter("provider", provider),),
                                min_degree_of_match=template_req.min_degree_of_match)
                )
            medians, all_lat, cands, lookups = [], [], [], 0
            for _ in range(repeats):
                lat = []
                for req in requests:
                    stats = RetrievalStats()
                    t = time.perf_counter()
                    engine.processor.execute(req, stats=stats)
                    lat.append(time.perf_counter() - t)
                    cands.append(stats.candidates)
                    lookups = stats.index_lookups
                medians.append(statistics.median(lat))
                all_lat.extend(lat)
            med = statistics.median(medians)
            spread[size] = (max(medians) - min(medians)) / med if med else 0.0
            p95 = statistics.quantiles(all_lat, n=20)[-1] if len(all_lat) > 1 else all_lat[0]
            rows.append(ScaleRow(size, crawl_s, med, p95, statistics.fmean(cands), lookups))
    return ScaleReport(rows, repeats, spread)
