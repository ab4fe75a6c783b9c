"""End-to-end acceptance checks, one test per criterion.

Each test records its criterion name and measured values; the terminal
summary prints one PASS/FAIL line per criterion.
"""

import math
import random
import threading
import time
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from oracles import calculator, concept_similarity, cosine, linear_scan, promotion_closure
from strategies import advertisements, requests, responses
from proteus.algebra import degree_of_match, match_described, match_described_typed, partition_by_weight, score_pair
from proteus.brokersim import LEVELS, SimCorpusSpec, concept_uri, evaluate, generate, load_query_set, scale_bench
from proteus.clock import FixedClock, SimulatedClock, parse_instant
from proteus.config import Engine, load_config
from proteus.crawler import ServicePublication, sniff_namespace
from proteus.documents import (
    parse_fault,
    parse_request,
    parse_response,
    schema_errors,
    serialize_fault,
    serialize_request,
    serialize_response,
)
from proteus.model import (
    AdvertisedProperty as Prop,
    DataTypeRef,
    InvocationDetails,
    RequirementKind as K,
    SearchFilter,
    ServiceAdvertisement,
    ServiceRequirement as Req,
    ServiceType,
    USQLRequest,
    advertisement_id,
)
from proteus.plugins import PluginKind
from proteus.plugins.matchers import XSD_NAMESPACE, datatype_match, load_promotions, ontology_similarity, text_similarity
from proteus.queryproc import QueryProcessor
from proteus.records import decode_advertisement, encode_advertisement
from proteus.repository import Repository
from proteus.server import serve_in_thread
from test_algebra import dom

FIXED = "2026-01-01T00:00:00Z"
SMALL = SimCorpusSpec(seed=42, brokers=[("sim-registry", 10), ("sim-p2p", 10), ("sim-grid", 10)], queries=3)


@pytest.fixture
def criterion(record_property):
    def note(name: str, detail: str = "") -> None:
        record_property("criterion", name)
        if detail:
            record_property("detail", detail)
    return note


def run_counted(test, examples: int) -> int:
    """Run a hypothesis-wrapped callable and report how many examples it saw."""
    calls = [0]

    @settings(max_examples=examples, deadline=None, database=None,
              suppress_health_check=[HealthCheck.too_slow], derandomize=True)
    @given(st.data())
    def wrapped(data):
        calls[0] += 1
        test(data)

    wrapped()
    return calls[0]


# -- 1 ----------------------------------------------------------------------------


def test_c1_algebra_oracle_equivalence(criterion):
    criterion("1 algebra oracle equivalence")
    rng = random.Random(20260101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        n = rng.randint(1, 6)
        palette = [rng.choice([0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 7.0]) for _ in range(rng.randint(1, 3))]
        weights = [rng.choice(palette) for _ in range(n)]
        scores = [rng.random() for _ in range(n)]
        assert len(set(weights)) <= 3
        worst = max(worst, abs(dom(scores, weights) - calculator(weights, scores)))
    elapsed = time.perf_counter() - t0
    criterion("1 algebra oracle equivalence", f"max error {worst:.1e}, {elapsed:.2f}s")
    assert worst <= 1e-12
    assert elapsed < 5


# -- 2 ----------------------------------------------------------------------------

weight_palette = st.sampled_from([0.5, 1.0, 2.0, 3.0, 5.0])


def _instance(data):
    n = data.draw(st.integers(1, 6))
    weights = data.draw(st.lists(weight_palette, min_size=n, max_size=n))
    scores = data.draw(st.lists(st.floats(0, 1), min_size=n, max_size=n))
    return weights, scores


def _in_range(data):
    weights, scores = _instance(data)
    assert 0.0 <= dom(scores, weights) <= 1.0


def _all_ones(data):
    weights, _ = _instance(data)
    assert dom([1.0] * len(weights), weights) == pytest.approx(1.0, abs=1e-12)


def _top_zero(data):
    weights, scores = _instance(data)
    top = max(weights)
    scores = [0.0 if w == top else s for w, s in zip(weights, scores)]
    assert dom(scores, weights) == 0.0


def _monotone(data):
    weights, scores = _instance(data)
    i = data.draw(st.integers(0, len(scores) - 1))
    bumped = list(scores)
    bumped[i] = data.draw(st.floats(scores[i], 1.0))
    assert dom(bumped, weights) >= dom(scores, weights) - 1e-12


def _scale_free(data):
    weights, scores = _instance(data)
    c = data.draw(st.floats(1e-3, 1e3))
    assert dom(scores, [w * c for w in weights]) == pytest.approx(dom(scores, weights), abs=1e-12)


def test_c2_algebra_invariants(criterion):
    criterion("2 algebra invariant suite")
    counts = {name: run_counted(fn, 200) for name, fn in
              [("range", _in_range), ("all-ones", _all_ones), ("top-zero", _top_zero),
               ("monotone", _monotone), ("scaling", _scale_free)]}
    criterion("2 algebra invariant suite", ", ".join(f"{k} {v}" for k, v in counts.items()))
    assert all(v >= 200 for v in counts.values())


# -- 3 ----------------------------------------------------------------------------


def test_c3_matcher_exactness(criterion, suite):
    criterion("3 matcher exactness")
    # closed forms from the oracle module
    assert cosine("book flight", "book a flight") == 2 / (math.sqrt(2) * math.sqrt(3))
    assert round(text_similarity("book flight", "book a flight"), 6) == 0.816497
    assert abs(text_similarity("book flight", "book a flight") - cosine("book flight", "book a flight")) <= 1e-15
    edges = [("b", "a"), ("c", "b")]
    assert concept_similarity(edges, "c", "b") == 0.5
    from proteus.plugins.matchers import OntologyTaxonomy
    assert ontology_similarity("c", "b", OntologyTaxonomy.from_edges(edges)) == 0.5
    xsd = lambda t: DataTypeRef(XSD_NAMESPACE, t)  # noqa: E731
    assert datatype_match(xsd("int"), xsd("long")) == 0.8
    assert load_promotions()[XSD_NAMESPACE] == frozenset(
        promotion_closure([tuple(p) for p in load_promotions()[XSD_NAMESPACE]]))

    # phi = max(alpha, beta)
    r = Req(K.CAPABILITY, description="book flight", ontology_reference=concept_uri("BookFlight"))
    p = Prop(K.CAPABILITY, "x", description="book a flight", ontology_reference=concept_uri("BookFlightSpecialized"))
    ps = score_pair(r, p, suite)
    alpha, beta = cosine("book flight", "book a flight"), 0.5
    assert (ps.text, ps.ontology) == pytest.approx((alpha, beta), abs=1e-9)
    assert abs(match_described(r, p, suite) - max(alpha, beta)) <= 1e-9

    # psi = (phi + gamma) / 2
    ro = Req(K.OUTPUT, description="book flight", data_type=xsd("int"))
    po = Prop(K.OUTPUT, "o", description="book a flight", data_type=xsd("long"))
    psi = match_described_typed(ro, po, suite)
    assert abs(psi - 0.5 * (alpha + 0.8)) <= 1e-9
    assert round(psi, 3) == 0.808

    rr = Req(K.RESOURCE_PROPERTY, description="processor cores", data_type=xsd("long"))
    pr = Prop(K.RESOURCE_PROPERTY, "cpus", description="processor cores", data_type=xsd("int"))
    assert abs(match_described_typed(rr, pr, suite) - 0.5 * (1.0 + 0.8)) <= 1e-9
    criterion("3 matcher exactness", f"phi={ps.score:.6f} psi={psi:.6f}")


# -- 4 ----------------------------------------------------------------------------


def test_c4_heterogeneity_end_to_end(tmp_path, criterion):
    criterion("4 heterogeneity end-to-end")
    t0 = time.perf_counter()
    generate(SMALL, tmp_path)
    engine = Engine(load_config(tmp_path / "brokers.json"), FixedClock(parse_instant(FIXED)))
    reports = engine.crawl_once()
    assert [r.publications_found for r in reports] == [10, 10, 10] and all(r.ok for r in reports)
    request = parse_request((tmp_path / "queries" / "q01-L3.xml").read_bytes())
    assert not request.filters and not request.targets
    response = engine.processor.execute(request)
    document = serialize_response(response)
    elapsed = time.perf_counter() - t0
    types = {e.service_type for e in response.entries}
    criterion("4 heterogeneity end-to-end",
              f"{len(response.entries)} entries, types {sorted(t.value for t in types)}, {elapsed:.2f}s")
    assert types == set(ServiceType)
    assert all(e.invocation.entries for e in response.entries)
    assert schema_errors(document) == []
    assert elapsed < 10


# -- 5 ----------------------------------------------------------------------------


def test_c5_incremental_criteria_accuracy(tmp_path, criterion):
    criterion("5 incremental-criteria accuracy")
    t0 = time.perf_counter()
    spec = SimCorpusSpec(seed=42)
    assert spec.total == 200 and spec.queries == 20
    generate(spec, tmp_path)
    engine = Engine(load_config(tmp_path / "brokers.json"), SimulatedClock())
    engine.crawl_once()
    assert len(engine.repository) == 200
    report = evaluate(load_query_set(tmp_path), engine.processor)
    f1 = [report.mean(lvl) for lvl in LEVELS]
    elapsed = time.perf_counter() - t0
    criterion("5 incremental-criteria accuracy",
              " ".join(f"{lvl}={v:.4f}" for lvl, v in zip(LEVELS, f1)) + f", {elapsed:.2f}s")
    assert f1[1] >= f1[0]
    assert f1[2] >= f1[1]
    assert f1[2] >= 0.7
    assert elapsed < 60


# -- 6 ----------------------------------------------------------------------------

T0 = datetime(2026, 1, 1, tzinfo=timezone.utc)
ATTR_VALUES = {
    "provider": [f"provider-{i:03d}" for i in range(40)],
    "classification": ["travel", "health", "crisis", "finance"],
    "peerGroup": ["rescue", "medics", "travellers"],
    "virtualOrganization": ["vo-a", "vo-b", "vo-c", "vo-d", "vo-e"],
    "peerId": [f"peer-{i:02d}" for i in range(8)],
}


def _random_ad(rng: random.Random, n: int) -> ServiceAdvertisement:
    stype = rng.choice(list(ServiceType))
    broker = f"broker-{rng.randrange(6)}"
    attrs = {k: rng.choice(v) for k, v in ATTR_VALUES.items() if k != "provider" and rng.random() < 0.5}
    return ServiceAdvertisement(
        id=advertisement_id(broker, f"doc-{n}", "op"),
        service_type=stype,
        provider=rng.choice(ATTR_VALUES["provider"]),
        operation_name="op",
        capability=Prop(K.CAPABILITY, "op", description="generic operation"),
        invocation=InvocationDetails(stype, {"endpoint": f"urn:{n}"}),
        source_broker_id=broker,
        harvested_at=T0,
        filter_attributes=attrs,
    )


def test_c6_retrieval_correctness(criterion):
    criterion("6 retrieval correctness")
    rng = random.Random(6)
    ads = [_random_ad(rng, n) for n in range(10_000)]
    repo = Repository()
    for broker in sorted({a.source_broker_id for a in ads}):
        repo.upsert_broker_batch(broker, [a for a in ads if a.source_broker_id == broker])
    assert len(repo) == 10_000
    t0 = time.perf_counter()
    names = list(ATTR_VALUES) + ["serviceType"]
    nonempty = 0
    for _ in range(500):
        filters = []
        for name in rng.sample(names, rng.randint(0, 3)):
            pool = ATTR_VALUES.get(name) or [t.value for t in ServiceType]
            filters.append(SearchFilter(name, rng.choice(pool + ["absent"])))
        targets = rng.sample([f"broker-{i}" for i in range(7)], rng.randint(0, 2))
        got = [a.id for a in repo.retrieve(filters, targets)]
        want = linear_scan(ads, filters, targets)
        assert got == want
        nonempty += bool(want)
    elapsed = time.perf_counter() - t0
    criterion("6 retrieval correctness", f"500 queries, {nonempty} non-empty, {elapsed:.2f}s")
    assert elapsed < 30


# -- 7 ----------------------------------------------------------------------------


def test_c7_scaling_smoke(tmp_path, criterion):
    criterion("7 scaling smoke")
    report = scale_bench([100, 1000, 10_000], query_count=50, repeats=3, workdir=tmp_path)
    (tmp_path / "scale-report.txt").write_text(report.to_text())
    print(report.to_text())
    rows = {r.size: r for r in report.rows}
    ratio = rows[10_000].median_latency / rows[100].median_latency
    criterion("7 scaling smoke",
              f"latency ratio 10k/100 = {ratio:.2f}, crawl 1000 = {rows[1000].crawl_seconds:.2f}s, "
              f"spread {max(report.spread.values()) * 100:.0f}%")
    assert report.to_text().startswith("# run-to-run noise")
    assert ratio <= 10
    assert rows[1000].crawl_seconds < 10


# -- 8 ----------------------------------------------------------------------------


def test_c8_consistency_under_concurrency(tmp_path, suite, criterion):
    criterion("8 consistency under concurrency")
    generate(SMALL, tmp_path / "a")
    generate(SimCorpusSpec(seed=43, brokers=SMALL.brokers, queries=3), tmp_path / "b")
    variants = [load_config(tmp_path / v / "brokers.json").brokers for v in ("a", "b")]
    assert [b.id for b in variants[0]] == [b.id for b in variants[1]]

    clock = FixedClock(parse_instant(FIXED))
    engine = Engine(load_config(tmp_path / "a" / "brokers.json"), clock)
    engine.crawl_once()
    states = [engine.repository.snapshot_state()]
    base = parse_request((tmp_path / "a" / "queries" / "q01-L1.xml").read_bytes())
    request = USQLRequest(base.requirements, min_degree_of_match=0.0, max_results=1000)
    body = serialize_request(request)

    stop = threading.Event()

    def crawl_loop():
        turn = 1
        while not stop.is_set():
            for broker in variants[turn % 2]:
                engine.crawler.crawl_broker(broker)
                states.append(engine.repository.snapshot_state())
            turn += 1

    server = serve_in_thread(engine)
    url = f"http://127.0.0.1:{server.port}/usql"

    def query(_):
        req = urllib.request.Request(url, data=body, method="POST")
        with urllib.request.urlopen(req, timeout=30) as resp:
            return resp.status, resp.read()

    crawler = threading.Thread(target=crawl_loop)
    crawler.start()
    try:
        with ThreadPoolExecutor(max_workers=50) as pool:
            results = list(pool.map(query, range(50)))
    finally:
        stop.set()
        crawler.join()
        server.shutdown()
        server.server_close()

    expected: dict[bytes, int] = {}
    for i, state in enumerate(states):
        processor = QueryProcessor(Repository.from_state(state), suite, clock, engine.processor.known_brokers)
        expected.setdefault(serialize_response(processor.execute(request)), i)
    faults = sum(status != 200 for status, _ in results)
    unmatched = sum(payload not in expected for _, payload in results)
    seen = {expected.get(payload) for _, payload in results}
    criterion("8 consistency under concurrency",
              f"50 queries over {len(states)} snapshots, {len(seen)} distinct seen, {faults} faults")
    assert faults == 0
    assert unmatched == 0


# -- 9 ----------------------------------------------------------------------------


def _fixture_ads(fixtures_dir: Path, registry):
    ads = []
    for path in sorted(fixtures_dir.glob("*/*")):
        if path.suffix in (".wsdl", ".json", ".grid"):
            content = path.read_bytes()
            pub = ServicePublication("fixtures", path.name, sniff_namespace(content), content, {})
            ads.extend(registry.select(PluginKind.PARSER, pub.schema_namespace).parse(pub))
    return ads


def test_c9_format_fidelity(fixtures_dir, registry, criterion):
    criterion("9 format fidelity")
    docs = 0
    for path in sorted((fixtures_dir / "usql").glob("*.xml")):
        raw = path.read_bytes()
        if path.name.startswith("request"):
            again = serialize_request(parse_request(raw))
        elif path.name.startswith("response"):
            again = serialize_response(parse_response(raw))
        else:
            again = serialize_fault(*parse_fault(raw))
        assert again == raw, path.name
        docs += 1
    lines = (fixtures_dir / "records" / "fixture-store.jsonl").read_text().splitlines()
    for line in lines:
        assert encode_advertisement(decode_advertisement(line)) == line
    for ad in _fixture_ads(fixtures_dir, registry):
        assert decode_advertisement(encode_advertisement(ad)) == ad
        docs += 1

    def round_trip(data):
        req = data.draw(requests)
        assert parse_request(serialize_request(req)) == req
        assert serialize_request(parse_request(serialize_request(req))) == serialize_request(req)
        resp = data.draw(responses)
        assert parse_response(serialize_response(resp)) == resp
        assert serialize_response(parse_response(serialize_response(resp))) == serialize_response(resp)
        ad = data.draw(advertisements())
        line = encode_advertisement(ad)
        assert decode_advertisement(line) == ad and encode_advertisement(decode_advertisement(line)) == line

    count = run_counted(round_trip, 500)
    criterion("9 format fidelity", f"{docs + len(lines)} fixture items, {count} randomized instances")
    assert count >= 500
