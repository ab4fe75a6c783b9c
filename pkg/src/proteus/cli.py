"""Command line entry point.

Exit codes: 0 success, 1 operational failure (crawl errors, bad
configuration), 2 query faults and usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from .clock import FixedClock, SystemClock, parse_instant
from .config import Engine, EngineConfig, load_config
from .documents import parse_request, serialize_fault
from .errors import ConfigError, ProteusError

EXIT_OK, EXIT_FAILURE, EXIT_FAULT = 0, 1, 2


def _clock(args):
    return FixedClock(parse_instant(args.clock_fixed)) if args.clock_fixed else SystemClock()


def _engine(args) -> Engine:
    if args.config:
        config = load_config(args.config)
    else:
        try:
            config = load_config(None)
        except ConfigError:
            if not args.store:
                raise
            config = EngineConfig()
    if args.store:
        config = dataclasses.replace(config, store=Path(args.store))
    return Engine(config, _clock(args))


def cmd_crawl(args) -> int:
    engine = _engine(args)
    if args.once:
        reports = engine.crawl_once()
    else:
        from .crawler import Scheduler

        scheduler = Scheduler(engine.crawler, engine.config.brokers, SystemClock())
        try:
            reports = scheduler.run(duration=args.duration)
        except KeyboardInterrupt:
            reports = scheduler.reports
    for report in reports:
        print(report.summary())
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAILURE


def cmd_query(args) -> int:
    from .server import handle_usql

    engine = _engine(args)
    body = sys.stdin.buffer.read() if args.request in (None, "-") else Path(args.request).read_bytes()
    if args.explain:
        try:
            explanation = engine.processor.explain(parse_request(body, strict=args.strict_xml), args.explain)
        except ProteusError as exc:
            sys.stdout.buffer.write(serialize_fault(exc.code, str(exc), getattr(exc, "path", "")))
            return EXIT_FAULT
        print(explanation.render())
        return EXIT_OK
    status, payload = handle_usql(engine, body, strict=args.strict_xml)
    sys.stdout.buffer.write(payload)
    return EXIT_OK if status == 200 else EXIT_FAULT


def cmd_serve(args) -> int:
    from .server import USQLServer

    engine = _engine(args)
    server = USQLServer((args.host, args.port), engine, strict=args.strict_xml)
    if args.crawl:
        server.start_background_crawl()
    print(f"listening on http://{args.host}:{server.port}/usql", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()
    return EXIT_OK


def cmd_generate(args) -> int:
    from . import brokersim

    spec = brokersim.SimCorpusSpec.load(args.corpus) if args.corpus else brokersim.SimCorpusSpec()
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    corpus = brokersim.generate(spec, args.out)
    print(f"wrote {spec.total} publications for {len(corpus.requests)} queries to {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from . import brokersim

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.scale:
        sizes = [int(s) for s in args.scale.split(",") if s.strip()]
        report = brokersim.scale_bench(sizes, args.queries, seed=args.seed if args.seed is not None else 42)
        (out / "scale-report.txt").write_text(report.to_text(), encoding="utf-8")
        (out / "scale-report.json").write_text(report.to_json(), encoding="utf-8")
        print(report.to_text(), end="")
        return EXIT_OK
    spec = brokersim.SimCorpusSpec.load(args.corpus) if args.corpus else brokersim.SimCorpusSpec()
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    root = out / "corpus"
    brokersim.generate(spec, root)
    engine = Engine(load_config(root / "brokers.json"), _clock(args))
    reports = engine.crawl_once()
    report = brokersim.evaluate(brokersim.load_query_set(root), engine.processor)
    (out / "eval-report.txt").write_text(report.to_text(), encoding="utf-8")
    (out / "eval-report.json").write_text(report.to_json(), encoding="utf-8")
    for lvl in report.levels():
        print(f"{lvl} precision={report.mean(lvl, 'precision'):.4f} "
              f"recall={report.mean(lvl, 'recall'):.4f} f1={report.mean(lvl):.4f}")
    return EXIT_OK if all(r.ok for r in reports) else EXIT_FAILURE


def cmd_plugins(args) -> int:
    from .plugins import default_registry

    rows = [(d.kind.value, d.key, d.version) for d in default_registry().list()]
    widths = [max(len(r[i]) for r in rows + [("kind", "key", "version")]) for i in range(3)]
    for row in [("kind", "key", "version")] + rows:
        print("  ".join(col.ljust(w) for col, w in zip(row, widths)).rstrip())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="proteus", description="Unified discovery over heterogeneous brokers.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def engine_flags(p):
        p.add_argument("--config", help="engine configuration (default: $PROTEUS_CONFIG)")
        p.add_argument("--store", help="advertisement store file, overriding the configuration")
        p.add_argument("--clock-fixed", metavar="ISO", help="pin the engine clock to one instant")

    p = sub.add_parser("crawl", help="harvest the configured brokers")
    engine_flags(p)
    p.add_argument("--once", action="store_true", help="crawl each broker once and exit")
    p.add_argument("--duration", type=float, help="stop scheduled crawling after this many seconds")
    p.set_defaults(func=cmd_crawl)

    p = sub.add_parser("query", help="answer a USQL request from a file or stdin")
    engine_flags(p)
    p.add_argument("request", nargs="?", help="request file, or - for stdin")
    p.add_argument("--explain", metavar="AD_ID", help="print the score breakdown for one advertisement")
    p.add_argument("--strict-xml", action="store_true", help="reject unknown elements and attributes")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("serve", help="serve USQL over HTTP")
    engine_flags(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--crawl", action="store_true", help="crawl in the background on each broker's interval")
    p.add_argument("--strict-xml", action="store_true", help="reject unknown elements and attributes")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("generate", help="write a synthetic broker corpus")
    p.add_argument("--corpus", help="corpus spec file (JSON)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="precision/recall or scaling evaluation")
    p.add_argument("--corpus", help="corpus spec file (JSON)")
    p.add_argument("--scale", metavar="SIZES", help="comma-separated corpus sizes for the scaling run")
    p.add_argument("--queries", type=int, default=50, help="queries per size in the scaling run")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=".", help="directory for report files")
    p.add_argument("--clock-fixed", metavar="ISO")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("plugins", help="inspect the plugin registry")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_plugins)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"proteus: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"proteus: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
