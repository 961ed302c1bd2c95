"""Operator entry points: detect, simulate, collect, export, oui-build.

`detect` and `simulate` run the edge pipeline locally; `collect` runs
the cloud side (batch file/stdin ingestion, an MQTT subscription, or the
HTTP service); `export` reads a collector store directly or acts as a
thin client against a running service. The `--config` flag falls back to
the STTK_CONFIG environment variable on every command.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import threading
import urllib.error
import urllib.parse
import urllib.request
from pathlib import Path

from . import __version__, uplink
from .alerts import AlertEngine, AlertPolicy, StdoutAlertSink, WebhookAlertSink
from .collector import Collector, SeriesStore, export_csv, export_json
from .config import SensorConfig
from .oui import DEFAULT_MOBILE_VENDORS, build_snapshot
from .pcap import BadMagic, PcapError, PcapFileSource, UnsupportedLinkType
from .pipeline import run_detect
from .simulator import InvalidScenario, generate, load_scenario
from .uplink import FileSink, MemorySink, MqttSink, Publisher, StdoutSink
from .window import WindowStore

DEFAULT_CONFIG = "sttk-config.json"


def _fail(message: str, code: int = 2) -> int:
    print(f"sttk: error: {message}", file=sys.stderr)
    return code


def _config_path(args: argparse.Namespace) -> str:
    return args.config or os.environ.get("STTK_CONFIG") or DEFAULT_CONFIG


def _load_config(args: argparse.Namespace) -> SensorConfig:
    config = SensorConfig.load(_config_path(args))
    for name in ("sensor_id", "window_s", "sample_period_s"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(config, name, value)
    return config


def _make_sink(config: SensorConfig):
    if config.sink == "stdout":
        return StdoutSink()
    if config.sink == "file":
        if not config.sink_path:
            raise ValueError("sink 'file' needs sink_path in the config")
        return FileSink(config.sink_path)
    if config.sink == "mqtt":
        return MqttSink(config.mqtt_host, config.mqtt_port, client_id=config.sensor_id)
    if config.sink == "memory":
        return MemorySink()
    raise ValueError(f"unknown sink {config.sink!r}")


def cmd_detect(args: argparse.Namespace) -> int:
    pcap_path = Path(args.pcap)
    if not pcap_path.is_file():
        return _fail(f"no such capture file: {pcap_path}")
    try:
        config = _load_config(args)
        registry = config.registry()
    except (ValueError, OSError) as exc:
        return _fail(str(exc))

    out_fh = None
    emit = None
    if args.out == "stdout":
        emit = lambda report: print(uplink.encode_json(report).decode())
    else:
        out_path = args.out_path or config.sink_path
        if not out_path:
            return _fail("--out ndjson needs --out-path (or sink_path in the config)")
        out_fh = open(out_path, "w", encoding="utf-8")
        emit = lambda report: out_fh.write(uplink.encode_json(report).decode() + "\n")

    publisher = None
    if args.publish:
        try:
            publisher = Publisher(_make_sink(config), config.transport, buffer_capacity=config.buffer_capacity)
        except ValueError as exc:
            if out_fh:
                out_fh.close()
            return _fail(str(exc))

    journal_fh = open(config.journal_path, "a", encoding="utf-8") if config.journal_path else None
    store = WindowStore(journal=journal_fh)

    def on_report(report) -> None:
        emit(report)
        if publisher is not None:
            publisher.publish(report)

    try:
        _, stats = run_detect(
            PcapFileSource(pcap_path), config, registry, store=store, on_report=on_report
        )
    except (BadMagic, UnsupportedLinkType) as exc:
        return _fail(str(exc))
    except PcapError as exc:
        return _fail(str(exc), code=1)
    finally:
        for fh in (out_fh, journal_fh):
            if fh:
                fh.close()

    print(
        f"processed {stats.frames} frames ({stats.parse_errors} unparseable), "
        f"{stats.observations} observations, {stats.reports} reports",
        file=sys.stderr,
    )
    if stats.truncated:
        print("warning: capture was truncated; results are partial", file=sys.stderr)
        return 1
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    scenario_path = Path(args.scenario)
    if not scenario_path.is_file():
        return _fail(f"no such scenario file: {scenario_path}")
    try:
        scenario = load_scenario(scenario_path)
        pcap_bytes, truth = generate(scenario)
    except InvalidScenario as exc:
        return _fail(str(exc))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "trace.pcap").write_bytes(pcap_bytes)
    (out_dir / "ground_truth.json").write_text(
        json.dumps(truth.to_json(), indent=2) + "\n", encoding="utf-8"
    )
    frames = sum(len(d.emit_times_us) for d in truth.devices)
    print(f"wrote {out_dir / 'trace.pcap'} ({frames} device frames) and ground_truth.json")
    return 0


def _build_collector(config: SensorConfig) -> Collector:
    cc = config.collector
    store = SeriesStore(cc.data_dir)
    sinks = [StdoutAlertSink()]
    if cc.webhook_url:
        sinks.append(WebhookAlertSink(cc.webhook_url))
    policies = [AlertPolicy(**p) for p in cc.policies]
    engine = AlertEngine(policies, sinks)
    return Collector(store, engine, dead_letter_path=cc.resolved_dead_letter())


def _mqtt_ingest_loop(collector: Collector, host: str, port: int) -> None:
    from .mqtt import MqttClient

    client = MqttClient(host, port, client_id="sttk-collector")
    client.connect()
    client.subscribe(uplink.TOPIC_FILTER)
    while True:
        message = client.receive(timeout=30.0)
        if message is None:
            client.ping()
            continue
        _, payload = message
        try:
            collector.ingest_json(payload)
        except (uplink.DecodeError, uplink.InvariantViolation):
            pass  # counted and quarantined by the collector


def cmd_collect(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
        collector = _build_collector(config)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))

    ok = failed = 0
    for path in args.ingest or []:
        if not Path(path).is_file():
            return _fail(f"no such report file: {path}")
        with open(path, encoding="utf-8") as fh:
            n_ok, n_failed = collector.ingest_ndjson(fh)
        ok += n_ok
        failed += n_failed
    if args.stdin:
        n_ok, n_failed = collector.ingest_ndjson(sys.stdin)
        ok += n_ok
        failed += n_failed
    if args.ingest or args.stdin:
        print(f"ingested {ok} reports, {failed} quarantined")

    if args.mqtt:
        cc = config.collector
        if not cc.mqtt_host:
            return _fail("collector.mqtt_host is not configured")
        thread = threading.Thread(
            target=_mqtt_ingest_loop, args=(collector, cc.mqtt_host, cc.mqtt_port), daemon=True
        )
        thread.start()
        if not args.serve:
            print(f"subscribed to {uplink.TOPIC_FILTER} on {cc.mqtt_host}:{cc.mqtt_port}; ctrl-c to stop")
            thread.join()
            return 0

    if args.serve:
        import uvicorn

        from .service import create_app

        app = create_app(collector)
        uvicorn.run(app, host=config.collector.host, port=config.collector.port, log_level="warning")
        return 0

    if not (args.ingest or args.stdin or args.mqtt):
        return _fail("nothing to do: pass --ingest/--stdin/--mqtt/--serve")
    return 0


def cmd_export(args: argparse.Namespace) -> int:
    if args.from_ts > args.to_ts:
        return _fail(f"--from {args.from_ts} is after --to {args.to_ts}")
    if args.url:
        query = urllib.parse.urlencode(
            {"from_ts": args.from_ts, "to_ts": args.to_ts, "format": args.format}
        )
        url = f"{args.url.rstrip('/')}/v1/sensors/{urllib.parse.quote(args.sensor)}/export?{query}"
        try:
            with urllib.request.urlopen(url, timeout=10.0) as resp:
                text = resp.read().decode()
        except (urllib.error.URLError, OSError) as exc:
            return _fail(f"export request failed: {exc}", code=1)
    else:
        try:
            config = _load_config(args)
        except (ValueError, OSError) as exc:
            return _fail(str(exc))
        data_dir = args.data_dir or config.collector.data_dir
        if not Path(data_dir).is_dir():
            return _fail(f"no such collector data dir: {data_dir}")
        store = SeriesStore(data_dir)
        points = store.query(args.sensor, args.from_ts, args.to_ts)
        text = export_csv(points) if args.format == "csv" else export_json(points)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_oui_build(args: argparse.Namespace) -> int:
    manuf_path = Path(args.manuf)
    if not manuf_path.is_file():
        return _fail(f"no such manuf file: {manuf_path}")
    vendors = tuple(args.mobile_vendor) if args.mobile_vendor else DEFAULT_MOBILE_VENDORS
    try:
        with open(manuf_path, encoding="utf-8") as manuf, open(args.out, "w", encoding="utf-8") as out:
            total, mobile = build_snapshot(manuf, out, vendors)
    except ValueError as exc:
        return _fail(str(exc))
    print(f"wrote {args.out}: {total} prefixes, {mobile} mobile")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sttk", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sttk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="replay a pcap through the detector and emit reports")
    p.add_argument("--pcap", required=True, help="capture file (link type 105 or 127)")
    p.add_argument("--config", help=f"sensor config JSON (default $STTK_CONFIG or {DEFAULT_CONFIG})")
    p.add_argument("--out", choices=("stdout", "ndjson"), default="stdout")
    p.add_argument("--out-path", help="report file for --out ndjson")
    p.add_argument("--publish", action="store_true", help="also publish via the configured sink")
    p.add_argument("--sensor-id")
    p.add_argument("--window-s", type=int, dest="window_s")
    p.add_argument("--sample-period-s", type=int, dest="sample_period_s")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="generate a synthetic trace and its ground truth")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("collect", help="run the cloud-side collector")
    p.add_argument("--config", help=f"config JSON (default $STTK_CONFIG or {DEFAULT_CONFIG})")
    p.add_argument("--ingest", action="append", metavar="FILE", help="NDJSON report file (repeatable)")
    p.add_argument("--stdin", action="store_true", help="ingest NDJSON reports from stdin")
    p.add_argument("--mqtt", action="store_true", help="subscribe to the report topic")
    p.add_argument("--serve", action="store_true", help="serve the HTTP API")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("export", help="export a sensor's series as CSV or JSON")
    p.add_argument("--sensor", required=True)
    p.add_argument("--from", dest="from_ts", type=int, required=True, metavar="TS")
    p.add_argument("--to", dest="to_ts", type=int, required=True, metavar="TS")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--config", help="config JSON for the data dir")
    p.add_argument("--data-dir", help="collector data dir (overrides config)")
    p.add_argument("--url", help="running collector service, e.g. http://127.0.0.1:8008")
    p.add_argument("--out", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("oui-build", help="build an OUI registry snapshot from a manuf database")
    p.add_argument("--manuf", required=True, help="manufacturer database file (manuf format)")
    p.add_argument("--out", required=True, help="snapshot file to write")
    p.add_argument(
        "--mobile-vendor",
        action="append",
        metavar="NAME",
        help="vendor treated as mobile (repeatable; default: built-in list)",
    )
    p.set_defaults(func=cmd_oui_build)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
