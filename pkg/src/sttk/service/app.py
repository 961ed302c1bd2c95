"""HTTP face of the collector: report ingestion, series queries, export.

All HTTP ingestion funnels through the same Collector as file, stdin and
MQTT sources, so validation, dead-lettering and alert evaluation behave
identically regardless of how a report arrives.
"""

from __future__ import annotations

import json

from fastapi import FastAPI, HTTPException, Query, Response

from .. import __version__, uplink
from ..alerts import AlertPolicy
from ..collector import Collector, export_csv, export_json
from ..uplink import DecodeError, InvariantViolation, LORA_APP_PORT
from .schemas import (
    AlertOut,
    HealthOut,
    LorawanUplinkIn,
    PolicyIn,
    PolicyOut,
    ReportIn,
    SeriesPointOut,
    StatsOut,
)

MAX_TS = 2**62


def create_app(collector: Collector) -> FastAPI:
    app = FastAPI(title="sttk crowding collector", version=__version__)

    @app.get("/health", response_model=HealthOut)
    def health() -> HealthOut:
        return HealthOut(status="ok", version=__version__)

    @app.post("/v1/reports", response_model=SeriesPointOut, status_code=201)
    def ingest_report(report: ReportIn) -> SeriesPointOut:
        payload = _canonical_payload(report)
        try:
            point = collector.ingest_json(payload)
        except InvariantViolation as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except DecodeError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return SeriesPointOut(**point.to_json())

    @app.post("/v1/lorawan", response_model=SeriesPointOut, status_code=201)
    def ingest_lorawan(uplink_in: LorawanUplinkIn) -> SeriesPointOut:
        if uplink_in.port != LORA_APP_PORT:
            raise HTTPException(status_code=400, detail=f"unknown application port {uplink_in.port}")
        try:
            payload = bytes.fromhex(uplink_in.payload_hex)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail="payload_hex is not hex") from exc
        try:
            point = collector.ingest_lorawan(payload, uplink_in.sensor_id, uplink_in.received_ts)
        except InvariantViolation as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except DecodeError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return SeriesPointOut(**point.to_json())

    @app.get("/v1/sensors", response_model=list[str])
    def sensors() -> list[str]:
        return collector.store.sensors()

    @app.get("/v1/sensors/{sensor_id}/series", response_model=list[SeriesPointOut])
    def series(
        sensor_id: str,
        from_ts: int = Query(0, ge=0),
        to_ts: int = Query(MAX_TS, ge=0),
    ) -> list[SeriesPointOut]:
        try:
            points = collector.store.query(sensor_id, from_ts, to_ts)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return [SeriesPointOut(**p.to_json()) for p in points]

    @app.get("/v1/sensors/{sensor_id}/export")
    def export(
        sensor_id: str,
        from_ts: int = Query(0, ge=0),
        to_ts: int = Query(MAX_TS, ge=0),
        format: str = Query("csv", pattern="^(csv|json)$"),
    ) -> Response:
        try:
            points = collector.store.query(sensor_id, from_ts, to_ts)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        if format == "csv":
            return Response(export_csv(points), media_type="text/csv")
        return Response(export_json(points), media_type="application/json")

    @app.get("/v1/policies", response_model=list[PolicyOut])
    def policies() -> list[PolicyOut]:
        if collector.engine is None:
            return []
        return [PolicyOut(**vars(p)) for p in collector.engine.policies]

    @app.post("/v1/policies", response_model=PolicyOut, status_code=201)
    def add_policy(policy: PolicyIn) -> PolicyOut:
        if collector.engine is None:
            raise HTTPException(status_code=409, detail="alerting is not enabled")
        try:
            collector.engine.add_policy(AlertPolicy(**policy.model_dump()))
        except ValueError as exc:
            raise HTTPException(status_code=409, detail=str(exc)) from exc
        return PolicyOut(**policy.model_dump())

    @app.get("/v1/alerts", response_model=list[AlertOut])
    def alerts() -> list[AlertOut]:
        if collector.engine is None:
            return []
        return [AlertOut(**a.to_json()) for a in collector.engine.history]

    @app.get("/v1/stats", response_model=StatsOut)
    def stats() -> StatsOut:
        return StatsOut(
            accepted=collector.stats.accepted,
            duplicates=collector.stats.duplicates,
            decode_errors=collector.stats.decode_errors,
            invariant_errors=collector.stats.invariant_errors,
            sensors=len(collector.store.sensors()),
            points=collector.store.point_count(),
        )

    return app


def _canonical_payload(report: ReportIn) -> bytes:
    doc = {key: getattr(report, key) for key in uplink.JSON_KEYS}
    return json.dumps(doc, separators=(",", ":")).encode()
