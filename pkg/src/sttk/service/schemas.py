"""Pydantic request/response models for the collector service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class ReportIn(BaseModel):
    sensor_id: str = Field(min_length=1)
    ts: int = Field(ge=0)
    window_s: int = Field(ge=1)
    connected: int = Field(ge=0)
    probes_real: int = Field(ge=0)
    probes_virtual: int = Field(ge=0)
    total: int = Field(ge=0)


class SeriesPointOut(BaseModel):
    sensor_id: str
    ts: int
    window_s: int
    connected: int
    probes_real: int
    probes_virtual: int
    total: int


class LorawanUplinkIn(BaseModel):
    sensor_id: str = Field(min_length=1)
    payload_hex: str = Field(min_length=2)
    port: int = 10
    received_ts: int | None = None


class PolicyIn(BaseModel):
    name: str = Field(min_length=1)
    threshold: int = Field(ge=0)
    consecutive: int = Field(ge=1, default=1)
    sensor_id: str = "*"


class PolicyOut(PolicyIn):
    pass


class AlertOut(BaseModel):
    policy: str
    sensor_id: str
    ts: int
    total: int


class StatsOut(BaseModel):
    accepted: int
    duplicates: int
    decode_errors: int
    invariant_errors: int
    sensors: int
    points: int


class HealthOut(BaseModel):
    status: str
    version: str
