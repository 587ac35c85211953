"""Pydantic request/response models of the HTTP service."""

from __future__ import annotations

from typing import Any, Literal, Optional

from pydantic import BaseModel, Field, field_validator


class HealthResponse(BaseModel):
    status: str
    version: str


class SimulateKbRequest(BaseModel):
    seed: int = 0
    horizon: float = Field(1.0, gt=0)
    dt: float = Field(1e-3, gt=0)
    delta: Optional[float] = Field(None, gt=0)
    anchor_slope: float = Field(1.0, gt=0)


class SimulateKbResponse(BaseModel):
    times: list[float]
    brownian: list[float]
    majorant: list[float]
    reflected: list[float]
    config: dict[str, Any]


class SimulateZRequest(BaseModel):
    seed: int = 0
    z: float = Field(1.0, gt=0)
    variant: Literal["limit", "path-decomposition", "mixture"] = "path-decomposition"
    horizon: float = Field(1.0, gt=0)
    dt: float = Field(1e-3, gt=0)


class SimulateZResponse(BaseModel):
    times: list[float]
    values: list[float]
    floor: float
    tau: Optional[float]
    glob_inf: Optional[float]
    tail_inf: float
    config: dict[str, Any]


class DensityOnepointRequest(BaseModel):
    z: float = Field(1.0, gt=0)
    t: float = Field(1.0, gt=0)
    x: list[float]

    @field_validator("x")
    @classmethod
    def _nonempty(cls, v):
        if not v:
            raise ValueError("x must be nonempty")
        return v


class DensityCurveRequest(BaseModel):
    kind: Literal["chi5", "z-infimum", "mixture-weight", "bes-infimum", "bes5-from-zero"]
    x: list[float]
    params: dict[str, float] = Field(default_factory=dict)

    @field_validator("x")
    @classmethod
    def _nonempty(cls, v):
        if not v:
            raise ValueError("x must be nonempty")
        return v


class DensityCurveResponse(BaseModel):
    x: list[float]
    density: list[float]


class DensityMultipointRequest(BaseModel):
    z: float = Field(1.0, gt=0)
    times: list[float]
    values: list[float]
    method: Literal["closed", "quadrature"] = "closed"


class DensityMultipointResponse(BaseModel):
    density: float
    method: str


class ExperimentRequest(BaseModel):
    seed: int = 0
    threads: int = Field(1, ge=1)
    params: dict[str, Any] = Field(default_factory=dict)


class ExperimentResponse(BaseModel):
    reports: list[dict[str, Any]]
    passed: bool


class SelftestRequest(BaseModel):
    seed: int = 0
    threads: int = Field(1, ge=1)
