"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class GeometrySpec(BaseModel):
    n: int = Field(default=8, ge=1, description="grid cells per axis")
    inner_lo: float = Field(default=0.25, description="inner box lower bound, all axes")
    inner_hi: float = Field(default=0.75, description="inner box upper bound, all axes")


class MaterialSpec(BaseModel):
    mu: float = Field(default=1.0, gt=0)
    lam: float = Field(default=1.0, ge=0)
    mu_thin: float = Field(default=1.0, gt=0)
    lam_thin: float = Field(default=1.0, ge=0)


class MeshRequest(BaseModel):
    geometry: GeometrySpec = GeometrySpec()
    include_export: bool = False


class MeshResponse(BaseModel):
    vertex_count: int
    fluid_tets: int
    solid_tets: int
    interface_triangles: int
    triangles_per_face: list[int]
    export: str | None = None


class SimulateRequest(BaseModel):
    geometry: GeometrySpec = GeometrySpec()
    material: MaterialSpec = MaterialSpec()
    dt: float = Field(default=0.05, gt=0)
    t_final: float = Field(default=20.0, gt=0)
    theta: float = Field(default=0.5, ge=0.5, le=1.0)
    sample_every: int = Field(default=1, ge=1)
    seed: int = 1234


class TraceSample(BaseModel):
    t: float
    energy: float
    dissipated: float
    residual: float


class SimulateResponse(BaseModel):
    samples: list[TraceSample]
    final_energy: float


class SweepRequest(BaseModel):
    geometry: GeometrySpec = GeometrySpec()
    material: MaterialSpec = MaterialSpec()
    alpha_max: float = Field(default=0.1, gt=0)
    alpha_decades: int = Field(default=8, ge=1)
    betas: list[float] = [0.7, 1.7, 3.1, 5.3, 8.9]
    beta_margin: float = Field(default=0.5, gt=0)
    n_data: int = Field(default=3, ge=1)
    seed: int = 1234


class SweepSample(BaseModel):
    beta: float
    alpha: float
    sqrt_alpha_norm: float
    static_residual: float
    dist_to_excluded: float


class SweepResponse(BaseModel):
    samples: list[SweepSample]
    tail_monotone: bool


class SpectrumRequest(BaseModel):
    geometry: GeometrySpec = GeometrySpec()
    material: MaterialSpec = MaterialSpec()
    k: int = Field(default=10, ge=1)


class SpectrumSample(BaseModel):
    k: int
    eigenvalue: float
    residual: float


class SpectrumResponse(BaseModel):
    samples: list[SpectrumSample]
    frequencies: list[float]


class VerifyRequest(BaseModel):
    geometry: GeometrySpec = GeometrySpec()
    material: MaterialSpec = MaterialSpec()
    seed: int = 1234


class CheckResult(BaseModel):
    name: str
    passed: bool
    value: float
    tol: float


class VerifyResponse(BaseModel):
    passed: bool
    checks: list[CheckResult]
