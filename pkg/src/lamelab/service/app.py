"""FastAPI service wrapping the compute layer.

Every endpoint mirrors one CLI subcommand and shares its implementation via
:mod:`lamelab.runner`; the service returns structured JSON instead of CSV
artifacts.  Run with  ``uvicorn lamelab.service:app``.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..config import RunConfig
from ..errors import LamelabError, ValidationError
from ..runner import (
    compute_mesh,
    compute_simulate,
    compute_spectrum,
    compute_sweep,
    compute_verify,
)
from .schemas import (
    CheckResult,
    MeshRequest,
    MeshResponse,
    SimulateRequest,
    SimulateResponse,
    SpectrumRequest,
    SpectrumResponse,
    SpectrumSample,
    SweepRequest,
    SweepResponse,
    SweepSample,
    TraceSample,
    VerifyRequest,
    VerifyResponse,
)


def _config_from(req) -> RunConfig:
    kwargs = {}
    geom = getattr(req, "geometry", None)
    if geom is not None:
        kwargs.update(n=geom.n, inner_lo=geom.inner_lo, inner_hi=geom.inner_hi)
    mat = getattr(req, "material", None)
    if mat is not None:
        kwargs.update(mu=mat.mu, lam=mat.lam, mu_thin=mat.mu_thin, lam_thin=mat.lam_thin)
    for name in ("dt", "t_final", "theta", "sample_every", "alpha_max",
                 "alpha_decades", "beta_margin", "n_data", "seed"):
        if hasattr(req, name):
            kwargs[name] = getattr(req, name)
    if hasattr(req, "betas"):
        kwargs["betas"] = tuple(req.betas)
    if hasattr(req, "k"):
        kwargs["spectrum_k"] = req.k
    cfg = RunConfig(**kwargs)
    try:
        cfg.validate()
    except ValidationError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return cfg


def create_app() -> FastAPI:
    app = FastAPI(
        title="lamelab",
        version=__version__,
        description="Coupled heat / thin-shell / bulk-elastic FEM laboratory.",
    )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "version": __version__}

    @app.post("/mesh", response_model=MeshResponse)
    def mesh_endpoint(req: MeshRequest) -> MeshResponse:
        cfg = _config_from(req)
        try:
            mesh, text = compute_mesh(cfg)
        except LamelabError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        per_face = [int((mesh.interface_face == j).sum()) for j in range(1, mesh.K + 1)]
        return MeshResponse(
            vertex_count=len(mesh.vertices),
            fluid_tets=int((mesh.tet_tags == 0).sum()),
            solid_tets=int((mesh.tet_tags == 1).sum()),
            interface_triangles=len(mesh.interface_tris),
            triangles_per_face=per_face,
            export=text if req.include_export else None,
        )

    @app.post("/simulate", response_model=SimulateResponse)
    def simulate_endpoint(req: SimulateRequest) -> SimulateResponse:
        cfg = _config_from(req)
        try:
            trace = compute_simulate(cfg)
        except LamelabError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        samples = [
            TraceSample(t=float(t), energy=float(e), dissipated=float(q), residual=float(r))
            for t, e, q, r in zip(trace.times, trace.energy, trace.dissipated, trace.residual)
        ]
        return SimulateResponse(samples=samples, final_energy=float(trace.energy[-1]))

    @app.post("/resolvent-sweep", response_model=SweepResponse)
    def sweep_endpoint(req: SweepRequest) -> SweepResponse:
        cfg = _config_from(req)
        try:
            sweep = compute_sweep(cfg)
        except ValidationError as exc:
            raise HTTPException(status_code=422, detail=str(exc)) from exc
        except LamelabError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        samples = [
            SweepSample(beta=b, alpha=a, sqrt_alpha_norm=v, static_residual=s,
                        dist_to_excluded=d)
            for b, a, v, s, d in sweep.rows()
        ]
        return SweepResponse(samples=samples, tail_monotone=bool(sweep.tail_monotone.all()))

    @app.post("/spectrum", response_model=SpectrumResponse)
    def spectrum_endpoint(req: SpectrumRequest) -> SpectrumResponse:
        cfg = _config_from(req)
        try:
            spec = compute_spectrum(cfg)
        except LamelabError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        samples = [
            SpectrumSample(k=i + 1, eigenvalue=float(lam), residual=float(res))
            for i, (lam, res) in enumerate(zip(spec.eigenvalues, spec.residuals))
        ]
        return SpectrumResponse(samples=samples,
                                frequencies=[float(f) for f in spec.frequencies])

    @app.post("/verify", response_model=VerifyResponse)
    def verify_endpoint(req: VerifyRequest) -> VerifyResponse:
        cfg = _config_from(req)
        try:
            checks = compute_verify(cfg)
        except LamelabError as exc:
            raise HTTPException(status_code=500, detail=str(exc)) from exc
        results = [CheckResult(name=c.name, passed=c.passed, value=c.value, tol=c.tol)
                   for c in checks]
        return VerifyResponse(passed=all(c.passed for c in checks), checks=results)

    return app


app = create_app()
