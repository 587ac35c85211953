"""HTTP endpoints wiring the core package."""

from __future__ import annotations

import numpy as np
from fastapi import APIRouter, HTTPException

from .. import __version__, densities, experiments, zprocess
from ..chain import assemble_paths, sample_vertex_chain
from ..rng import RngStream
from . import schemas

router = APIRouter()


@router.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@router.post("/simulate/kb", response_model=schemas.SimulateKbResponse)
def simulate_kb(req: schemas.SimulateKbRequest) -> schemas.SimulateKbResponse:
    delta = req.delta if req.delta is not None else req.dt / 10.0
    if not delta < req.dt:
        raise HTTPException(422, "delta must be below the first grid time")
    times = req.dt * np.arange(1, int(round(req.horizon / req.dt)) + 1)
    gen = RngStream(req.seed).generator()
    chain = sample_vertex_chain(gen, b=req.anchor_slope, horizon=float(times[-1]), delta=delta)
    b, k, x = assemble_paths(gen, chain, times)
    return schemas.SimulateKbResponse(
        times=times.tolist(),
        brownian=b.values.tolist(),
        majorant=k.values.tolist(),
        reflected=x.values.tolist(),
        config=req.model_dump(),
    )


@router.post("/simulate/z", response_model=schemas.SimulateZResponse)
def simulate_z(req: schemas.SimulateZRequest) -> schemas.SimulateZResponse:
    times = req.dt * np.arange(0, int(round(req.horizon / req.dt)) + 1)
    gen = RngStream(req.seed).generator()
    zp = zprocess.sample_z(gen, zprocess.ZSpec(z=req.z, variant=req.variant), times)
    return schemas.SimulateZResponse(
        times=zp.path.times.tolist(),
        values=zp.path.values.tolist(),
        floor=zp.floor,
        tau=zp.tau,
        glob_inf=zp.glob_inf,
        tail_inf=zp.tail_inf,
        config=req.model_dump(),
    )


@router.post("/density/z-onepoint", response_model=schemas.DensityCurveResponse)
def density_z_onepoint(req: schemas.DensityOnepointRequest) -> schemas.DensityCurveResponse:
    dens = [densities.eval_z_onepoint(req.z, req.t, float(x)) for x in req.x]
    return schemas.DensityCurveResponse(x=req.x, density=dens)


@router.post("/density/z-multipoint", response_model=schemas.DensityMultipointResponse)
def density_z_multipoint(req: schemas.DensityMultipointRequest) -> schemas.DensityMultipointResponse:
    try:
        q = densities.MultipointQuery(z=req.z, times=tuple(req.times), values=tuple(req.values))
    except ValueError as exc:
        raise HTTPException(422, str(exc))
    if req.method == "closed":
        val = densities.eval_z_multipoint_closed(q)
    else:
        val = densities.eval_z_multipoint_quadrature(q)
    return schemas.DensityMultipointResponse(density=val, method=req.method)


@router.post("/density/curve", response_model=schemas.DensityCurveResponse)
def density_curve(req: schemas.DensityCurveRequest) -> schemas.DensityCurveResponse:
    xs = np.asarray(req.x, dtype=float)
    try:
        if req.kind == "chi5":
            dens = densities.eval_boundary_densities("chi5", xs)
        elif req.kind == "z-infimum":
            dens = densities.eval_boundary_densities("z_infimum", xs, z=req.params.get("z", 1.0))
        elif req.kind == "mixture-weight":
            dens = densities.eval_boundary_densities("mixture_weight", xs, z=req.params.get("z", 1.0))
        elif req.kind == "bes-infimum":
            dens = densities.eval_boundary_densities(
                "bes_infimum", xs, n=int(req.params.get("n", 5)), h=req.params.get("h", 1.0)
            )
        else:  # bes5-from-zero at time t
            t = req.params.get("t", 1.0)
            dens = np.array([densities.eval_kernels(0.0, float(x), t).bes5 for x in xs])
    except (ValueError, KeyError) as exc:
        raise HTTPException(422, str(exc))
    return schemas.DensityCurveResponse(x=req.x, density=np.asarray(dens, dtype=float).tolist())


@router.post("/experiment/{name}", response_model=schemas.ExperimentResponse)
def experiment(name: str, req: schemas.ExperimentRequest) -> schemas.ExperimentResponse:
    if name not in experiments.EXPERIMENTS:
        raise HTTPException(404, f"unknown experiment {name!r}")
    try:
        reports = experiments.run_experiment(name, seed=req.seed, threads=req.threads, **req.params)
    except (TypeError, ValueError) as exc:
        raise HTTPException(422, str(exc))
    dicts = [r.to_dict() for r in reports]
    return schemas.ExperimentResponse(reports=dicts, passed=all(r.verdict for r in reports))


@router.post("/selftest", response_model=schemas.ExperimentResponse)
def selftest(req: schemas.SelftestRequest) -> schemas.ExperimentResponse:
    reports = experiments.selftest(seed=req.seed, threads=req.threads)
    return schemas.ExperimentResponse(
        reports=[r.to_dict() for r in reports],
        passed=all(r.verdict for r in reports),
    )
