"""FastAPI service exposing the chain analysis pipeline.

The CLI talks to these endpoints through an in-process ASGI transport by
default; ``bdperiod serve`` runs the same app under uvicorn for remote
clients.  Chain-spec or parameter problems map to HTTP 400 with a uniform
``{"error": {"type", "message"}}`` body; internal consistency failures map
to HTTP 500.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..chain import build_chain
from ..errors import ChainError, ContradictionDetected, Saturated
from ..report import SimPlan, analyze
from . import models

TOOL = {"name": "bdperiod", "version": __version__}

app = FastAPI(title="bdperiod", version=__version__)


@app.exception_handler(ChainError)
async def _chain_error(request: Request, exc: ChainError):
    return JSONResponse(
        status_code=400,
        content={"error": {"type": type(exc).__name__, "message": str(exc)}},
    )


@app.exception_handler(RequestValidationError)
async def _validation_error(request: Request, exc: RequestValidationError):
    return JSONResponse(
        status_code=400,
        content={"error": {"type": "ValidationError", "message": str(exc)}},
    )


@app.exception_handler(Saturated)
async def _saturated_error(request: Request, exc: Saturated):
    return JSONResponse(
        status_code=400,
        content={"error": {"type": "Saturated", "message": str(exc)}},
    )


@app.exception_handler(ContradictionDetected)
async def _contradiction(request: Request, exc: ContradictionDetected):
    return JSONResponse(
        status_code=500,
        content={"error": {"type": "ContradictionDetected", "message": str(exc)}},
    )


def _build(doc: models.ChainDocument):
    return build_chain(doc.model_dump())


@app.get("/healthz")
def healthz():
    return {"status": "ok"}


@app.get("/version", response_model=models.ToolInfo)
def version():
    return models.ToolInfo(**TOOL)


@app.post("/validate", response_model=models.ValidateResponse)
def validate(req: models.ValidateRequest):
    chain = _build(req.chain)
    return models.ValidateResponse(
        valid=True,
        chain=models.ChainDocument.model_validate(chain.document()),
        row0_adjusted=chain.row0_adjusted,
    )


@app.post("/analyze", response_model=models.AnalyzeResponse)
def analyze_endpoint(req: models.AnalyzeRequest):
    chain = _build(req.chain)
    policy = req.policy.to_policy()
    plan = None
    if req.simulate is not None:
        s = req.simulate
        plan = SimPlan(
            master_seed=s.seed,
            fleet=s.seeds,
            steps=s.steps,
            burn_in=s.burn_in,
            ms=tuple(s.m),
            x0=s.x0,
            window=s.window,
        )
    bundle = analyze(chain, policy, plan)
    return models.AnalyzeResponse.model_validate(bundle.as_dict())


@app.post("/simulate", response_model=models.SimulateResponse)
def simulate_endpoint(req: models.SimulateRequest):
    from ..sim import run_fleet  # deferred: compiling the kernel is slow

    chain = _build(req.chain)
    s = req.sim
    fleet = run_fleet(
        chain,
        s.seed,
        s.seeds,
        steps=s.steps,
        burn_in=s.burn_in,
        ms=tuple(s.m),
        x0=s.x0,
        window=s.window,
    )
    payload = {
        "tool": TOOL,
        "chain": chain.document(),
        "row0_adjusted": chain.row0_adjusted,
        "master_seed": s.seed,
        "fleet": s.seeds,
        "steps": s.steps,
        "burn_in": fleet.reports[0].burn_in,
        "ms": sorted(set(s.m)),
        "x0": s.x0,
        "reports": [r.as_dict() for r in fleet.reports],
        "estimate_counts": fleet.estimate_counts(),
        "majority_estimate": fleet.majority_estimate(),
    }
    return models.SimulateResponse.model_validate(payload)


@app.post("/qpoly", response_model=models.QpolyResponse)
def qpoly_endpoint(req: models.QpolyRequest):
    from .. import qpoly

    chain = _build(req.chain)
    policy = req.policy.to_policy()
    if req.x == -1.0:
        seq = qpoly.qbar_minus_one(chain, req.n, req.route)
        growth = qpoly.growth_verdict(chain, req.n, policy, qseq=seq)
        seq = qpoly.QSequence(
            x=-1.0,
            values=seq.values,
            is_qbar=True,
            saturated_at=seq.saturated_at,
            route=seq.route,
            growth=growth,
        )
    else:
        seq = qpoly.q_eval(chain, req.x, req.n)
    payload = {
        "tool": TOOL,
        "chain": chain.document(),
        "x": req.x,
        "route": seq.route,
        "is_qbar": seq.is_qbar,
        "values": [float(v) for v in seq.values],
        "summary": seq.summary(),
    }
    return models.QpolyResponse.model_validate(payload)
