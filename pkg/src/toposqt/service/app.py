"""FastAPI service wrapping the library: one endpoint per command.

Domain errors map to HTTP 422 with the error class in the payload; scenario
parse errors map to 400.  Reports are byte-stable for identical requests.
"""
from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from ..engine import run_command
from ..errors import ParseError, ToposQTError, ValidationError
from ..report import TOOL_NAME
from ..scenario import parse_scenario_dict
from .models import (
    BracketRequest,
    CompositeRequest,
    ContextsRequest,
    DaseiniseRequest,
    HealthModel,
    KSRequest,
    QValueRequest,
    ReportModel,
    ToolInfo,
    TruthRequest,
)

app = FastAPI(
    title="toposqt service",
    version=__version__,
    description="Contextual quantum theory computations over declared finite "
                "context families.",
)


def _run(command: str, scenario, args: dict) -> dict:
    try:
        cfg = parse_scenario_dict(scenario.to_document())
    except (ParseError, ValidationError) as e:
        raise HTTPException(status_code=400, detail={
            "error": type(e).__name__, "message": str(e),
            "field": getattr(e, "field", None)})
    try:
        return run_command(command, cfg, args)
    except ToposQTError as e:
        raise HTTPException(status_code=422, detail={
            "error": type(e).__name__, "message": str(e)})


@app.get("/health", response_model=HealthModel)
def health() -> HealthModel:
    return HealthModel(status="ok", tool=ToolInfo(name=TOOL_NAME, version=__version__))


@app.post("/contexts", response_model=ReportModel,
          response_model_exclude_none=True)
def contexts(req: ContextsRequest):
    return _run("contexts", req.scenario, {})


@app.post("/daseinise", response_model=ReportModel,
          response_model_exclude_none=True)
def daseinise(req: DaseiniseRequest):
    return _run("daseinise", req.scenario,
                {"op": req.op, "mode": req.mode, "stage": req.stage})


@app.post("/truth", response_model=ReportModel,
          response_model_exclude_none=True)
def truth(req: TruthRequest):
    return _run("truth", req.scenario,
                {"prop": req.prop, "state": req.state, "stage": req.stage})


@app.post("/bracket", response_model=ReportModel,
          response_model_exclude_none=True)
def bracket(req: BracketRequest):
    return _run("bracket", req.scenario, {"op": req.op, "state": req.state})


@app.post("/ks", response_model=ReportModel,
          response_model_exclude_none=True)
def ks(req: KSRequest):
    return _run("ks", req.scenario, {"witness": req.witness})


@app.post("/qvalue", response_model=ReportModel,
          response_model_exclude_none=True)
def qvalue(req: QValueRequest):
    return _run("qvalue", req.scenario,
                {"op": req.op, "state": req.state, "stage": req.stage})


@app.post("/composite", response_model=ReportModel,
          response_model_exclude_none=True)
def composite(req: CompositeRequest):
    return _run("composite", req.scenario, {"op": req.op, "op2": req.op2})
