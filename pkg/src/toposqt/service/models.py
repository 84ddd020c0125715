"""Pydantic request and response models for the HTTP service.

Matrices travel as nested [re, im] pairs; the scenario schema mirrors the
on-disk scenario files, so a file can be posted verbatim as the `scenario`
field of any request.
"""
from __future__ import annotations

from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

ComplexEntry = Tuple[float, float]
MatrixJSON = List[List[ComplexEntry]]
VectorJSON = List[ComplexEntry]


class TolerancesModel(BaseModel):
    eps_matrix: float = 1e-9
    eps_eig: float = 1e-7
    eps_prob: float = 1e-7


class ContextPolicyModel(BaseModel):
    seeds: Optional[List[str]] = None
    closure: str = "none"
    include_trivial: bool = False


class CompositeModel(BaseModel):
    factors: List[int]
    factor_seeds: List[List[str]]
    entangled_seeds: List[str] = Field(default_factory=list)
    closure: str = "none"


class ScenarioModel(BaseModel):
    dimension: int
    tolerances: Optional[TolerancesModel] = None
    operators: Dict[str, MatrixJSON] = Field(default_factory=dict)
    unitaries: Dict[str, MatrixJSON] = Field(default_factory=dict)
    states: Dict[str, VectorJSON] = Field(default_factory=dict)
    contexts: Optional[ContextPolicyModel] = None
    composite: Optional[CompositeModel] = None
    witness: Optional[str] = None

    def to_document(self) -> dict:
        doc = self.model_dump(exclude_none=True)
        if "contexts" in doc and doc["contexts"].get("seeds") is None:
            doc["contexts"].pop("seeds", None)
        return doc


class ContextsRequest(BaseModel):
    scenario: ScenarioModel


class DaseiniseRequest(BaseModel):
    scenario: ScenarioModel
    op: str
    mode: str = "outer"
    stage: Optional[str] = None


class TruthRequest(BaseModel):
    scenario: ScenarioModel
    prop: str
    state: str
    stage: Optional[str] = None


class BracketRequest(BaseModel):
    scenario: ScenarioModel
    op: str
    state: str


class KSRequest(BaseModel):
    scenario: ScenarioModel
    witness: Optional[str] = None


class QValueRequest(BaseModel):
    scenario: ScenarioModel
    op: str
    state: Optional[str] = None
    stage: Optional[str] = None


class CompositeRequest(BaseModel):
    scenario: ScenarioModel
    op: str
    op2: Optional[str] = None


class ToolInfo(BaseModel):
    name: str
    version: str


class ReportModel(BaseModel):
    tool: ToolInfo
    command: str
    args: Dict[str, object]
    scenario_fingerprint: str
    note: str
    tolerances: TolerancesModel
    results: Dict[str, object]
    context_family: Optional[Dict[str, object]] = None
    extra_families: Optional[Dict[str, object]] = None


class HealthModel(BaseModel):
    status: str
    tool: ToolInfo
