"""Scenario files: ingestion and validation.

A scenario is a JSON document declaring the dimension, tolerance overrides,
named Hermitian operators and unitaries (matrices as nested [re, im] pairs),
named state vectors, the context generation policy, and optionally a
composite-system declaration and a witness reference.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from .context import ContextPoset, GenerationPolicy, build_poset
from .errors import ParseError, ValidationError
from .opalg import (
    DEFAULT_TOL,
    HermitianOperator,
    StateVector,
    TolerancePolicy,
    is_hermitian,
)
from .transform import UnitaryOperator


def _matrix_from_json(obj, label: str) -> np.ndarray:
    try:
        rows = []
        for row in obj:
            rows.append([complex(re, im) for re, im in row])
        m = np.array(rows, dtype=complex)
    except (TypeError, ValueError) as e:
        raise ValidationError("matrix %r is malformed: %s" % (label, e), field=label)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationError("matrix %r is not square" % label, field=label)
    return m


def _vector_from_json(obj, label: str) -> np.ndarray:
    try:
        v = np.array([complex(re, im) for re, im in obj], dtype=complex)
    except (TypeError, ValueError) as e:
        raise ValidationError("state %r is malformed: %s" % (label, e), field=label)
    return v


def matrix_to_json(m: np.ndarray) -> list:
    return [[[_sig12(x.real), _sig12(x.imag)] for x in row] for row in np.asarray(m, dtype=complex)]


def _sig12(x: float) -> float:
    return float("%.12g" % float(x))


@dataclass(frozen=True)
class CompositeDecl:
    """A declared composite: factor dimensions, factor seed names, and the
    names of entangled seed operators on the product space."""

    factors: Tuple[int, int]
    factor_seeds: Tuple[Tuple[str, ...], Tuple[str, ...]]
    entangled_seeds: Tuple[str, ...] = ()
    closure: str = "none"


@dataclass
class ScenarioConfig:
    """Validated scenario: everything a command needs, plus the fingerprint of
    the canonical source document."""

    dimension: int
    tol: TolerancePolicy
    operators: Dict[str, np.ndarray]
    unitaries: Dict[str, np.ndarray]
    states: Dict[str, np.ndarray]
    context_policy: Dict[str, object]
    composite: Optional[CompositeDecl]
    witness: Optional[str]
    fingerprint: str

    def hermitian(self, name: str) -> np.ndarray:
        if name not in self.operators:
            raise ValidationError("unknown operator %r" % name, field="operators")
        return self.operators[name]

    def unitary(self, name: str) -> UnitaryOperator:
        if name not in self.unitaries:
            raise ValidationError("unknown unitary %r" % name, field="unitaries")
        return UnitaryOperator(self.unitaries[name], self.tol)

    def state(self, name: str) -> StateVector:
        if name not in self.states:
            raise ValidationError("unknown state %r" % name, field="states")
        return StateVector(self.states[name], self.tol)

    def generation_policy(self) -> GenerationPolicy:
        seeds = []
        for name in self.context_policy["seeds"]:
            seeds.append((name, HermitianOperator(self.operators[name], self.tol)))
        return GenerationPolicy(
            seeds=tuple(seeds),
            closure=self.context_policy["closure"],
            include_trivial=self.context_policy["include_trivial"],
        )

    def build_poset(self) -> ContextPoset:
        return build_poset(self.generation_policy(), self.tol)


def parse_scenario_dict(doc: dict, tol_override: Optional[float] = None) -> ScenarioConfig:
    """Validate a scenario document; raises ValidationError with a field path."""
    if not isinstance(doc, dict):
        raise ValidationError("scenario root must be an object")
    if "dimension" not in doc:
        raise ValidationError("missing 'dimension'", field="dimension")
    dimension = int(doc["dimension"])
    if dimension < 1:
        raise ValidationError("dimension must be positive", field="dimension")

    tols = dict(doc.get("tolerances", {}))
    if tol_override is not None:
        tols["eps_matrix"] = tol_override
    tol = TolerancePolicy(
        eps_matrix=float(tols.get("eps_matrix", DEFAULT_TOL.eps_matrix)),
        eps_eig=float(tols.get("eps_eig", DEFAULT_TOL.eps_eig)),
        eps_prob=float(tols.get("eps_prob", DEFAULT_TOL.eps_prob)),
    )

    operators: Dict[str, np.ndarray] = {}
    for name, obj in dict(doc.get("operators", {})).items():
        m = _matrix_from_json(obj, "operators.%s" % name)
        if not is_hermitian(m, tol):
            raise ValidationError("operator %r is not Hermitian" % name,
                                  field="operators.%s" % name)
        operators[name] = m

    unitaries: Dict[str, np.ndarray] = {}
    for name, obj in dict(doc.get("unitaries", {})).items():
        if name in operators:
            raise ValidationError("duplicate name %r" % name, field="unitaries.%s" % name)
        m = _matrix_from_json(obj, "unitaries.%s" % name)
        UnitaryOperator(m, tol)  # validates
        unitaries[name] = m

    states: Dict[str, np.ndarray] = {}
    for name, obj in dict(doc.get("states", {})).items():
        v = _vector_from_json(obj, "states.%s" % name)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValidationError("state %r is zero" % name, field="states.%s" % name)
        states[name] = v / n

    ctx = dict(doc.get("contexts", {}))
    policy = {
        "seeds": list(ctx.get("seeds", sorted(operators))),
        "closure": ctx.get("closure", "none"),
        "include_trivial": bool(ctx.get("include_trivial", False)),
    }
    if policy["closure"] not in ("none", "coarsenings", "pairwise_meets"):
        raise ValidationError("bad closure %r" % policy["closure"], field="contexts.closure")
    for name in policy["seeds"]:
        if name not in operators:
            raise ValidationError("context seed %r is not a declared operator" % name,
                                  field="contexts.seeds")
        if operators[name].shape[0] != dimension:
            raise ValidationError("context seed %r has the wrong dimension" % name,
                                  field="contexts.seeds")

    composite = None
    if "composite" in doc:
        comp = dict(doc["composite"])
        factors = tuple(int(x) for x in comp.get("factors", ()))
        if len(factors) != 2:
            raise ValidationError("composite.factors must list two dimensions",
                                  field="composite.factors")
        fs = comp.get("factor_seeds", [[], []])
        if len(fs) != 2:
            raise ValidationError("composite.factor_seeds must have two entries",
                                  field="composite.factor_seeds")
        for k, names in enumerate(fs):
            for name in names:
                if name not in operators:
                    raise ValidationError("factor seed %r is not declared" % name,
                                          field="composite.factor_seeds")
                if operators[name].shape[0] != factors[k]:
                    raise ValidationError("factor seed %r has the wrong dimension" % name,
                                          field="composite.factor_seeds")
        for name in comp.get("entangled_seeds", ()):
            if name not in operators:
                raise ValidationError("entangled seed %r is not declared" % name,
                                      field="composite.entangled_seeds")
            if operators[name].shape[0] != factors[0] * factors[1]:
                raise ValidationError("entangled seed %r has the wrong dimension" % name,
                                      field="composite.entangled_seeds")
        composite = CompositeDecl(
            factors=factors,
            factor_seeds=(tuple(fs[0]), tuple(fs[1])),
            entangled_seeds=tuple(comp.get("entangled_seeds", ())),
            closure=comp.get("closure", "none"),
        )

    witness = doc.get("witness")

    cfg = ScenarioConfig(dimension, tol, operators, unitaries, states,
                         policy, composite, witness, "")
    # fingerprint the normalized re-emission so every ingestion path
    # (file, HTTP model) of the same scenario gets the same identity
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    cfg.fingerprint = hashlib.sha256(canonical.encode()).hexdigest()[:16]
    return cfg


def parse_scenario(path: str, tol_override: Optional[float] = None) -> ScenarioConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ParseError("cannot read scenario %s: %s" % (path, e))
    except json.JSONDecodeError as e:
        raise ParseError("scenario %s: line %d: %s" % (path, e.lineno, e.msg))
    return parse_scenario_dict(doc, tol_override)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Re-emit a config as a scenario document (round-trips within eps_matrix)."""
    doc = {
        "dimension": cfg.dimension,
        "tolerances": {"eps_matrix": cfg.tol.eps_matrix,
                       "eps_eig": cfg.tol.eps_eig,
                       "eps_prob": cfg.tol.eps_prob},
        "operators": {k: matrix_to_json(v) for k, v in sorted(cfg.operators.items())},
        "unitaries": {k: matrix_to_json(v) for k, v in sorted(cfg.unitaries.items())},
        "states": {k: [[_sig12(x.real), _sig12(x.imag)] for x in v]
                   for k, v in sorted(cfg.states.items())},
        "contexts": dict(cfg.context_policy),
    }
    if cfg.composite is not None:
        doc["composite"] = {
            "factors": list(cfg.composite.factors),
            "factor_seeds": [list(cfg.composite.factor_seeds[0]),
                             list(cfg.composite.factor_seeds[1])],
            "entangled_seeds": list(cfg.composite.entangled_seeds),
            "closure": cfg.composite.closure,
        }
    if cfg.witness is not None:
        doc["witness"] = cfg.witness
    return doc


def parse_proposition(text: str) -> Tuple[str, List[Tuple[float, float]]]:
    """Parse 'A in [a,b]' with optional 'u [c,d]' unions into the operator
    name and the closed intervals."""
    parts = text.split()
    if len(parts) < 3 or parts[1] != "in":
        raise ParseError("proposition must look like 'A in [a,b]': %r" % text)
    name = parts[0]
    rest = " ".join(parts[2:])
    chunks = [c.strip() for c in rest.split("u")]
    intervals: List[Tuple[float, float]] = []
    for chunk in chunks:
        if not (chunk.startswith("[") and chunk.endswith("]")):
            raise ParseError("interval %r must be closed: [a,b]" % chunk)
        try:
            lo_s, hi_s = chunk[1:-1].split(",")
            lo, hi = float(lo_s), float(hi_s)
        except ValueError:
            raise ParseError("interval %r is malformed" % chunk)
        if hi < lo:
            raise ParseError("interval %r is empty" % chunk)
        intervals.append((lo, hi))
    return name, intervals
