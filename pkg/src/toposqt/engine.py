"""Command handlers shared by the HTTP service and the CLI.

Each handler takes a validated ScenarioConfig plus command arguments and
returns a deterministic report dictionary.
"""
from __future__ import annotations

from typing import Dict, List, Optional

import numpy as np

from .context import ContextPoset
from .dasein import (
    build_spectral_presheaf,
    inner_das_proj,
    inner_das_sa,
    outer_das_proj,
    outer_das_sa,
)
from .errors import UnknownCommand, ValidationError
from .ks import (
    dual_presheaf,
    ks_poset_from_witness,
    load_witness,
    parity_oracle,
    section_search,
)
from .opalg import Projection, proposition_projector
from .presheaf import global_elements
from .qvalue import breve_pair, intrinsic_dispersion
from .report import build_report
from .scenario import ScenarioConfig, matrix_to_json, parse_proposition
from .transform import (
    direct_sum_translate,
    tensor_floor,
    translation_gap_witness,
)
from .truth import expectation_bracket, tolerance_flags, truth_value

COMMANDS = ("contexts", "daseinise", "truth", "bracket", "ks", "qvalue", "composite")


def run_command(command: str, cfg: ScenarioConfig, args: Dict[str, object]) -> dict:
    if command not in COMMANDS:
        raise UnknownCommand("unknown command %r; expected one of %s"
                             % (command, ", ".join(COMMANDS)))
    handler = globals()["_cmd_" + command]
    return handler(cfg, **args)


def _is_projection(m: np.ndarray, tol) -> bool:
    try:
        Projection(m, tol)
        return True
    except Exception:
        return False


def _stages(poset: ContextPoset, stage: Optional[str]) -> List[str]:
    if stage is None:
        return poset.ids()
    if stage not in poset.contexts:
        from .errors import ContextNotInPoset

        raise ContextNotInPoset("stage %r is not in the generated family" % stage)
    return [stage]


def _cmd_contexts(cfg: ScenarioConfig) -> dict:
    poset = cfg.build_poset()
    results = {
        "n_contexts": len(poset),
        "n_strict_pairs": len(poset.comparable_pairs()),
        "closure": cfg.context_policy["closure"],
        "seeds": list(cfg.context_policy["seeds"]),
    }
    return build_report("contexts", {}, cfg, results, poset)


def _cmd_daseinise(cfg: ScenarioConfig, op: str, mode: str = "outer",
                   stage: Optional[str] = None) -> dict:
    if mode not in ("outer", "inner"):
        raise ValidationError("mode must be outer or inner")
    m = cfg.hermitian(op)
    poset = cfg.build_poset()
    proj = _is_projection(m, cfg.tol)
    per_context = {}
    for cid in _stages(poset, stage):
        v = poset.contexts[cid]
        if proj:
            das = (outer_das_proj if mode == "outer" else inner_das_proj)(m, v, cfg.tol)
            per_context[cid] = matrix_to_json(das.mat)
        else:
            das = (outer_das_sa if mode == "outer" else inner_das_sa)(m, v, cfg.tol)
            per_context[cid] = matrix_to_json(das.mat)
    results = {"operator": op, "mode": mode, "is_projection": proj,
               "per_context": per_context}
    return build_report("daseinise", {"op": op, "mode": mode, "stage": stage},
                        cfg, results, poset)


def _cmd_truth(cfg: ScenarioConfig, prop: str, state: str,
               stage: Optional[str] = None) -> dict:
    name, intervals = parse_proposition(prop)
    projector = proposition_projector(cfg.hermitian(name), intervals, cfg.tol)
    psi = cfg.state(state)
    poset = cfg.build_poset()
    sieves = {}
    flags = {}
    for cid in _stages(poset, stage):
        sieve = truth_value(projector, psi, cid, poset, cfg.tol)
        sieves[cid] = sieve.sorted_members()
        fl = tolerance_flags(projector, psi, cid, poset, cfg.tol)
        if fl:
            flags[cid] = fl
    results = {
        "proposition": prop,
        "projector": matrix_to_json(projector.mat),
        "state": state,
        "sieves": sieves,
        "near_one_flags": flags,
    }
    return build_report("truth", {"prop": prop, "state": state, "stage": stage},
                        cfg, results, poset)


def _cmd_bracket(cfg: ScenarioConfig, op: str, state: str) -> dict:
    g, mean, f = expectation_bracket(cfg.hermitian(op), cfg.state(state), cfg.tol)
    results = {"operator": op, "state": state,
               "antonymous": g, "mean": mean, "observable": f}
    return build_report("bracket", {"op": op, "state": state}, cfg, results)


def _cmd_ks(cfg: ScenarioConfig, witness: Optional[str] = None) -> dict:
    source = witness or cfg.witness
    if source is None:
        raise ValidationError("ks needs a witness (argument or scenario field)")
    w = load_witness(source)
    poset = ks_poset_from_witness(w, cfg.tol)
    cert = section_search(poset)
    parity = parity_oracle(w)
    dual = dual_presheaf(poset)
    dual_sections = len(global_elements(dual))
    results = {
        "witness": w.name,
        "witness_note": "witness vectors are standard literature inputs",
        "dimension": w.dim,
        "n_rays": len(w.rays),
        "n_bases": len(w.bases),
        "outcome": cert.outcome,
        "n_sections": cert.n_sections,
        "first_section": cert.section,
        "search_nodes": cert.nodes,
        "search_prunes": cert.prunes,
        "poset_fingerprint": cert.poset_fingerprint,
        "parity_oracle_unsat": parity,
        "dual_presheaf_sections": dual_sections,
        "formulations_agree": (dual_sections == cert.n_sections),
    }
    return build_report("ks", {"witness": source}, cfg, results, poset)


def _cmd_qvalue(cfg: ScenarioConfig, op: str, state: Optional[str] = None,
                stage: Optional[str] = None) -> dict:
    m = cfg.hermitian(op)
    poset = cfg.build_poset()
    sigma = build_spectral_presheaf(poset)
    arrow = breve_pair(m, poset, cfg.tol, sigma, name=op)
    disp = intrinsic_dispersion(m, poset, cfg.tol, sigma)
    table = {}
    for cid in _stages(poset, stage):
        per_block = {}
        for block in sigma.fibre[cid]:
            pair = arrow.at(cid, block)
            d = disp[(cid, block)].as_difference()
            per_block[str(block)] = {
                "inner": dict(pair.mu.values),
                "outer": dict(pair.nu.values),
                "dispersion": d,
            }
        table[cid] = per_block
    results = {"operator": op, "per_stage": table}
    if state is not None:
        from .qvalue import value_in_state
        from .truth import pseudo_state

        w = pseudo_state(cfg.state(state), poset, cfg.tol, sigma)
        image = value_in_state(m, w, poset, cfg.tol, sigma)
        results["state"] = state
        results["state_image"] = {
            cid: [{"inner": dict(p.mu.values), "outer": dict(p.nu.values)}
                  for p in pairs]
            for cid, pairs in image.items()
        }
    return build_report("qvalue", {"op": op, "state": state, "stage": stage},
                        cfg, results, poset)


def _build_factor_poset(cfg: ScenarioConfig, k: int) -> ContextPoset:
    from .context import GenerationPolicy, build_poset
    from .opalg import HermitianOperator

    names = cfg.composite.factor_seeds[k]
    if not names:
        raise ValidationError("composite.factor_seeds[%d] is empty" % k)
    seeds = tuple((n, HermitianOperator(cfg.operators[n], cfg.tol)) for n in names)
    return build_poset(GenerationPolicy(seeds=seeds, closure=cfg.composite.closure),
                       cfg.tol)


def build_composite_scenario(cfg: ScenarioConfig):
    """The declared tensor composite: factor posets, product and embedded
    contexts, plus the entangled seed contexts."""
    from .context import context_from_commuting
    from .transform import tensor_composite_scenario

    if cfg.composite is None:
        raise ValidationError("scenario declares no composite")
    p1 = _build_factor_poset(cfg, 0)
    p2 = _build_factor_poset(cfg, 1)
    entangled = tuple(context_from_commuting([cfg.operators[name]], cfg.tol)
                      for name in cfg.composite.entangled_seeds)
    return tensor_composite_scenario(p1, p2, entangled, cfg.tol)


def _cmd_composite(cfg: ScenarioConfig, op: str, op2: Optional[str] = None) -> dict:
    if cfg.composite is None:
        raise ValidationError("scenario declares no composite")
    d1, d2 = cfg.composite.factors
    a1 = cfg.hermitian(op)
    if a1.shape[0] != d1:
        raise ValidationError("operator %r does not live on the first factor" % op)
    scenario = build_composite_scenario(cfg)
    p1, p2 = scenario.factor_posets
    composite = scenario.composite_poset

    results: Dict[str, object] = {"factors": [d1, d2], "operator": op}

    if op2 is not None:
        a2 = cfg.hermitian(op2)
        if a2.shape[0] != d2:
            raise ValidationError("operator %r does not live on the second factor" % op2)
        checks = []
        v2_first = p2.contexts[p2.ids()[0]]
        for cid in p1.ids():
            chk = direct_sum_translate(a1, a2, p1.contexts[cid], cfg.tol, v2=v2_first)
            checks.append({
                "factor_context": cid,
                "m_context": chk.m_context_id,
                "translated": matrix_to_json(chk.translated),
                "identity_ok": chk.ok,
                "blockwise_ok": chk.blockwise_ok,
                "arrow_ok": chk.arrow_ok,
            })
        results["direct_sum"] = {"operator2": op2, "checks": checks}

    floors = {}
    for cid in composite.ids():
        fl = tensor_floor(composite.contexts[cid], d1, d2, cfg.tol)
        floors[cid] = fl.id if fl is not None else "trivial"
    witness, records = translation_gap_witness(a1, composite, d1, d2, cfg.tol)
    results["tensor"] = {
        "floors": floors,
        "gap_records": [
            {"context": r.context_id, "floor": r.floor_id or "trivial",
             "gap": r.gap, "agrees": r.gap <= cfg.tol.eps_eig}
            for r in records
        ],
        "witness": None if witness is None else {
            "context": witness.context_id,
            "floor": witness.floor_id or "trivial",
            "direct": matrix_to_json(witness.direct),
            "translated": matrix_to_json(witness.translated),
            "gap": witness.gap,
        },
    }
    return build_report("composite", {"op": op, "op2": op2}, cfg, results,
                        composite, extra_families={"factor1": p1, "factor2": p2})
