"""Deterministic report assembly and emission.

A report carries the scenario fingerprint, the finite context family the
computation was relative to, the command with its arguments, and the results.
JSON output uses canonical key order with reals at 12 significant digits, so
identical scenario and command yield byte-identical output.
"""
from __future__ import annotations

import json
from typing import Dict, List, Optional

import numpy as np

from .context import ContextPoset
from .scenario import ScenarioConfig, matrix_to_json

TOOL_NAME = "toposqt"


def _round_tree(obj):
    if isinstance(obj, float):
        return float("%.12g" % obj)
    if isinstance(obj, (np.floating,)):
        return float("%.12g" % float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round_tree(matrix_to_json(obj))
    if isinstance(obj, dict):
        return {str(k): _round_tree(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_tree(v) for v in obj]
    if isinstance(obj, (set, frozenset)):
        return sorted(_round_tree(v) for v in obj)
    return obj


def poset_listing(poset: ContextPoset) -> dict:
    contexts = []
    for cid in poset.ids():
        v = poset.contexts[cid]
        contexts.append({
            "id": cid,
            "n_blocks": v.n_blocks,
            "block_ranks": [b.rank for b in v.blocks],
            "blocks": [matrix_to_json(b.mat) for b in v.blocks],
        })
    return {
        "note": ("all presheaf and sieve statements are relative to this "
                 "declared finite context family"),
        "fingerprint": poset.fingerprint(),
        "contexts": contexts,
        "relation": [list(p) for p in poset.comparable_pairs()],
    }


def build_report(command: str, args: Dict[str, object], cfg: ScenarioConfig,
                 results: dict, poset: Optional[ContextPoset] = None,
                 extra_families: Optional[Dict[str, ContextPoset]] = None) -> dict:
    from . import __version__

    report = {
        "tool": {"name": TOOL_NAME, "version": __version__},
        "command": command,
        "args": {k: v for k, v in sorted(args.items()) if v is not None},
        "scenario_fingerprint": cfg.fingerprint,
        "note": ("every contextual statement is relative to a declared finite "
                 "context family, never to the full lattice of contexts"),
        "tolerances": {"eps_matrix": cfg.tol.eps_matrix,
                       "eps_eig": cfg.tol.eps_eig,
                       "eps_prob": cfg.tol.eps_prob},
        "results": results,
    }
    if poset is not None:
        report["context_family"] = poset_listing(poset)
    if extra_families:
        report["extra_families"] = {k: poset_listing(p) for k, p in extra_families.items()}
    return _round_tree(report)


def report_to_json(report: dict) -> str:
    return json.dumps(_round_tree(report), sort_keys=True, indent=2) + "\n"


def _render_value(value, indent: str, lines: List[str]):
    if isinstance(value, dict):
        for k in sorted(value):
            v = value[k]
            if isinstance(v, (dict, list)):
                lines.append("%s%s:" % (indent, k))
                _render_value(v, indent + "  ", lines)
            else:
                lines.append("%s%s: %s" % (indent, k, v))
    elif isinstance(value, list):
        scalar = all(not isinstance(v, (dict, list)) for v in value)
        if scalar:
            lines.append("%s%s" % (indent, ", ".join(str(v) for v in value)))
        else:
            for i, v in enumerate(value):
                lines.append("%s- [%d]" % (indent, i))
                _render_value(v, indent + "  ", lines)
    else:
        lines.append("%s%s" % (indent, value))


def report_to_text(report: dict) -> str:
    report = _round_tree(report)
    lines: List[str] = []
    lines.append("%s %s  command=%s" % (report["tool"]["name"],
                                        report["tool"]["version"],
                                        report["command"]))
    lines.append("scenario %s" % report["scenario_fingerprint"])
    tol = report["tolerances"]
    lines.append("tolerances eps_matrix=%g eps_eig=%g eps_prob=%g"
                 % (tol["eps_matrix"], tol["eps_eig"], tol["eps_prob"]))
    if report.get("args"):
        lines.append("args: " + ", ".join("%s=%s" % kv for kv in sorted(report["args"].items())))
    fam = report.get("context_family")
    if fam:
        lines.append("context family %s (%d contexts, %d strict pairs)"
                     % (fam["fingerprint"], len(fam["contexts"]), len(fam["relation"])))
        lines.append("  " + fam["note"])
        for c in fam["contexts"]:
            lines.append("  context %s  blocks=%d ranks=%s"
                         % (c["id"], c["n_blocks"], c["block_ranks"]))
        for child, parent in fam["relation"]:
            lines.append("  %s < %s" % (child, parent))
    lines.append("results:")
    _render_value(report["results"], "  ", lines)
    return "\n".join(lines) + "\n"
