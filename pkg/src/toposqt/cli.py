"""tqt: thin command-line client for the toposqt service.

By default the command runs in-process through the same handlers the HTTP
service exposes; with --server URL the request is posted to a running
service instead.  Exit codes: 0 success, 1 usage error, 2 domain error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from .engine import run_command
from .errors import ParseError, ToposQTError, ValidationError
from .report import report_to_json, report_to_text
from .scenario import parse_scenario


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write("error: %s\n" % message)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tqt", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--format", choices=("json", "text"), default="json")
        p.add_argument("--out", default=None, help="write the report to this path")
        p.add_argument("--tolerance", type=float, default=None,
                       help="override eps_matrix")
        p.add_argument("--server", default=None,
                       help="POST to a running service at this base URL")

    p = sub.add_parser("contexts", help="build and list the context family")
    common(p)

    p = sub.add_parser("daseinise", help="daseinise a projection or operator")
    common(p)
    p.add_argument("--op", required=True)
    p.add_argument("--mode", choices=("outer", "inner"), default="outer")
    p.add_argument("--stage", default=None)

    p = sub.add_parser("truth", help="sieve-valued truth value of a proposition")
    common(p)
    p.add_argument("--prop", required=True, help="proposition like 'A in [1,2]'")
    p.add_argument("--state", required=True)
    p.add_argument("--stage", default=None)

    p = sub.add_parser("bracket", help="antonymous/mean/observable bracket")
    common(p)
    p.add_argument("--op", required=True)
    p.add_argument("--state", required=True)

    p = sub.add_parser("ks", help="global-section search over a witness poset")
    common(p)
    p.add_argument("--witness", default=None,
                   help="witness name or file (default: scenario field)")

    p = sub.add_parser("qvalue", help="quantity-value arrows and dispersion")
    common(p)
    p.add_argument("--op", required=True)
    p.add_argument("--state", default=None)
    p.add_argument("--stage", default=None)

    p = sub.add_parser("composite", help="composite-system translations")
    common(p)
    p.add_argument("--op", required=True)
    p.add_argument("--op2", default=None)

    return parser


_ARG_NAMES = {
    "contexts": (),
    "daseinise": ("op", "mode", "stage"),
    "truth": ("prop", "state", "stage"),
    "bracket": ("op", "state"),
    "ks": ("witness",),
    "qvalue": ("op", "state", "stage"),
    "composite": ("op", "op2"),
}


def _remote(server: str, command: str, scenario_doc: dict, args: dict) -> dict:
    import httpx

    body = {"scenario": scenario_doc}
    body.update({k: v for k, v in args.items() if v is not None})
    resp = httpx.post(server.rstrip("/") + "/" + command, json=body, timeout=300.0)
    if resp.status_code >= 400:
        raise ToposQTError("server error %d: %s" % (resp.status_code, resp.text))
    return resp.json()


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.command is None:
        parser.print_usage(sys.stderr)
        return 1

    tol_override = ns.tolerance
    if tol_override is None and os.environ.get("TQT_TOLERANCE"):
        try:
            tol_override = float(os.environ["TQT_TOLERANCE"])
        except ValueError:
            sys.stderr.write("error: TQT_TOLERANCE is not a number\n")
            return 1

    try:
        cfg = parse_scenario(ns.scenario, tol_override)
        args = {name: getattr(ns, name) for name in _ARG_NAMES[ns.command]}
        if ns.server:
            with open(ns.scenario, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
            report = _remote(ns.server, ns.command, doc, args)
        else:
            report = run_command(ns.command, cfg, args)
    except (ParseError, ValidationError) as e:
        sys.stderr.write("error: %s\n" % e)
        return 2
    except ToposQTError as e:
        sys.stderr.write("error: %s\n" % e)
        return 2
    except OSError as e:
        sys.stderr.write("io error: %s\n" % e)
        return 2

    rendered = report_to_json(report) if ns.format == "json" else report_to_text(report)
    if ns.out:
        try:
            with open(ns.out, "w", encoding="utf-8") as fh:
                fh.write(rendered)
        except OSError as e:
            sys.stderr.write("io error: %s\n" % e)
            return 2
    else:
        sys.stdout.write(rendered)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
