"""Command-line client for the analysis service.

The CLI is a thin HTTP client: by default it mounts the FastAPI app over an
in-process ASGI transport (no sockets, no server to start); with --server it
talks to a remote instance instead.  Every subcommand reads a chain-spec
JSON document, posts a request, and prints the response JSON to stdout.

Exit codes: 0 when every required verdict is decided, 2 when one is
undecided or inconclusive, 1 on input or usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

import httpx


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # input errors exit 1, not argparse's default 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="bdperiod", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("chain", help="path to a chain-spec JSON document")
        p.add_argument("--server", default=None, help="remote service URL (default: in-process)")
        p.add_argument("--pretty", action="store_true", help="indent the JSON output")

    analyze = sub.add_parser("analyze", help="decide period and classification")
    add_common(analyze)
    analyze.add_argument("--horizon", type=int, default=None)
    analyze.add_argument("--div-threshold", type=float, default=None)
    analyze.add_argument("--no-analytic", action="store_true",
                         help="disable analytic tail rules; numeric thresholds only")
    analyze.add_argument("--seeds", type=int, default=0,
                         help="attach simulation evidence from a fleet of this size")
    analyze.add_argument("--seed", type=int, default=1, help="master seed for the fleet")
    analyze.add_argument("--steps", type=int, default=1_000_000)
    analyze.add_argument("--burn-in", type=int, default=None)
    analyze.add_argument("--m", type=int, action="append", default=None,
                         help="residue modulus (repeatable)")
    analyze.add_argument("--x0", type=int, default=0)

    simulate = sub.add_parser("simulate", help="run seeded trajectories and detectors")
    add_common(simulate)
    simulate.add_argument("--seed", type=int, default=1, help="master seed")
    simulate.add_argument("--seeds", type=int, default=1, help="fleet size")
    simulate.add_argument("--steps", type=int, default=1_000_000)
    simulate.add_argument("--burn-in", type=int, default=None)
    simulate.add_argument("--m", type=int, action="append", default=None,
                          help="residue modulus (repeatable)")
    simulate.add_argument("--x0", type=int, default=0)

    qpoly = sub.add_parser("qpoly", help="emit polynomial values as JSON lines")
    add_common(qpoly)
    qpoly.add_argument("--n", type=int, default=200)
    qpoly.add_argument("--route", choices=("direct", "sum1", "sum2"), default="direct")
    qpoly.add_argument("--x", type=float, default=-1.0)
    qpoly.add_argument("--no-analytic", action="store_true")

    validate = sub.add_parser("validate", help="validate a chain-spec document")
    add_common(validate)

    serve = sub.add_parser("serve", help="run the service under uvicorn")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def _load_chain(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _InputError(f"{path} is not valid JSON: {exc}") from exc


class _InputError(Exception):
    pass


def _post(server: Optional[str], path: str, payload: dict) -> tuple[int, dict]:
    if server:
        with httpx.Client(base_url=server, timeout=600.0) as client:
            resp = client.post(path, json=payload)
        return resp.status_code, resp.json()

    import asyncio

    from .service.app import app

    async def call():
        transport = httpx.ASGITransport(app=app)
        async with httpx.AsyncClient(
            transport=transport, base_url="http://bdperiod.internal", timeout=600.0
        ) as client:
            return await client.post(path, json=payload)

    resp = asyncio.run(call())
    return resp.status_code, resp.json()


def _emit(doc: dict, pretty: bool) -> None:
    if pretty:
        out = json.dumps(doc, indent=2)
    else:
        out = json.dumps(doc, separators=(",", ":"))
    print(out)


def _policy_options(args) -> dict:
    policy: dict = {}
    if getattr(args, "horizon", None) is not None:
        policy["horizon"] = args.horizon
    if getattr(args, "div_threshold", None) is not None:
        policy["div_threshold"] = args.div_threshold
    if getattr(args, "no_analytic", False):
        policy["use_analytic"] = False
    return policy


def _sim_options(args) -> dict:
    sim = {
        "seed": args.seed,
        "seeds": args.seeds,
        "steps": args.steps,
        "x0": args.x0,
    }
    if args.burn_in is not None:
        sim["burn_in"] = args.burn_in
    if args.m:
        sim["m"] = args.m
    return sim


def _cmd_analyze(args) -> int:
    payload = {"chain": _load_chain(args.chain), "policy": _policy_options(args)}
    if args.seeds > 0:
        payload["simulate"] = _sim_options(args)
    status, doc = _post(args.server, "/analyze", payload)
    _emit(doc, args.pretty)
    if status != 200:
        return 1
    return 0 if doc["period_report"]["period"] != "undecided" else 2


def _cmd_simulate(args) -> int:
    payload = {"chain": _load_chain(args.chain), "sim": _sim_options(args)}
    status, doc = _post(args.server, "/simulate", payload)
    _emit(doc, args.pretty)
    if status != 200:
        return 1
    return 0 if doc["majority_estimate"] != "inconclusive" else 2


def _cmd_qpoly(args) -> int:
    payload = {
        "chain": _load_chain(args.chain),
        "n": args.n,
        "route": args.route,
        "x": args.x,
        "policy": _policy_options(args),
    }
    status, doc = _post(args.server, "/qpoly", payload)
    if status != 200:
        _emit(doc, args.pretty)
        return 1
    key = "qbar" if doc["is_qbar"] else "q"
    for i, value in enumerate(doc["values"]):
        print(json.dumps({"n": i, key: value}, separators=(",", ":")))
    print(json.dumps({"summary": doc["summary"]}, separators=(",", ":")))
    growth = doc["summary"]["growth"]
    if doc["is_qbar"] and growth is not None and growth["decision"] == "undecided":
        return 2
    return 0


def _cmd_validate(args) -> int:
    payload = {"chain": _load_chain(args.chain)}
    status, doc = _post(args.server, "/validate", payload)
    _emit(doc, args.pretty)
    return 0 if status == 200 else 1


def _cmd_serve(args) -> int:
    import uvicorn

    uvicorn.run("bdperiod.service.app:app", host=args.host, port=args.port)
    return 0


def main(argv: Optional[list] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "analyze": _cmd_analyze,
        "simulate": _cmd_simulate,
        "qpoly": _cmd_qpoly,
        "validate": _cmd_validate,
        "serve": _cmd_serve,
    }
    try:
        return handlers[args.command](args)
    except _InputError as exc:
        print(json.dumps({"error": {"type": "InputError", "message": str(exc)}},
                         separators=(",", ":")))
        return 1
    except httpx.HTTPError as exc:
        print(f"bdperiod: transport error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
