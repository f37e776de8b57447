"""Command line entry points.

Every command operates directly on a snapshot file; `serve` additionally
exposes the same store over HTTP.  Read commands print through the shared
JSON renderer, so piping `deptex score` and curling the leaderboard route
yield identical bytes.

Environment:
  DEPTEX_TOKEN        bearer token required by the HTTP API when set
  DEPTEX_VERIFIER_URL external reachability verifier endpoint
  DEPTEX_ALPHA        decay base for reachability scoring (default 0.85)
  DEPTEX_STORE        default snapshot path when --store is omitted
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional

from .errors import DeptexError, InvalidFieldError
from .policy import PolicyScript, SandboxBudget, dry_run
from .policy.engine import parse_policy_file
from .reachability import DEFAULT_ALPHA, EpdParams
from .risk import AggMode
from .store import ApplicationStore, parse_tier_overrides, render_json

DEFAULT_STORE = "deptex-store.json"


def _epd_params_from_env() -> EpdParams:
    raw = os.environ.get("DEPTEX_ALPHA", "")
    if not raw:
        return EpdParams()
    try:
        alpha = float(raw)
    except ValueError:
        raise InvalidFieldError(f"DEPTEX_ALPHA must be a number, got {raw!r}") from None
    params = EpdParams(alpha=alpha)
    params.validate()
    return params


def open_store(path: str) -> ApplicationStore:
    return ApplicationStore.open(
        Path(path),
        epd_params=_epd_params_from_env(),
        verifier_url=os.environ.get("DEPTEX_VERIFIER_URL") or None,
        background_dispatch=False,  # a CLI run should finish its deliveries
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deptex",
        description="dependency risk governance: ingest, score, gate, serve",
    )
    parser.add_argument(
        "--store",
        default=os.environ.get("DEPTEX_STORE", DEFAULT_STORE),
        help=f"snapshot file (default {DEFAULT_STORE})",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the HTTP API")
    serve.add_argument("--listen", default="127.0.0.1:8000", help="host:port to bind")
    serve.add_argument("--ui", default=None, help="directory of built dashboard assets to serve")

    ingest = sub.add_parser("ingest", help="load documents into the store")
    ingest_sub = ingest.add_subparsers(dest="ingest_kind", required=True)
    sbom = ingest_sub.add_parser("sbom", help="apply a dependency inventory to an asset")
    sbom.add_argument("--asset", required=True, help="asset node id")
    sbom.add_argument("file", help="inventory JSON file")
    vulns = ingest_sub.add_parser("vulns", help="ingest a vulnerability feed")
    vulns.add_argument("file", help="feed JSON file")
    slc = ingest_sub.add_parser("slice", help="score a reachability slice")
    slc.add_argument("file", help="slice JSON file")

    score = sub.add_parser("score", help="print the signal leaderboard for an org")
    score.add_argument("--org", required=True, help="org node id")
    score.add_argument("--agg", default="sum", choices=[m.value for m in AggMode])
    score.add_argument("--format", default="json", choices=["json", "csv"])
    score.add_argument(
        "--override-tier",
        action="append",
        default=[],
        metavar="ASSET:TIER",
        help="preview with an asset pinned to a tier (repeatable; tier 'none' clears)",
    )

    policy = sub.add_parser("policy", help="work with policy scripts")
    policy_sub = policy.add_subparsers(dest="policy_cmd", required=True)
    ptest = policy_sub.add_parser("test", help="dry-run a script file against a binding fixture")
    ptest.add_argument("--context", default=None, help="override the script's #context header")
    ptest.add_argument("--binding", required=True, help="binding fixture JSON file")
    ptest.add_argument("file", help="policy script (.dpx)")

    gate = sub.add_parser("gate", help="evaluate pr policies against two inventories")
    gate.add_argument("--asset", required=True, help="asset node id")
    gate.add_argument("--base", required=True, help="inventory before the change")
    gate.add_argument("--head", required=True, help="inventory after the change")

    return parser


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.api import create_app

    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        raise InvalidFieldError(f"--listen must look like host:port, got {args.listen!r}")
    store = ApplicationStore.open(
        Path(args.store),
        epd_params=_epd_params_from_env(),
        verifier_url=os.environ.get("DEPTEX_VERIFIER_URL") or None,
    )
    app = create_app(store, token=os.environ.get("DEPTEX_TOKEN") or None, ui_dir=args.ui)
    uvicorn.run(app, host=host, port=int(port_text), log_level="info")
    return 0


def _cmd_ingest(args: argparse.Namespace) -> int:
    store = open_store(args.store)
    data = Path(args.file).read_bytes()
    if args.ingest_kind == "sbom":
        result = store.ingest_sbom(args.asset, data, actor="cli")
    elif args.ingest_kind == "vulns":
        result = store.ingest_feed(data, actor="cli")
    else:
        result = store.ingest_slice(data, actor="cli")
    sys.stdout.write(render_json(result))
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    store = open_store(args.store)
    mode = AggMode(args.agg)
    overrides = parse_tier_overrides(args.override_tier) or None
    if args.format == "csv":
        sys.stdout.write(store.leaderboard_csv_payload(args.org, mode, overrides))
    else:
        sys.stdout.write(render_json(store.leaderboard_payload(args.org, mode, overrides)))
    return 0


def _cmd_policy_test(args: argparse.Namespace) -> int:
    source = Path(args.file).read_text(encoding="utf-8")
    context, _ = parse_policy_file(source)
    if args.context:
        context = args.context
    binding = json.loads(Path(args.binding).read_text(encoding="utf-8"))
    if not isinstance(binding, dict):
        raise InvalidFieldError("binding fixture must be a JSON object")
    script = PolicyScript.create(Path(args.file).stem, context, source)
    result = dry_run(script, binding, SandboxBudget())
    sys.stdout.write(render_json(result.to_dict()))
    return 0


def _cmd_gate(args: argparse.Namespace) -> int:
    store = open_store(args.store)
    result = store.gate_pr(
        args.asset,
        Path(args.base).read_bytes(),
        Path(args.head).read_bytes(),
        actor="cli",
    )
    sys.stdout.write(render_json(result))
    return 0 if result["decision"] == "allow" else 1


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "serve":
            return _cmd_serve(args)
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "policy":
            return _cmd_policy_test(args)
        if args.command == "gate":
            return _cmd_gate(args)
    except DeptexError as exc:
        gate_result = getattr(exc, "gate_result", None)
        if gate_result is not None:
            sys.stdout.write(render_json(gate_result))
        sys.stderr.write(render_json({"error": {"code": exc.code, "message": exc.message}}))
        return 1 if gate_result is not None else 2
    except OSError as exc:
        sys.stderr.write(render_json({"error": {"code": "io_error", "message": str(exc)}}))
        return 2
    parser.error("unknown command")
    return 2


if __name__ == "__main__":
    sys.exit(main())
