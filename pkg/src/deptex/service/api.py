"""REST surface over an ApplicationStore.

Thin by design: every handler parses the request, calls one store method,
and renders the result.  Read endpoints render through the same JSON
renderer the command line uses, so the two surfaces emit identical bytes
for identical state.
"""

from __future__ import annotations

import json
import logging
from typing import Any, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from ..errors import DeptexError, InvalidFieldError, MalformedDocumentError
from ..graph import NodeKind
from ..policy import PolicyScript, SandboxBudget
from ..risk import AggMode
from ..store import ApplicationStore, parse_tier_overrides, render_json

logger = logging.getLogger(__name__)

API_ACTOR = "api"


def _error_body(exc: DeptexError) -> dict:
    body: dict[str, Any] = {"code": exc.code, "message": exc.message}
    for extra in ("line", "col", "kind", "path", "url", "target", "channel_id", "reason"):
        value = getattr(exc, extra, None)
        if value is not None:
            body[extra] = value
    partial = getattr(exc, "partial_trace", None)
    if partial is not None:
        body["partial_trace"] = partial
    return body


def _budget_from(raw: Any) -> Optional[SandboxBudget]:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise InvalidFieldError("budget must be an object")
    budget = SandboxBudget(
        max_steps=raw.get("max_steps", 100_000),
        max_http_calls=raw.get("max_http_calls", 2),
        timeout_ms=raw.get("timeout_ms", 5_000),
        http_allowlist=list(raw.get("http_allowlist", [])),
    )
    budget.validate()
    return budget


async def _read_json(request: Request) -> Any:
    raw = await request.body()
    try:
        return json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocumentError(f"request body is not valid JSON: {exc}") from exc


def _require_dict(payload: Any) -> dict:
    if not isinstance(payload, dict):
        raise MalformedDocumentError("request body must be a JSON object")
    return payload


def _sbom_bytes(value: Any) -> bytes:
    # gate bodies may inline the documents as objects or as raw strings
    if isinstance(value, (dict, list)):
        return json.dumps(value).encode("utf-8")
    if isinstance(value, str):
        return value.encode("utf-8")
    raise MalformedDocumentError("sbom must be a JSON object or string")


def json_response(payload: Any, status_code: int = 200) -> Response:
    return Response(
        content=render_json(payload),
        status_code=status_code,
        media_type="application/json",
    )


def create_app(
    store: ApplicationStore,
    token: Optional[str] = None,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="deptex", docs_url=None, redoc_url=None)
    app.state.store = store

    @app.exception_handler(DeptexError)
    async def handle_domain_error(request: Request, exc: DeptexError) -> JSONResponse:
        body: dict[str, Any] = {"error": _error_body(exc)}
        gate_result = getattr(exc, "gate_result", None)
        if gate_result is not None:
            body.update(gate_result)  # fail-closed verdict rides along with the error
        return JSONResponse(status_code=exc.http_status, content=body)

    @app.middleware("http")
    async def check_auth(request: Request, call_next):
        if token and request.url.path.startswith("/api/"):
            header = request.headers.get("authorization", "")
            if header != f"Bearer {token}":
                return JSONResponse(
                    status_code=401,
                    content={"error": {"code": "unauthorized", "message": "missing or wrong bearer token"}},
                )
        return await call_next(request)

    @app.get("/api/v1/health")
    async def health() -> dict:
        return {"status": "ok", "nodes": sum(1 for _ in store.graph.nodes())}

    # --- creation ---

    creation_kinds = {
        "orgs": NodeKind.ORG,
        "units": NodeKind.UNIT,
        "assets": NodeKind.ASSET,
        "actors": NodeKind.ACTOR,
    }

    def register_creation(path_name: str, kind: NodeKind) -> None:
        @app.post(f"/api/v1/{path_name}", status_code=201, name=f"create_{path_name}")
        async def create(request: Request) -> dict:
            body = _require_dict(await _read_json(request))
            return store.create_node(kind, body, API_ACTOR)

        @app.get(f"/api/v1/{path_name}", name=f"list_{path_name}")
        async def list_nodes() -> Response:
            return json_response(store.list_nodes(kind))

    for path_name, kind in creation_kinds.items():
        register_creation(path_name, kind)

    @app.get("/api/v1/signals")
    async def list_signals() -> Response:
        return json_response(store.list_nodes(NodeKind.SIGNAL))

    @app.post("/api/v1/edges", status_code=201)
    async def create_edge(request: Request) -> dict:
        body = _require_dict(await _read_json(request))
        return store.create_edge(
            body.get("src", ""), body.get("dst", ""), body.get("kind", ""),
            body.get("attrs"), API_ACTOR,
        )

    @app.post("/api/v1/tiers", status_code=201)
    async def create_tier(request: Request) -> dict:
        return store.create_tier(_require_dict(await _read_json(request)), API_ACTOR)

    @app.put("/api/v1/tiers/{tier_id}")
    async def update_tier(tier_id: str, request: Request) -> dict:
        return store.update_tier(tier_id, _require_dict(await _read_json(request)), API_ACTOR)

    @app.get("/api/v1/tiers")
    async def list_tiers() -> Response:
        return json_response(
            [
                {"tier_id": t.tier_id, "name": t.name, "importance": t.importance}
                for t in store.graph.tiers()
            ]
        )

    @app.post("/api/v1/statuses", status_code=201)
    async def create_status(request: Request) -> dict:
        return store.create_status(_require_dict(await _read_json(request)), API_ACTOR)

    @app.get("/api/v1/statuses")
    async def list_statuses() -> Response:
        return json_response(
            [
                {"status_id": s.status_id, "name": s.name, "color_hint": s.color_hint}
                for s in store.graph.statuses()
            ]
        )

    @app.post("/api/v1/channels", status_code=201)
    async def create_channel(request: Request) -> dict:
        return store.create_channel(_require_dict(await _read_json(request)), API_ACTOR)

    @app.get("/api/v1/channels")
    async def list_channels() -> Response:
        rows = []
        for channel_id in sorted(store.channels):
            row = store.channels[channel_id].to_dict()
            row["secret"] = "***" if row["secret"] else ""
            rows.append(row)
        return json_response(rows)

    @app.post("/api/v1/policies", status_code=201)
    async def create_policy(request: Request) -> dict:
        return store.create_policy(_require_dict(await _read_json(request)), API_ACTOR)

    @app.get("/api/v1/policies")
    async def list_policies() -> Response:
        return json_response(
            [store.policies[k].to_dict() for k in sorted(store.policies)]
        )

    # --- ingestion ---

    @app.post("/api/v1/assets/{asset_id}/sbom")
    async def ingest_sbom(asset_id: str, request: Request) -> dict:
        return store.ingest_sbom(asset_id, await request.body(), API_ACTOR)

    @app.put("/api/v1/assets/{asset_id}/tier")
    async def set_tier(asset_id: str, request: Request) -> dict:
        body = _require_dict(await _read_json(request))
        if "tier" not in body:
            raise InvalidFieldError("body must carry a tier field (null clears it)")
        return store.set_tier(asset_id, body["tier"], API_ACTOR)

    @app.post("/api/v1/signals/feed")
    async def ingest_feed(request: Request) -> dict:
        return store.ingest_feed(await request.body(), API_ACTOR)

    @app.post("/api/v1/slices")
    async def ingest_slice(request: Request) -> dict:
        return store.ingest_slice(await request.body(), API_ACTOR)

    # --- queries ---

    @app.get("/api/v1/signals/{signal_ref}/blast-radius")
    async def blast_radius(signal_ref: str) -> Response:
        return json_response(store.blast_radius(signal_ref))

    @app.get("/api/v1/orgs/{org_id}/leaderboard")
    async def org_leaderboard(org_id: str, request: Request) -> Response:
        params = request.query_params
        try:
            mode = AggMode(params.get("agg", "sum"))
        except ValueError:
            raise InvalidFieldError(
                f"agg must be one of sum, max, mean; got {params.get('agg')!r}"
            ) from None
        overrides = parse_tier_overrides(params.getlist("override_tier")) or None
        if params.get("format", "json") == "csv":
            csv_text = store.leaderboard_csv_payload(org_id, mode, overrides)
            return Response(content=csv_text, media_type="text/csv")
        return json_response(store.leaderboard_payload(org_id, mode, overrides))

    @app.get("/api/v1/assets/{asset_id}/depscores")
    async def asset_depscores(asset_id: str) -> Response:
        return json_response(store.asset_depscores(asset_id))

    @app.get("/api/v1/audit")
    async def audit(request: Request) -> Response:
        raw_limit = request.query_params.get("limit", "100")
        try:
            limit = int(raw_limit)
        except ValueError:
            raise InvalidFieldError(f"limit must be an integer, got {raw_limit!r}") from None
        return json_response(store.audit_tail(limit))

    # --- gating and dry runs ---

    @app.post("/api/v1/gate/pr")
    async def gate_pr(request: Request) -> dict:
        body = _require_dict(await _read_json(request))
        for key in ("asset", "base_sbom", "head_sbom"):
            if key not in body:
                raise InvalidFieldError(f"gate request is missing {key!r}")
        return store.gate_pr(
            body["asset"],
            _sbom_bytes(body["base_sbom"]),
            _sbom_bytes(body["head_sbom"]),
            API_ACTOR,
        )

    @app.post("/api/v1/bindings")
    async def build_binding(request: Request) -> Response:
        body = _require_dict(await _read_json(request))
        context = body.get("context", "")
        return json_response(store.build_binding(context, body))

    # Declared before the parameterized dry-run route so the literal path wins.
    @app.post("/api/v1/policies/dry-run")
    async def dry_run_adhoc(request: Request) -> dict:
        body = _require_dict(await _read_json(request))
        script = PolicyScript.create(
            body.get("policy_id", "adhoc"),
            body.get("context", ""),
            body.get("source", ""),
        )
        binding = body.get("binding")
        if not isinstance(binding, dict):
            raise InvalidFieldError("dry run needs a binding object")
        return store.dry_run_policy(script, binding, _budget_from(body.get("budget")))

    @app.post("/api/v1/policies/{policy_id}/dry-run")
    async def dry_run_stored(policy_id: str, request: Request) -> dict:
        body = _require_dict(await _read_json(request))
        script = store.stored_policy(policy_id)
        binding = body.get("binding")
        if not isinstance(binding, dict):
            raise InvalidFieldError("dry run needs a binding object")
        return store.dry_run_policy(script, binding, _budget_from(body.get("budget")))

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
