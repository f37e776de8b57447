"""Application state and orchestration around the org graph.

One ApplicationStore owns everything a running service needs: the graph,
stored policies, notification channels, computed depscores, and an
append-only audit log.  It also owns the snapshot file: every mutating
operation persists atomically (write to a temp file, then rename), so a
crash leaves either the old or the new state, never a torn file.

The ingestion methods here are the single path shared by the HTTP API and
the command line, which is what keeps their outputs identical.
"""

from __future__ import annotations

import json
import logging
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional

from .errors import (
    BudgetExceededError,
    CorruptSnapshotError,
    DuplicateIdError,
    HttpDeniedError,
    InvalidFieldError,
    MissingVerdictError,
    NotFoundError,
    PolicyRuntimeError,
)
from .graph import (
    AssetNode,
    CompNode,
    NodeKind,
    OrgGraph,
    OrgNode,
    SignalNode,
    StatusDef,
    TierDef,
    UnitNode,
)
from .policy import (
    PolicyScript,
    SandboxBudget,
    dry_run,
    evaluate,
    run_status_policies,
)
from .policy.contexts import (
    CONTEXTS,
    PrOutcome,
    build_notification_binding,
    build_policy_binding,
    build_pr_binding,
    build_status_binding,
)
from .reachability import (
    DepscoreResult,
    EpdParams,
    SliceReport,
    VerifierVerdict,
    depscore,
    external_verify,
    parse_slice,
)
from .risk import AggMode, leaderboard, leaderboard_csv, leaderboard_json, unit_risk
from .sbom import SbomDocument, apply_sbom, parse_sbom
from .service.dispatch import ChannelDef, Dispatch, Dispatcher
from .vulnfeed import match_vulnerabilities, parse_feed

logger = logging.getLogger(__name__)

# "dry-run" would shadow the ad-hoc dry run route under /policies/.
RESERVED_POLICY_IDS = {"dry-run"}

STORE_SECTIONS = ("policies", "channels", "depscores", "audit")


@dataclass
class AuditRecord:
    """One immutable line in the audit trail."""

    timestamp: str
    actor: str
    action: str
    subject: str
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "actor": self.actor,
            "action": self.action,
            "subject": self.subject,
            "detail": self.detail,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AuditRecord":
        return cls(
            timestamp=data.get("timestamp", ""),
            actor=data.get("actor", ""),
            action=data.get("action", ""),
            subject=data.get("subject", ""),
            detail=data.get("detail") or {},
        )


def node_dict(node: Any) -> dict:
    """Response shape for one graph node: id, kind, and its public fields."""
    entry: dict[str, Any] = {"id": node.id, "kind": node.kind.value}
    if isinstance(node, AssetNode):
        entry.update(
            name=node.name,
            tier=node.tier,
            compliance_status=node.compliance_status,
            exposure=node.exposure,
            critical=node.critical,
            attrs=node.attrs,
        )
    elif isinstance(node, CompNode):
        entry.update(purl=node.purl, name=node.name, version=node.version, licenses=node.licenses)
    elif isinstance(node, SignalNode):
        entry.update(
            external_id=node.external_id,
            severity=node.severity,
            confidence=node.confidence,
            description=node.description,
        )
    else:
        entry.update(name=node.name, attrs=node.attrs)
    return entry


def render_json(payload: Any) -> str:
    """The one JSON renderer shared by API responses and CLI output.

    Byte-identical output from both front ends is a hard requirement, so
    neither side may format for itself.
    """
    return json.dumps(payload, indent=2, ensure_ascii=False, sort_keys=False) + "\n"


def parse_tier_overrides(raw: list[str]) -> dict[str, Optional[str]]:
    """Parse what-if overrides of the form ``asset:tier``.

    A tier of ``none`` (or empty) previews the asset with no tier at all.
    """
    overrides: dict[str, Optional[str]] = {}
    for item in raw:
        if ":" not in item:
            raise InvalidFieldError(
                f"override must look like asset:tier, got {item!r}"
            )
        asset_id, _, tier = item.partition(":")
        if not asset_id:
            raise InvalidFieldError(f"override is missing the asset id: {item!r}")
        overrides[asset_id] = None if tier in ("", "none") else tier
    return overrides


class ApplicationStore:
    """Everything the service holds, plus snapshot persistence."""

    def __init__(
        self,
        path: Optional[Path] = None,
        epd_params: Optional[EpdParams] = None,
        budget: Optional[SandboxBudget] = None,
        verifier_url: Optional[str] = None,
        dispatcher: Optional[Dispatcher] = None,
        clock: Optional[Callable[[], datetime]] = None,
        background_dispatch: bool = True,
        policy_transport: Optional[Callable[[str, str, Any], str]] = None,
    ):
        self.graph = OrgGraph()
        self.policies: dict[str, PolicyScript] = {}
        self.channels: dict[str, ChannelDef] = {}
        # (signal_id, asset_id) -> DepscoreResult dict
        self.depscores: dict[tuple[str, str], dict] = {}
        self.audit_log: list[AuditRecord] = []
        self.path = Path(path) if path is not None else None
        self.epd_params = epd_params or EpdParams()
        self.epd_params.validate()
        self.budget = budget or SandboxBudget()
        self.verifier_url = verifier_url
        self.dispatcher = dispatcher or Dispatcher(channels=lambda: self.channels)
        self.clock = clock or (lambda: datetime.now(timezone.utc))
        # Webhook delivery waits out a retry schedule; API calls must not.
        self.background_dispatch = background_dispatch
        # Outbound HTTP made by policy scripts; None means the real client.
        self.policy_transport = policy_transport
        self._lock = threading.RLock()

    # --- audit ---

    def record(self, actor: str, action: str, subject: str, detail: Optional[dict] = None) -> None:
        with self._lock:
            self.audit_log.append(
                AuditRecord(
                    timestamp=self.clock().isoformat(),
                    actor=actor,
                    action=action,
                    subject=subject,
                    detail=detail or {},
                )
            )

    def audit_tail(self, limit: int = 100) -> list[dict]:
        with self._lock:
            records = self.audit_log[-limit:] if limit > 0 else list(self.audit_log)
            return [r.to_dict() for r in records]

    # --- persistence ---

    def to_snapshot(self) -> dict:
        snapshot = self.graph.to_snapshot()
        snapshot["policies"] = [
            self.policies[k].to_dict() for k in sorted(self.policies)
        ]
        snapshot["channels"] = [
            self.channels[k].to_dict() for k in sorted(self.channels)
        ]
        snapshot["depscores"] = [
            {"signal_id": s, "asset_id": a, "result": result}
            for (s, a), result in sorted(self.depscores.items())
        ]
        snapshot["audit"] = [r.to_dict() for r in self.audit_log]
        return snapshot

    def load_snapshot(self, data: Any) -> None:
        """Replace all state from a snapshot dict; anything invalid rejects it."""
        if not isinstance(data, dict):
            raise CorruptSnapshotError("snapshot root must be a JSON object")
        try:
            graph = OrgGraph.from_snapshot(data)
            policies = {}
            for raw in data.get("policies", []):
                script = PolicyScript.from_dict(raw)
                policies[script.policy_id] = script
            channels = {}
            for raw in data.get("channels", []):
                chan = ChannelDef.from_dict(raw)
                channels[chan.channel_id] = chan
            depscores = {}
            for raw in data.get("depscores", []):
                key = (raw["signal_id"], raw["asset_id"])
                result = raw["result"]
                if not isinstance(result, dict) or "epd" not in result:
                    raise InvalidFieldError("depscore entry is missing its result")
                depscores[key] = result
            audit = [AuditRecord.from_dict(raw) for raw in data.get("audit", [])]
        except CorruptSnapshotError:
            raise
        except Exception as exc:
            raise CorruptSnapshotError(f"snapshot failed validation: {exc}") from exc
        with self._lock:
            self.graph = graph
            self.policies = policies
            self.channels = channels
            self.depscores = depscores
            self.audit_log = audit

    def persist(self) -> None:
        """Atomically write the snapshot: temp file in place, then rename."""
        if self.path is None:
            return
        with self._lock:
            payload = json.dumps(self.to_snapshot(), ensure_ascii=False)
            tmp = self.path.with_name(self.path.name + ".tmp")
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write(payload)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)

    @classmethod
    def load(cls, path: Path, **kwargs: Any) -> "ApplicationStore":
        store = cls(path=path, **kwargs)
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise CorruptSnapshotError(f"cannot read snapshot: {exc}") from exc
        try:
            data = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CorruptSnapshotError(f"snapshot is not valid JSON: {exc}") from exc
        store.load_snapshot(data)
        return store

    @classmethod
    def open(cls, path: Path, **kwargs: Any) -> "ApplicationStore":
        """Load an existing snapshot, or start fresh when the file is absent."""
        if Path(path).exists():
            return cls.load(path, **kwargs)
        return cls(path=path, **kwargs)

    # --- depscore views ---

    def epd_lookup(self) -> dict[tuple[str, str], float]:
        return {key: result["epd"] for key, result in self.depscores.items()}

    def depscore_ints(self) -> dict[tuple[str, str], int]:
        return {key: result["depscore"] for key, result in self.depscores.items()}

    # --- creation ---

    def create_node(self, kind: NodeKind, body: dict, actor: str) -> dict:
        body = dict(body)
        parent_key = {NodeKind.UNIT: "org", NodeKind.ASSET: "unit"}.get(kind)
        parent = body.pop(parent_key, None) if parent_key else None
        tier = body.pop("tier", None) if kind == NodeKind.ASSET else None
        with self._lock:
            node_id = self.graph.add_node(kind, body)
            try:
                if parent is not None:
                    edge_kind = "contains" if kind == NodeKind.UNIT else "owns"
                    self.graph.add_edge(parent, node_id, edge_kind)
                if tier is not None:
                    self.graph.set_asset_tier(node_id, tier)
            except Exception:
                self.graph.delete_node(node_id)  # creation is all-or-nothing
                raise
            self.record(actor, f"create_{kind.value.lower()}", node_id, {"name": body.get("name", "")})
            self.persist()
            return node_dict(self.graph.node(node_id))

    def create_edge(self, src: str, dst: str, kind: str, attrs: Optional[dict], actor: str) -> dict:
        with self._lock:
            edge = self.graph.add_edge(src, dst, kind, attrs or {})
            self.record(actor, "create_edge", f"{src}->{dst}", {"kind": kind})
            self.persist()
            return {"src": edge.src, "dst": edge.dst, "kind": edge.kind.value, "attrs": edge.attrs}

    def create_tier(self, body: dict, actor: str) -> dict:
        tier = TierDef(
            tier_id=body.get("tier_id", ""),
            name=body.get("name", ""),
            importance=body.get("importance", 1.0),
        )
        with self._lock:
            self.graph.add_tier(tier)
            self.record(actor, "create_tier", tier.tier_id, {"importance": tier.importance})
            self.persist()
            return {"tier_id": tier.tier_id, "name": tier.name, "importance": tier.importance}

    def update_tier(self, tier_id: str, body: dict, actor: str) -> dict:
        """Rename a tier or change its importance; assignments follow along."""
        with self._lock:
            tier = self.graph.tier(tier_id)
            updated = TierDef(
                tier_id=tier_id,
                name=body.get("name", tier.name),
                importance=body.get("importance", tier.importance),
            )
            updated.validate()
            tier.name = updated.name
            tier.importance = updated.importance
            self.record(actor, "update_tier", tier_id, {"importance": tier.importance})
            self.persist()
            return {"tier_id": tier_id, "name": tier.name, "importance": tier.importance}

    def create_status(self, body: dict, actor: str) -> dict:
        status = StatusDef(
            status_id=body.get("status_id", ""),
            name=body.get("name", ""),
            color_hint=body.get("color_hint", ""),
        )
        with self._lock:
            self.graph.add_status(status)
            self.record(actor, "create_status", status.status_id, {})
            self.persist()
            return {
                "status_id": status.status_id,
                "name": status.name,
                "color_hint": status.color_hint,
            }

    def create_channel(self, body: dict, actor: str) -> dict:
        chan = ChannelDef(
            channel_id=body.get("channel_id", ""),
            endpoint=body.get("endpoint", ""),
            kind=body.get("kind", "webhook"),
            secret=body.get("secret", ""),
            description=body.get("description", ""),
        )
        chan.validate()
        with self._lock:
            if chan.channel_id in self.channels:
                raise DuplicateIdError(f"channel already exists: {chan.channel_id}")
            self.channels[chan.channel_id] = chan
            self.record(actor, "create_channel", chan.channel_id, {"endpoint": chan.endpoint})
            self.persist()
            public = chan.to_dict()
            public["secret"] = "***" if chan.secret else ""
            return public

    def create_policy(self, body: dict, actor: str) -> dict:
        policy_id = body.get("policy_id", "")
        if policy_id in RESERVED_POLICY_IDS:
            raise InvalidFieldError(f"policy id {policy_id!r} is reserved")
        script = PolicyScript.create(policy_id, body.get("context", ""), body.get("source", ""))
        with self._lock:
            if script.policy_id in self.policies:
                raise DuplicateIdError(f"policy already exists: {script.policy_id}")
            self.policies[script.policy_id] = script
            self.record(actor, "create_policy", script.policy_id, {"context": script.context})
            self.persist()
            return script.to_dict()

    def set_tier(self, asset_id: str, tier: Optional[str], actor: str) -> dict:
        with self._lock:
            self.graph.set_asset_tier(asset_id, tier)
            self.record(actor, "set_tier", asset_id, {"tier": tier})
            self.persist()
            return node_dict(self.graph.node(asset_id))

    # --- policy runners ---

    def _run_status_policies(self, asset_id: str, actor: str) -> list[dict]:
        def audit(entry: dict) -> None:
            self.record(actor, entry["event"], asset_id, entry)

        return run_status_policies(
            self.graph,
            list(self.policies.values()),
            asset_id,
            depscores=self.depscore_ints(),
            budget=self.budget,
            transport=self.policy_transport,
            audit=audit,
        )

    def _run_notification_policies(
        self, signal_id: str, event: str, actor: str
    ) -> list[Dispatch]:
        signal = self.graph.require(signal_id, NodeKind.SIGNAL)
        assert isinstance(signal, SignalNode)
        binding = build_notification_binding(
            self.graph, signal_id, self.depscore_ints(), event
        )
        dispatches: list[Dispatch] = []
        for script in sorted(
            (p for p in self.policies.values() if p.context == "notification"),
            key=lambda p: p.policy_id,
        ):
            try:
                outcome = evaluate(script, binding, self.budget, self.policy_transport)
            except (PolicyRuntimeError, BudgetExceededError, HttpDeniedError) as exc:
                logger.warning(
                    "notification policy %s failed on %s: %s",
                    script.policy_id,
                    signal_id,
                    exc.message,
                )
                self.record(
                    actor,
                    "notification_policy_failed",
                    signal_id,
                    {"policy_id": script.policy_id, "error": exc.message},
                )
                continue
            for entry in outcome.dispatches:
                dispatches.append(
                    Dispatch(
                        channel_id=entry["channel_id"],
                        payload=entry["payload"],
                        event=event,
                        signal=signal.external_id,
                    )
                )
        return dispatches

    def _deliver(self, dispatches: list[Dispatch], actor: str, background: bool) -> list[dict]:
        if not dispatches:
            return []

        def on_report(reports: list) -> None:
            for report in reports:
                self.record(actor, "dispatch", report.channel_id, report.to_dict())
            self.persist()

        if background:
            self.dispatcher.deliver_background(dispatches, on_report)
            return [{"channel_id": d.channel_id, "status": "queued"} for d in dispatches]
        reports = self.dispatcher.deliver(dispatches)
        on_report(reports)
        return [r.to_dict() for r in reports]

    # --- ingestion ---

    def ingest_sbom(self, asset_id: str, data: bytes | str, actor: str) -> dict:
        doc = parse_sbom(data)
        with self._lock:
            self.graph.require(asset_id, NodeKind.ASSET)
            delta = apply_sbom(self.graph, asset_id, doc)
            self.record(actor, "ingest_sbom", asset_id, dict(delta))
            transitions = self._run_status_policies(asset_id, actor)
            self.persist()
        return {"added": delta["added"], "removed": delta["removed"], "transitions": transitions}

    def ingest_feed(
        self, data: bytes | str, actor: str, background: Optional[bool] = None
    ) -> dict:
        if background is None:
            background = self.background_dispatch
        entries = parse_feed(data)
        with self._lock:
            results = match_vulnerabilities(self.graph, entries)
            matched = []
            dispatches: list[Dispatch] = []
            for result in results:
                matched.append(
                    {
                        "signal_id": result.signal_id,
                        "external_id": result.external_id,
                        "comp_ids": list(result.comp_ids),
                    }
                )
                self.record(
                    actor,
                    "ingest_signal",
                    result.signal_id,
                    {"external_id": result.external_id, "matched": len(result.comp_ids)},
                )
                dispatches.extend(
                    self._run_notification_policies(result.signal_id, "signal_ingested", actor)
                )
            reports = self._deliver(dispatches, actor, background)
            self.persist()
        return {"entries": len(entries), "signals": matched, "dispatch": reports}

    def _verify_fn(self):
        if not self.verifier_url:
            return None
        url = self.verifier_url

        def verify(report: SliceReport, entry: str) -> VerifierVerdict:
            return external_verify(report, entry, url, self.epd_params)

        return verify

    def ingest_slice(
        self, data: bytes | str | dict, actor: str, background: Optional[bool] = None
    ) -> dict:
        if background is None:
            background = self.background_dispatch
        report = parse_slice(data)
        with self._lock:
            signal = self._resolve_signal(report.signal_ref)
            report.signal_ref = signal.id  # slices may name the external id
            asset_id = report.asset_ref
            self.graph.require(asset_id, NodeKind.ASSET)
            result = depscore(signal, report, self.epd_params, self._verify_fn())
            self.depscores[(signal.id, asset_id)] = result.to_dict()
            self.record(
                actor,
                "depscore_computed",
                asset_id,
                {"signal_id": signal.id, "depscore": result.depscore, "epd": result.epd},
            )
            transitions = self._run_status_policies(asset_id, actor)
            dispatches = self._run_notification_policies(
                signal.id, "depscore_computed", actor
            )
            reports = self._deliver(dispatches, actor, background)
            self.persist()
        return {
            "signal_id": signal.id,
            "asset_id": asset_id,
            "result": result.to_dict(),
            "transitions": transitions,
            "dispatch": reports,
        }

    # --- queries ---

    def _resolve_signal(self, ref: str) -> SignalNode:
        """Accept either a node id or the external id of a signal."""
        if self.graph.has_node(ref):
            node = self.graph.require(ref, NodeKind.SIGNAL)
            assert isinstance(node, SignalNode)
            return node
        for node in self.graph.nodes(NodeKind.SIGNAL):
            assert isinstance(node, SignalNode)
            if node.external_id == ref:
                return node
        raise NotFoundError(f"no such signal: {ref}")

    def blast_radius(self, signal_ref: str) -> dict:
        signal = self._resolve_signal(signal_ref)
        metrics = self.graph.governance_metrics(signal.id)
        assets = []
        for asset_id in self.graph.affected_assets(signal.id):
            asset = self.graph.node(asset_id)
            assert isinstance(asset, AssetNode)
            stored = self.depscores.get((signal.id, asset_id))
            assets.append(
                {
                    "id": asset.id,
                    "name": asset.name,
                    "tier": asset.tier,
                    "ownership_gap": self.graph.ownership_gap(asset_id),
                    "depscore": stored["depscore"] if stored else None,
                }
            )
        units = []
        for unit_id in self.graph.affected_units(signal.id):
            unit = self.graph.node(unit_id)
            units.append(
                {
                    "id": unit.id,
                    "name": unit.name,
                    "risk": unit_risk(
                        self.graph, signal.id, unit_id, epd_lookup=self.epd_lookup()
                    ),
                }
            )
        return {
            "signal_id": signal.id,
            "external_id": signal.external_id,
            "severity": signal.severity,
            "asset_count": metrics.asset_count,
            "unit_count": metrics.unit_count,
            "gap_assets": list(metrics.gap_assets),
            "assets": assets,
            "units": units,
        }

    def leaderboard_payload(
        self,
        org_id: str,
        mode: AggMode = AggMode.SUM,
        overrides: Optional[dict[str, Optional[str]]] = None,
    ) -> list[dict]:
        self.graph.require(org_id, NodeKind.ORG)
        rows = leaderboard(
            self.graph,
            org_id=org_id,
            mode=mode,
            epd_lookup=self.epd_lookup(),
            tier_overrides=overrides,
        )
        return leaderboard_json(rows)

    def leaderboard_csv_payload(
        self,
        org_id: str,
        mode: AggMode = AggMode.SUM,
        overrides: Optional[dict[str, Optional[str]]] = None,
    ) -> str:
        self.graph.require(org_id, NodeKind.ORG)
        rows = leaderboard(
            self.graph,
            org_id=org_id,
            mode=mode,
            epd_lookup=self.epd_lookup(),
            tier_overrides=overrides,
        )
        return leaderboard_csv(rows)

    def asset_depscores(self, asset_id: str) -> list[dict]:
        self.graph.require(asset_id, NodeKind.ASSET)
        rows = []
        for (signal_id, scored_asset), result in sorted(self.depscores.items()):
            if scored_asset != asset_id:
                continue
            signal = self.graph.node(signal_id)
            assert isinstance(signal, SignalNode)
            row = {"signal_id": signal_id, "external_id": signal.external_id}
            row.update(result)
            rows.append(row)
        return rows

    def list_nodes(self, kind: NodeKind) -> list[dict]:
        return [node_dict(n) for n in sorted(self.graph.nodes(kind), key=lambda n: n.id)]

    # --- gating ---

    def gate_pr(
        self,
        asset_ref: str,
        base: bytes | str | SbomDocument,
        head: bytes | str | SbomDocument,
        actor: str,
    ) -> dict:
        """Evaluate pr policies against a proposed dependency change.

        Never mutates the graph or scores.  Any block wins; a policy that
        ends without a verdict fails closed (the error carries the block
        result for transport layers that must still answer).
        """
        self.graph.require(asset_ref, NodeKind.ASSET)
        old_doc = base if isinstance(base, SbomDocument) else parse_sbom(base)
        new_doc = head if isinstance(head, SbomDocument) else parse_sbom(head)
        binding = build_pr_binding(self.graph, asset_ref, old_doc, new_doc)
        scripts = sorted(
            (p for p in self.policies.values() if p.context == "pr"),
            key=lambda p: p.policy_id,
        )
        if not scripts:
            result = {
                "decision": "allow",
                "comment": "no pr policies configured",
                "evaluations": [],
            }
            self.record(actor, "gate_pr", asset_ref, {"decision": "allow", "policies": 0})
            self.persist()
            return result
        evaluations = []
        comments = []
        decision = "allow"
        for script in scripts:
            try:
                outcome = evaluate(script, binding, self.budget, self.policy_transport)
            except MissingVerdictError as exc:
                result = {
                    "decision": "block",
                    "comment": f"policy {script.policy_id} ended without a verdict; blocking",
                    "evaluations": evaluations,
                }
                self.record(
                    actor,
                    "gate_pr",
                    asset_ref,
                    {"decision": "block", "missing_verdict": script.policy_id},
                )
                self.persist()
                exc.gate_result = result
                raise
            assert isinstance(outcome, PrOutcome)
            evaluations.append(
                {
                    "policy_id": script.policy_id,
                    "decision": outcome.decision,
                    "comment": outcome.comment,
                }
            )
            if outcome.comment:
                comments.append(outcome.comment)
            if outcome.decision == "block":
                decision = "block"
        result = {
            "decision": decision,
            "comment": "\n".join(comments),
            "evaluations": evaluations,
        }
        self.record(
            actor, "gate_pr", asset_ref, {"decision": decision, "policies": len(scripts)}
        )
        self.persist()
        return result

    # --- dry runs and bindings ---

    def build_binding(self, context: str, refs: dict) -> dict:
        """Materialize a live binding for the editor's fixture picker."""
        if context == "status":
            return build_status_binding(self.graph, refs["asset"], self.depscore_ints())
        if context == "policy":
            return build_policy_binding(self.graph, refs["comp"])
        if context == "notification":
            return build_notification_binding(
                self.graph,
                self._resolve_signal(refs["signal"]).id,
                self.depscore_ints(),
                refs.get("event", "signal_ingested"),
            )
        if context == "pr":
            return build_pr_binding(
                self.graph,
                refs["asset"],
                parse_sbom(json.dumps(refs["base_sbom"])),
                parse_sbom(json.dumps(refs["head_sbom"])),
            )
        raise InvalidFieldError(
            f"unknown policy context {context!r}; expected one of {', '.join(CONTEXTS)}"
        )

    def dry_run_policy(
        self,
        script: PolicyScript,
        binding: dict,
        budget: Optional[SandboxBudget] = None,
    ) -> dict:
        result = dry_run(script, binding, budget or self.budget, self.policy_transport)
        return result.to_dict()

    def stored_policy(self, policy_id: str) -> PolicyScript:
        try:
            return self.policies[policy_id]
        except KeyError:
            raise NotFoundError(f"no such policy: {policy_id}") from None
