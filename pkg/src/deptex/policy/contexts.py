"""Evaluation contexts: the read-only bindings scripts see and the typed
outcomes they produce.

Four contexts exist. Status scripts inspect one asset and may request a
compliance transition; policy scripts check one component's metadata and
accumulate violations; pr scripts judge a dependency delta and must reach
an explicit allow/block verdict; notification scripts route a signal to
channels. Binding layouts are part of the public contract and documented
in docs/policylang.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from ..graph import AssetNode, CompNode, EdgeKind, NodeKind, OrgGraph, SignalNode
from ..sbom import SbomDocument, dependency_delta

CONTEXTS = ("status", "policy", "pr", "notification")

# actions a script may invoke, per context
CONTEXT_ACTIONS: dict[str, tuple[str, ...]] = {
    "status": ("transition",),
    "policy": ("violation",),
    "pr": ("allow", "block"),
    "notification": ("notify",),
}


@dataclass
class StatusOutcome:
    transition_to: str | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"transition_to": self.transition_to}


@dataclass
class PolicyCheckOutcome:
    passed: bool = True
    violations: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"pass": self.passed, "violations": self.violations}


@dataclass
class PrOutcome:
    decision: str = "block"  # allow | block
    comment: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {"decision": self.decision, "comment": self.comment}


@dataclass
class NotificationOutcome:
    dispatches: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"dispatches": self.dispatches}


Outcome = StatusOutcome | PolicyCheckOutcome | PrOutcome | NotificationOutcome


def _asset_record(graph: OrgGraph, asset: AssetNode) -> dict[str, Any]:
    return {
        "id": asset.id,
        "name": asset.name,
        "tier": asset.tier,
        "current_status": asset.compliance_status,
        "exposure": asset.exposure,
        "critical": asset.critical,
        "attrs": dict(asset.attrs),
    }


def build_status_binding(
    graph: OrgGraph,
    asset_id: str,
    depscores: dict[tuple[str, str], int] | None = None,
) -> dict[str, Any]:
    """Binding for status scripts: the asset plus a risk summary."""
    asset = graph.require(asset_id, NodeKind.ASSET)
    signal_ids = set()
    for dep in graph.out_edges(asset_id, EdgeKind.DEPENDS_ON):
        for affects in graph.in_edges(dep.dst, EdgeKind.AFFECTS):
            signal_ids.add(affects.src)
    severities = [graph.node(s).severity for s in signal_ids]
    scores = [
        depscores.get((s, asset_id), 0) for s in signal_ids
    ] if depscores else []
    return {
        "asset": _asset_record(graph, asset),
        "risk_summary": {
            "signal_count": len(signal_ids),
            "max_severity": max(severities) if severities else 0.0,
            "max_depscore": max(scores) if scores else 0,
            "ownership_gap": graph.ownership_gap(asset_id),
        },
    }


def build_policy_binding(graph: OrgGraph, comp_id: str) -> dict[str, Any]:
    """Binding for policy scripts: one component's metadata."""
    comp = graph.require(comp_id, NodeKind.COMP)
    assert isinstance(comp, CompNode)
    maintainers = len(graph.in_edges(comp_id, EdgeKind.MAINTAINS))
    return {
        "component": {
            "purl": comp.purl,
            "name": comp.name,
            "version": comp.version,
            "licenses": list(comp.licenses),
            "license": comp.licenses[0] if comp.licenses else "",
            "maintainer_count": maintainers,
        }
    }


def _component_record(spec: Any) -> dict[str, Any]:
    return {
        "purl": spec.purl,
        "name": spec.name,
        "version": spec.version,
        "licenses": list(spec.licenses),
        "license": spec.licenses[0] if spec.licenses else "",
        "direct": spec.direct,
        "scope": spec.scope,
        "depth": spec.depth,
    }


def build_pr_binding(
    graph: OrgGraph,
    asset_id: str,
    old_doc: SbomDocument,
    new_doc: SbomDocument,
) -> dict[str, Any]:
    """Binding for pr scripts: the asset and the proposed dependency delta."""
    asset = graph.require(asset_id, NodeKind.ASSET)
    delta = dependency_delta(old_doc, new_doc)
    added = [_component_record(c) for c in delta["added"]]
    removed = [_component_record(c) for c in delta["removed"]]
    old_licenses = {lic for c in old_doc.components for lic in c.licenses}
    added_licenses = sorted(
        {lic for c in new_doc.components for lic in c.licenses} - old_licenses
    )
    return {
        "asset": _asset_record(graph, asset),
        "tier": asset.tier,
        "delta": {
            "added": added,
            "removed": removed,
            "upgraded": delta["upgraded"],
            "added_licenses": added_licenses,
        },
    }


def build_notification_binding(
    graph: OrgGraph,
    signal_id: str,
    depscores: dict[tuple[str, str], int] | None = None,
    event: str = "signal_ingested",
) -> dict[str, Any]:
    """Binding for notification scripts: signal, blast radius, per-asset rows."""
    signal = graph.require(signal_id, NodeKind.SIGNAL)
    assert isinstance(signal, SignalNode)
    metrics = graph.governance_metrics(signal_id)
    rows = []
    for asset_id in graph.affected_assets(signal_id):
        asset = graph.node(asset_id)
        rows.append(
            {
                "id": asset.id,
                "name": asset.name,
                "tier": asset.tier,
                "depscore": depscores.get((signal_id, asset_id)) if depscores else None,
            }
        )
    return {
        "event": event,
        "signal": {
            "external_id": signal.external_id,
            "severity": signal.severity,
            "confidence": signal.confidence,
            "description": signal.description,
        },
        "blast": {
            "asset_count": metrics.asset_count,
            "unit_count": metrics.unit_count,
            "gap_assets": list(metrics.gap_assets),
        },
        "assets": rows,
    }
