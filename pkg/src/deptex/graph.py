"""Typed property graph of the organization.

Nodes model the enterprise (Org, Unit, Asset), its dependencies (Comp),
their maintainers (Actor) and observed vulnerabilities (Signal). Edges are
restricted by a fixed typing table; every mutation is checked against it,
so the graph can never hold a structurally invalid edge. On top of the
store sit the fixed governance queries: ownership gaps, blast radii and
per-signal governance metrics.

Mutations are serialized through one internal lock (single-writer,
multiple-reader contract); queries never mutate.
"""

from __future__ import annotations

import re
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, ClassVar, Iterator, Union

from .errors import (
    DuplicateEdgeError,
    DuplicateIdError,
    InvalidFieldError,
    MissingEndpointError,
    NotFoundError,
    TypeViolationError,
    UnknownStatusError,
    WrongKindError,
)


class NodeKind(str, Enum):
    ORG = "Org"
    UNIT = "Unit"
    ASSET = "Asset"
    COMP = "Comp"
    ACTOR = "Actor"
    SIGNAL = "Signal"


class EdgeKind(str, Enum):
    CONTAINS = "contains"
    OWNS = "owns"
    DEPENDS_ON = "depends_on"
    AFFECTS = "affects"
    MAINTAINS = "maintains"


class DependencyScope(str, Enum):
    RUNTIME = "runtime"
    DEV = "dev"
    TEST = "test"


# The only edge shapes the graph admits.
TYPING_TABLE: frozenset[tuple[NodeKind, EdgeKind, NodeKind]] = frozenset(
    {
        (NodeKind.ORG, EdgeKind.CONTAINS, NodeKind.UNIT),
        (NodeKind.UNIT, EdgeKind.OWNS, NodeKind.ASSET),
        (NodeKind.ASSET, EdgeKind.DEPENDS_ON, NodeKind.COMP),
        (NodeKind.SIGNAL, EdgeKind.AFFECTS, NodeKind.COMP),
        (NodeKind.ACTOR, EdgeKind.MAINTAINS, NodeKind.COMP),
    }
)

DEFAULT_STATUS_ID = "unreviewed"


@dataclass
class TierDef:
    """A named asset tier whose importance scales risk contributions."""

    tier_id: str
    name: str
    importance: float

    def validate(self) -> None:
        if not self.tier_id:
            raise InvalidFieldError("tier_id must be non-empty")
        if not isinstance(self.importance, (int, float)) or isinstance(self.importance, bool):
            raise InvalidFieldError("tier importance must be a number")
        if self.importance <= 0:
            raise InvalidFieldError(f"tier importance must be > 0, got {self.importance}")


@dataclass
class StatusDef:
    """A compliance status an asset can be in."""

    status_id: str
    name: str
    color_hint: str = ""

    def validate(self) -> None:
        if not self.status_id:
            raise InvalidFieldError("status_id must be non-empty")


@dataclass
class OrgNode:
    id: str
    name: str = ""
    attrs: dict[str, Any] = field(default_factory=dict)
    kind: ClassVar[NodeKind] = NodeKind.ORG


@dataclass
class UnitNode:
    id: str
    name: str = ""
    attrs: dict[str, Any] = field(default_factory=dict)
    kind: ClassVar[NodeKind] = NodeKind.UNIT


@dataclass
class ActorNode:
    id: str
    name: str = ""
    attrs: dict[str, Any] = field(default_factory=dict)
    kind: ClassVar[NodeKind] = NodeKind.ACTOR


@dataclass
class AssetNode:
    id: str
    name: str = ""
    tier: str | None = None
    compliance_status: str = DEFAULT_STATUS_ID
    exposure: float = 1.0
    critical: bool = False
    attrs: dict[str, Any] = field(default_factory=dict)
    kind: ClassVar[NodeKind] = NodeKind.ASSET


@dataclass
class CompNode:
    id: str
    purl: str = ""
    name: str = ""
    version: str = ""
    licenses: list[str] = field(default_factory=list)
    kind: ClassVar[NodeKind] = NodeKind.COMP


@dataclass
class SignalNode:
    id: str
    external_id: str = ""
    severity: float = 0.0
    confidence: float = 1.0
    description: str = ""
    kind: ClassVar[NodeKind] = NodeKind.SIGNAL


Node = Union[OrgNode, UnitNode, ActorNode, AssetNode, CompNode, SignalNode]

_NODE_CLASSES: dict[NodeKind, type] = {
    NodeKind.ORG: OrgNode,
    NodeKind.UNIT: UnitNode,
    NodeKind.ACTOR: ActorNode,
    NodeKind.ASSET: AssetNode,
    NodeKind.COMP: CompNode,
    NodeKind.SIGNAL: SignalNode,
}


@dataclass
class Edge:
    src: str
    dst: str
    kind: EdgeKind
    attrs: dict[str, Any] = field(default_factory=dict)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.src, self.dst, self.kind.value)


@dataclass
class GovernanceMetrics:
    asset_count: int
    unit_count: int
    gap_assets: list[str]


def _check_number(name: str, value: Any, lo: float, hi: float) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidFieldError(f"{name} must be a number")
    if not (lo <= value <= hi):
        raise InvalidFieldError(f"{name} must be in [{lo}, {hi}], got {value}")
    return float(value)


def _check_str(name: str, value: Any) -> str:
    if not isinstance(value, str):
        raise InvalidFieldError(f"{name} must be a string")
    return value


def _check_bool(name: str, value: Any) -> bool:
    if not isinstance(value, bool):
        raise InvalidFieldError(f"{name} must be a boolean")
    return value


class OrgGraph:
    """In-memory typed property graph with integrity enforcement."""

    def __init__(self):
        self._nodes: dict[str, Node] = {}
        self._edges: dict[tuple[str, str, str], Edge] = {}
        self._out: dict[str, list[Edge]] = defaultdict(list)
        self._in: dict[str, list[Edge]] = defaultdict(list)
        self._tiers: dict[str, TierDef] = {}
        self._statuses: dict[str, StatusDef] = {
            DEFAULT_STATUS_ID: StatusDef(DEFAULT_STATUS_ID, "Unreviewed", "#9e9e9e")
        }
        self._id_seq: dict[NodeKind, int] = {k: 0 for k in NodeKind}
        self._lock = threading.RLock()

    # --- tiers and statuses ---

    def add_tier(self, tier: TierDef) -> None:
        tier.validate()
        with self._lock:
            if tier.tier_id in self._tiers:
                raise DuplicateIdError(f"tier already defined: {tier.tier_id}")
            self._tiers[tier.tier_id] = tier

    def tier(self, tier_id: str) -> TierDef:
        try:
            return self._tiers[tier_id]
        except KeyError:
            raise NotFoundError(f"unknown tier: {tier_id}") from None

    def tiers(self) -> list[TierDef]:
        return sorted(self._tiers.values(), key=lambda t: t.tier_id)

    def add_status(self, status: StatusDef) -> None:
        status.validate()
        with self._lock:
            if status.status_id in self._statuses:
                raise DuplicateIdError(f"status already defined: {status.status_id}")
            self._statuses[status.status_id] = status

    def status(self, status_id: str) -> StatusDef:
        try:
            return self._statuses[status_id]
        except KeyError:
            raise NotFoundError(f"unknown status: {status_id}") from None

    def statuses(self) -> list[StatusDef]:
        return sorted(self._statuses.values(), key=lambda s: s.status_id)

    # --- node construction ---

    def _build_node(self, kind: NodeKind, node_id: str, fields: dict[str, Any]) -> Node:
        if kind in (NodeKind.ORG, NodeKind.UNIT, NodeKind.ACTOR):
            allowed = {"name", "attrs"}
            self._reject_unknown(kind, fields, allowed)
            return _NODE_CLASSES[kind](
                id=node_id,
                name=_check_str("name", fields.get("name", "")),
                attrs=dict(fields.get("attrs") or {}),
            )
        if kind is NodeKind.ASSET:
            allowed = {"name", "tier", "compliance_status", "exposure", "critical", "attrs"}
            self._reject_unknown(kind, fields, allowed)
            tier = fields.get("tier")
            if tier is not None:
                if tier not in self._tiers:
                    raise InvalidFieldError(f"asset tier references undefined tier: {tier}")
            status = fields.get("compliance_status", DEFAULT_STATUS_ID)
            if status not in self._statuses:
                raise InvalidFieldError(f"asset status references undefined status: {status}")
            return AssetNode(
                id=node_id,
                name=_check_str("name", fields.get("name", "")),
                tier=tier,
                compliance_status=status,
                exposure=_check_number("exposure", fields.get("exposure", 1.0), 0.0, 1.0),
                critical=_check_bool("critical", fields.get("critical", False)),
                attrs=dict(fields.get("attrs") or {}),
            )
        if kind is NodeKind.COMP:
            allowed = {"purl", "name", "version", "licenses"}
            self._reject_unknown(kind, fields, allowed)
            purl = _check_str("purl", fields.get("purl", ""))
            if not purl:
                raise InvalidFieldError("component purl must be non-empty")
            return CompNode(
                id=node_id,
                purl=purl,
                name=_check_str("name", fields.get("name", "")),
                version=_check_str("version", fields.get("version", "")),
                licenses=list(fields.get("licenses") or []),
            )
        if kind is NodeKind.SIGNAL:
            allowed = {"external_id", "severity", "confidence", "description"}
            self._reject_unknown(kind, fields, allowed)
            return SignalNode(
                id=node_id,
                external_id=_check_str("external_id", fields.get("external_id", "")),
                severity=_check_number("severity", fields.get("severity", 0.0), 0.0, 10.0),
                confidence=_check_number("confidence", fields.get("confidence", 1.0), 0.0, 1.0),
                description=_check_str("description", fields.get("description", "")),
            )
        raise InvalidFieldError(f"unknown node kind: {kind}")

    @staticmethod
    def _reject_unknown(kind: NodeKind, fields: dict[str, Any], allowed: set[str]) -> None:
        unknown = set(fields) - allowed
        if unknown:
            raise InvalidFieldError(
                f"unexpected field(s) for {kind.value}: {', '.join(sorted(unknown))}"
            )

    def _next_id(self, kind: NodeKind) -> str:
        prefix = kind.value.lower()
        n = self._id_seq[kind]
        while True:
            n += 1
            candidate = f"{prefix}-{n}"
            if candidate not in self._nodes:
                self._id_seq[kind] = n
                return candidate

    def add_node(self, kind: NodeKind, fields: dict[str, Any] | None = None) -> str:
        """Create a node; returns its id. An explicit id may be passed in fields."""
        fields = dict(fields or {})
        node_id = fields.pop("id", None)
        with self._lock:
            if node_id is not None:
                node_id = _check_str("id", node_id)
                if not node_id:
                    raise InvalidFieldError("node id must be non-empty")
                if node_id in self._nodes:
                    raise DuplicateIdError(f"node id already exists: {node_id}")
            else:
                node_id = self._next_id(kind)
            node = self._build_node(kind, node_id, fields)
            self._nodes[node_id] = node
            return node_id

    # --- edges ---

    def _validate_edge_attrs(self, kind: EdgeKind, attrs: dict[str, Any]) -> None:
        if kind is EdgeKind.DEPENDS_ON:
            direct = attrs.get("direct")
            if direct is not None:
                _check_bool("direct", direct)
            scope = attrs.get("scope")
            if scope is not None and scope not in {s.value for s in DependencyScope}:
                raise InvalidFieldError(f"invalid dependency scope: {scope}")
            depth = attrs.get("depth")
            if depth is not None:
                if isinstance(depth, bool) or not isinstance(depth, int) or depth < 1:
                    raise InvalidFieldError(f"dependency depth must be an int >= 1, got {depth}")
                if direct is not None and (depth == 1) != direct:
                    raise InvalidFieldError(
                        f"dependency depth {depth} inconsistent with direct={direct}"
                    )
        elif kind is EdgeKind.AFFECTS:
            conf = attrs.get("confidence")
            if conf is not None:
                _check_number("confidence", conf, 0.0, 1.0)

    def add_edge(
        self,
        src: str,
        dst: str,
        kind: EdgeKind | str,
        attrs: dict[str, Any] | None = None,
    ) -> Edge:
        kind = EdgeKind(kind)
        attrs = dict(attrs or {})
        with self._lock:
            if src not in self._nodes or dst not in self._nodes:
                missing = src if src not in self._nodes else dst
                raise MissingEndpointError(f"edge endpoint does not exist: {missing}")
            row = (self._nodes[src].kind, kind, self._nodes[dst].kind)
            if row not in TYPING_TABLE:
                raise TypeViolationError(
                    f"edge {row[0].value} -{kind.value}-> {row[2].value} not admitted by typing table"
                )
            self._validate_edge_attrs(kind, attrs)
            edge = Edge(src=src, dst=dst, kind=kind, attrs=attrs)
            if edge.key in self._edges:
                raise DuplicateEdgeError(f"duplicate edge: {src} -{kind.value}-> {dst}")
            self._edges[edge.key] = edge
            self._out[src].append(edge)
            self._in[dst].append(edge)
            return edge

    def delete_edge(self, src: str, dst: str, kind: EdgeKind | str) -> None:
        kind = EdgeKind(kind)
        with self._lock:
            edge = self._edges.pop((src, dst, kind.value), None)
            if edge is None:
                raise NotFoundError(f"edge not found: {src} -{kind.value}-> {dst}")
            self._out[src].remove(edge)
            self._in[dst].remove(edge)

    def delete_node(self, node_id: str) -> None:
        """Delete a node and cascade-remove its incident edges."""
        with self._lock:
            if node_id not in self._nodes:
                raise NotFoundError(f"node not found: {node_id}")
            for edge in list(self._out.get(node_id, ())) + list(self._in.get(node_id, ())):
                self._edges.pop(edge.key, None)
                if edge in self._out.get(edge.src, ()):
                    self._out[edge.src].remove(edge)
                if edge in self._in.get(edge.dst, ()):
                    self._in[edge.dst].remove(edge)
            self._out.pop(node_id, None)
            self._in.pop(node_id, None)
            del self._nodes[node_id]

    # --- lookups ---

    def node(self, node_id: str) -> Node:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise NotFoundError(f"node not found: {node_id}") from None

    def has_node(self, node_id: str) -> bool:
        return node_id in self._nodes

    def require(self, node_id: str, kind: NodeKind) -> Node:
        node = self.node(node_id)
        if node.kind is not kind:
            raise WrongKindError(
                f"node {node_id} is {node.kind.value}, expected {kind.value}"
            )
        return node

    def nodes(self, kind: NodeKind | None = None) -> Iterator[Node]:
        for node in self._nodes.values():
            if kind is None or node.kind is kind:
                yield node

    def out_edges(self, node_id: str, kind: EdgeKind | None = None) -> list[Edge]:
        return [e for e in self._out.get(node_id, ()) if kind is None or e.kind is kind]

    def in_edges(self, node_id: str, kind: EdgeKind | None = None) -> list[Edge]:
        return [e for e in self._in.get(node_id, ()) if kind is None or e.kind is kind]

    def edges(self) -> Iterator[Edge]:
        yield from self._edges.values()

    def edge(self, src: str, dst: str, kind: EdgeKind | str) -> Edge:
        key = (src, dst, EdgeKind(kind).value)
        try:
            return self._edges[key]
        except KeyError:
            raise NotFoundError(f"edge not found: {key}") from None

    # --- asset updates ---

    def set_asset_tier(self, asset_id: str, tier_id: str | None) -> None:
        asset = self.require(asset_id, NodeKind.ASSET)
        if tier_id is not None and tier_id not in self._tiers:
            raise NotFoundError(f"unknown tier: {tier_id}")
        with self._lock:
            asset.tier = tier_id

    def set_asset_status(self, asset_id: str, status_id: str) -> None:
        asset = self.require(asset_id, NodeKind.ASSET)
        if status_id not in self._statuses:
            raise UnknownStatusError(status_id)
        with self._lock:
            asset.compliance_status = status_id

    # --- governance queries ---

    def ownership_gap(self, asset_id: str) -> bool:
        """True iff no Unit owns the asset."""
        self.require(asset_id, NodeKind.ASSET)
        return not self.in_edges(asset_id, EdgeKind.OWNS)

    def affected_assets(self, signal_id: str) -> list[str]:
        """Assets depending on any component the signal affects, sorted by id."""
        self.require(signal_id, NodeKind.SIGNAL)
        assets: set[str] = set()
        for affects in self.out_edges(signal_id, EdgeKind.AFFECTS):
            for dep in self.in_edges(affects.dst, EdgeKind.DEPENDS_ON):
                assets.add(dep.src)
        return sorted(assets)

    def affected_units(self, signal_id: str) -> list[str]:
        """Units owning at least one affected asset, sorted by id."""
        units: set[str] = set()
        for asset_id in self.affected_assets(signal_id):
            for owns in self.in_edges(asset_id, EdgeKind.OWNS):
                units.add(owns.src)
        return sorted(units)

    def governance_metrics(self, signal_id: str) -> GovernanceMetrics:
        assets = self.affected_assets(signal_id)
        units = self.affected_units(signal_id)
        gaps = [a for a in assets if not self.in_edges(a, EdgeKind.OWNS)]
        return GovernanceMetrics(
            asset_count=len(assets), unit_count=len(units), gap_assets=gaps
        )

    # --- integrity ---

    def integrity_audit(self) -> list[str]:
        """Full-graph audit; returns a list of violations (empty when clean)."""
        violations: list[str] = []
        for edge in self._edges.values():
            if edge.src not in self._nodes:
                violations.append(f"edge {edge.key}: missing src node")
                continue
            if edge.dst not in self._nodes:
                violations.append(f"edge {edge.key}: missing dst node")
                continue
            row = (self._nodes[edge.src].kind, edge.kind, self._nodes[edge.dst].kind)
            if row not in TYPING_TABLE:
                violations.append(f"edge {edge.key}: typing violation {row}")
            try:
                self._validate_edge_attrs(edge.kind, edge.attrs)
            except InvalidFieldError as exc:
                violations.append(f"edge {edge.key}: {exc.message}")
        for node in self._nodes.values():
            if isinstance(node, AssetNode):
                if node.tier is not None and node.tier not in self._tiers:
                    violations.append(f"asset {node.id}: undefined tier {node.tier}")
                if node.compliance_status not in self._statuses:
                    violations.append(
                        f"asset {node.id}: undefined status {node.compliance_status}"
                    )
                if not (0.0 <= node.exposure <= 1.0):
                    violations.append(f"asset {node.id}: exposure out of range")
            elif isinstance(node, SignalNode):
                if not (0.0 <= node.severity <= 10.0):
                    violations.append(f"signal {node.id}: severity out of range")
                if not (0.0 <= node.confidence <= 1.0):
                    violations.append(f"signal {node.id}: confidence out of range")
        return violations

    # --- snapshot ---

    def to_snapshot(self) -> dict[str, Any]:
        """Canonical dict form: nodes, edges, tiers, statuses, deterministically sorted."""
        nodes = []
        for node in sorted(self._nodes.values(), key=lambda n: n.id):
            entry: dict[str, Any] = {"id": node.id, "kind": node.kind.value}
            if isinstance(node, (OrgNode, UnitNode, ActorNode)):
                entry.update(name=node.name, attrs=node.attrs)
            elif isinstance(node, AssetNode):
                entry.update(
                    name=node.name,
                    tier=node.tier,
                    compliance_status=node.compliance_status,
                    exposure=node.exposure,
                    critical=node.critical,
                    attrs=node.attrs,
                )
            elif isinstance(node, CompNode):
                entry.update(
                    purl=node.purl,
                    name=node.name,
                    version=node.version,
                    licenses=node.licenses,
                )
            elif isinstance(node, SignalNode):
                entry.update(
                    external_id=node.external_id,
                    severity=node.severity,
                    confidence=node.confidence,
                    description=node.description,
                )
            nodes.append(entry)
        edges = [
            {"src": e.src, "dst": e.dst, "kind": e.kind.value, "attrs": e.attrs}
            for e in sorted(self._edges.values(), key=lambda e: e.key)
        ]
        tiers = [
            {"tier_id": t.tier_id, "name": t.name, "importance": t.importance}
            for t in self.tiers()
        ]
        statuses = [
            {"status_id": s.status_id, "name": s.name, "color_hint": s.color_hint}
            for s in self.statuses()
        ]
        return {"nodes": nodes, "edges": edges, "tiers": tiers, "statuses": statuses}

    @classmethod
    def from_snapshot(cls, data: dict[str, Any]) -> "OrgGraph":
        """Rebuild a graph, re-running every integrity check on the way in."""
        graph = cls()
        for status in data.get("statuses", []):
            sid = status.get("status_id")
            if sid == DEFAULT_STATUS_ID:
                graph._statuses[DEFAULT_STATUS_ID] = StatusDef(
                    DEFAULT_STATUS_ID, status.get("name", "Unreviewed"), status.get("color_hint", "")
                )
            else:
                graph.add_status(StatusDef(sid, status.get("name", ""), status.get("color_hint", "")))
        for tier in data.get("tiers", []):
            graph.add_tier(TierDef(tier["tier_id"], tier.get("name", ""), tier["importance"]))
        for entry in data.get("nodes", []):
            fields = {k: v for k, v in entry.items() if k != "kind"}
            kind = NodeKind(entry["kind"])
            if fields.get("tier") is None:
                fields.pop("tier", None)
            graph.add_node(kind, fields)
        for entry in data.get("edges", []):
            graph.add_edge(entry["src"], entry["dst"], entry["kind"], entry.get("attrs") or {})
        graph._restore_id_seq()
        return graph

    def _restore_id_seq(self) -> None:
        pattern = re.compile(r"^([a-z]+)-(\d+)$")
        prefixes = {k.value.lower(): k for k in NodeKind}
        for node_id in self._nodes:
            m = pattern.match(node_id)
            if m and m.group(1) in prefixes:
                kind = prefixes[m.group(1)]
                self._id_seq[kind] = max(self._id_seq[kind], int(m.group(2)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, OrgGraph):
            return NotImplemented
        return self.to_snapshot() == other.to_snapshot()
