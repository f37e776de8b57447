"""Risk scoring: per-asset contributions rolled up to units and the org.

The contribution function is a product of bounded factors, so a zero
severity or a sanitized reachability verdict annihilates the whole term,
and every factor is monotone in the direction governance expects. Unit and
org rollups aggregate with a configurable mode; the leaderboard ranks
signals org-first with deterministic tie-breaking.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping

from .errors import RangeViolationError
from .graph import AssetNode, EdgeKind, NodeKind, OrgGraph, SignalNode

DIRECT_FACTOR = 1.0
INDIRECT_FACTOR = 0.8
SCOPE_FACTORS = {"runtime": 1.0, "dev": 0.3, "test": 0.3}
CRITICAL_FACTOR = 1.25
GAP_FACTOR = 1.25


class AggMode(str, Enum):
    SUM = "sum"
    MAX = "max"
    MEAN = "mean"


def aggregate(values: list[float], mode: AggMode) -> float:
    if not values:
        return 0.0
    if mode is AggMode.SUM:
        return sum(values)
    if mode is AggMode.MAX:
        return max(values)
    return sum(values) / len(values)


@dataclass
class ContribInputs:
    sev: float
    conf: float
    direct: bool
    scope: str
    exposure: float
    critical: bool
    ownership_gap: bool
    tier_importance: float = 1.0
    epd: float | None = None

    def validate(self) -> None:
        if not (0.0 <= self.sev <= 10.0):
            raise RangeViolationError(f"sev out of [0,10]: {self.sev}")
        if not (0.0 <= self.conf <= 1.0):
            raise RangeViolationError(f"conf out of [0,1]: {self.conf}")
        if not (0.0 <= self.exposure <= 1.0):
            raise RangeViolationError(f"exposure out of [0,1]: {self.exposure}")
        if self.scope not in SCOPE_FACTORS:
            raise RangeViolationError(f"unknown scope: {self.scope}")
        if self.tier_importance <= 0:
            raise RangeViolationError(f"tier_importance must be > 0: {self.tier_importance}")
        if self.epd is not None and not (0.0 <= self.epd <= 1.0):
            raise RangeViolationError(f"epd out of [0,1]: {self.epd}")


def contrib(inputs: ContribInputs) -> float:
    """Product-form contribution of one (signal, asset) pair."""
    inputs.validate()
    # reachability evidence replaces the static exposure guess outright
    e_factor = inputs.epd if inputs.epd is not None else inputs.exposure
    return (
        (inputs.sev / 10.0)
        * inputs.conf
        * inputs.tier_importance
        * e_factor
        * (DIRECT_FACTOR if inputs.direct else INDIRECT_FACTOR)
        * SCOPE_FACTORS[inputs.scope]
        * (CRITICAL_FACTOR if inputs.critical else 1.0)
        * (GAP_FACTOR if inputs.ownership_gap else 1.0)
    )


EpdLookup = Mapping[tuple[str, str], float]
TierOverrides = Mapping[str, str | None]


def _effective_dependency(graph: OrgGraph, asset_id: str, comp_ids: set[str]) -> tuple[bool, str]:
    """Worst-case direct/scope across the asset's edges into affected comps."""
    direct = False
    scopes: set[str] = set()
    for edge in graph.out_edges(asset_id, EdgeKind.DEPENDS_ON):
        if edge.dst not in comp_ids:
            continue
        if edge.attrs.get("direct", True):
            direct = True
        scopes.add(edge.attrs.get("scope", "runtime"))
    if "runtime" in scopes:
        scope = "runtime"
    elif "dev" in scopes:
        scope = "dev"
    else:
        scope = "test" if scopes else "runtime"
    return direct, scope


def _tier_importance(
    graph: OrgGraph, asset: AssetNode, overrides: TierOverrides | None
) -> float:
    tier_id = asset.tier
    if overrides is not None and asset.id in overrides:
        tier_id = overrides[asset.id]
    if tier_id is None:
        return 1.0
    return graph.tier(tier_id).importance


def asset_contrib(
    graph: OrgGraph,
    signal_id: str,
    asset_id: str,
    epd_lookup: EpdLookup | None = None,
    tier_overrides: TierOverrides | None = None,
) -> float:
    """Contribution of one asset inside one signal's blast radius."""
    signal = graph.require(signal_id, NodeKind.SIGNAL)
    asset = graph.require(asset_id, NodeKind.ASSET)
    affected_comps = {e.dst for e in graph.out_edges(signal_id, EdgeKind.AFFECTS)}
    direct, scope = _effective_dependency(graph, asset_id, affected_comps)
    epd = None
    if epd_lookup is not None:
        epd = epd_lookup.get((signal_id, asset_id))
    inputs = ContribInputs(
        sev=signal.severity,
        conf=signal.confidence,
        direct=direct,
        scope=scope,
        exposure=asset.exposure,
        critical=asset.critical,
        ownership_gap=graph.ownership_gap(asset_id),
        tier_importance=_tier_importance(graph, asset, tier_overrides),
        epd=epd,
    )
    return contrib(inputs)


def unit_risk(
    graph: OrgGraph,
    signal_id: str,
    unit_id: str,
    mode: AggMode = AggMode.SUM,
    epd_lookup: EpdLookup | None = None,
    tier_overrides: TierOverrides | None = None,
) -> float:
    """Aggregate over assets both owned by the unit and hit by the signal."""
    graph.require(unit_id, NodeKind.UNIT)
    affected = set(graph.affected_assets(signal_id))
    owned = {e.dst for e in graph.out_edges(unit_id, EdgeKind.OWNS)}
    values = [
        asset_contrib(graph, signal_id, a, epd_lookup, tier_overrides)
        for a in sorted(affected & owned)
    ]
    return aggregate(values, mode)


def org_units(graph: OrgGraph, org_id: str | None) -> list[str]:
    if org_id is None:
        return sorted(n.id for n in graph.nodes(NodeKind.UNIT))
    graph.require(org_id, NodeKind.ORG)
    return sorted(e.dst for e in graph.out_edges(org_id, EdgeKind.CONTAINS))


def org_risk(
    graph: OrgGraph,
    signal_id: str,
    mode: AggMode = AggMode.SUM,
    org_id: str | None = None,
    epd_lookup: EpdLookup | None = None,
    tier_overrides: TierOverrides | None = None,
) -> float:
    """Aggregate unit risks; zero-risk units stay in the multiset."""
    values = [
        unit_risk(graph, signal_id, u, mode, epd_lookup, tier_overrides)
        for u in org_units(graph, org_id)
    ]
    return aggregate(values, mode)


@dataclass
class LeaderboardRow:
    signal_id: str
    external_id: str
    org_risk: float
    asset_count: int
    unit_count: int
    gap_count: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "signal_id": self.signal_id,
            "external_id": self.external_id,
            "org_risk": self.org_risk,
            "asset_count": self.asset_count,
            "unit_count": self.unit_count,
            "gap_count": self.gap_count,
        }


def leaderboard(
    graph: OrgGraph,
    org_id: str | None = None,
    mode: AggMode = AggMode.SUM,
    epd_lookup: EpdLookup | None = None,
    tier_overrides: TierOverrides | None = None,
) -> list[LeaderboardRow]:
    """Every signal ranked org-first; zero scores are listed, never dropped.

    Descending org_risk, ties by asset_count descending, then external_id
    ascending.
    """
    rows = []
    for signal in graph.nodes(NodeKind.SIGNAL):
        assert isinstance(signal, SignalNode)
        metrics = graph.governance_metrics(signal.id)
        rows.append(
            LeaderboardRow(
                signal_id=signal.id,
                external_id=signal.external_id,
                org_risk=org_risk(graph, signal.id, mode, org_id, epd_lookup, tier_overrides),
                asset_count=metrics.asset_count,
                unit_count=metrics.unit_count,
                gap_count=len(metrics.gap_assets),
            )
        )
    rows.sort(key=lambda r: (-r.org_risk, -r.asset_count, r.external_id))
    return rows


CSV_COLUMNS = ["external_id", "org_risk", "asset_count", "unit_count", "gap_count"]


def leaderboard_csv(rows: list[LeaderboardRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow(
            [row.external_id, row.org_risk, row.asset_count, row.unit_count, row.gap_count]
        )
    return buf.getvalue()


def leaderboard_json(rows: list[LeaderboardRow]) -> list[dict[str, Any]]:
    return [row.to_dict() for row in rows]
