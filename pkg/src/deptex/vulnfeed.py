"""Vulnerability feed parsing and matching against stored components.

Consumes an OSV-subset JSON layout: ``id``, ``severity[].score``,
``affected[].package.purl`` and ``affected[].ranges[].events[]`` with
``introduced``/``fixed`` markers. A version v is inside a range when
introduced <= v < fixed; an absent bound is open on that side.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Any

from .errors import MalformedDocumentError, MalformedRangeError, MissingFieldError
from .graph import EdgeKind, NodeKind, OrgGraph, SignalNode
from .sbom import split_purl
from .versions import compare_versions

logger = logging.getLogger(__name__)


@dataclass
class VersionRange:
    """Half-open interval [introduced, fixed) over version strings."""

    introduced: str | None = None
    fixed: str | None = None

    def validate(self) -> None:
        if self.introduced is None and self.fixed is None:
            raise MalformedRangeError("range has neither introduced nor fixed event")
        if self.introduced is not None and self.fixed is not None:
            if self.introduced != "0" and compare_versions(self.introduced, self.fixed) >= 0:
                raise MalformedRangeError(
                    f"introduced {self.introduced} not below fixed {self.fixed}"
                )

    def contains(self, version: str) -> bool:
        if not version:
            return False
        # "0" is the conventional open lower bound
        if self.introduced is not None and self.introduced != "0":
            if compare_versions(version, self.introduced) < 0:
                return False
        if self.fixed is not None:
            if compare_versions(version, self.fixed) >= 0:
                return False
        return True


@dataclass
class AffectedPackage:
    purl: str
    ranges: list[VersionRange] = field(default_factory=list)

    @property
    def base_purl(self) -> str:
        return split_purl(self.purl)[0]

    def matches_version(self, version: str) -> bool:
        if not self.ranges:
            # purl carrying its own version pins an exact match
            pinned = split_purl(self.purl)[1]
            if pinned:
                return bool(version) and compare_versions(version, pinned) == 0
            return True
        return any(r.contains(version) for r in self.ranges)


@dataclass
class VulnFeedEntry:
    external_id: str
    severity: float = 0.0
    confidence: float = 1.0
    description: str = ""
    affected: list[AffectedPackage] = field(default_factory=list)


def _parse_severity(raw: Any, path: str) -> float:
    best = 0.0
    for entry in raw or []:
        if not isinstance(entry, dict) or "score" not in entry:
            continue
        try:
            score = float(entry["score"])
        except (TypeError, ValueError):
            raise MalformedDocumentError(f"{path}: severity score is not numeric") from None
        if not (0.0 <= score <= 10.0):
            raise MalformedDocumentError(f"{path}: severity score {score} out of [0,10]")
        best = max(best, score)
    return best


def _parse_ranges(raw: Any, path: str) -> list[VersionRange]:
    ranges: list[VersionRange] = []
    for ri, rng in enumerate(raw or []):
        if not isinstance(rng, dict):
            raise MalformedRangeError(f"{path}.ranges[{ri}] must be an object")
        introduced: str | None = None
        fixed: str | None = None
        for event in rng.get("events") or []:
            if not isinstance(event, dict):
                raise MalformedRangeError(f"{path}.ranges[{ri}]: event must be an object")
            if "introduced" in event:
                if introduced is not None:
                    raise MalformedRangeError(
                        f"{path}.ranges[{ri}]: multiple introduced events"
                    )
                introduced = str(event["introduced"])
            if "fixed" in event:
                if fixed is not None:
                    raise MalformedRangeError(f"{path}.ranges[{ri}]: multiple fixed events")
                fixed = str(event["fixed"])
        version_range = VersionRange(introduced=introduced, fixed=fixed)
        version_range.validate()
        ranges.append(version_range)
    return ranges


def _parse_entry(raw: Any, index: int) -> VulnFeedEntry:
    path = f"entries[{index}]"
    if not isinstance(raw, dict):
        raise MalformedDocumentError(f"{path} must be an object")
    external_id = raw.get("id")
    if external_id is None:
        raise MissingFieldError(f"{path}.id")
    if not isinstance(external_id, str) or not external_id:
        raise MalformedDocumentError(f"{path}.id must be a non-empty string")

    affected: list[AffectedPackage] = []
    for ai, pkg in enumerate(raw.get("affected") or []):
        pkg_path = f"{path}.affected[{ai}]"
        if not isinstance(pkg, dict):
            raise MalformedDocumentError(f"{pkg_path} must be an object")
        package = pkg.get("package")
        if not isinstance(package, dict) or not package.get("purl"):
            raise MissingFieldError(f"{pkg_path}.package.purl")
        affected.append(
            AffectedPackage(
                purl=str(package["purl"]),
                ranges=_parse_ranges(pkg.get("ranges"), pkg_path),
            )
        )
    if not affected:
        raise MalformedRangeError(f"{path}: no affected packages")

    confidence = raw.get("confidence", 1.0)
    if not isinstance(confidence, (int, float)) or isinstance(confidence, bool):
        raise MalformedDocumentError(f"{path}: confidence must be numeric")
    if not (0.0 <= confidence <= 1.0):
        raise MalformedDocumentError(f"{path}: confidence {confidence} out of [0,1]")

    description = str(raw.get("summary") or raw.get("details") or "")
    return VulnFeedEntry(
        external_id=external_id,
        severity=_parse_severity(raw.get("severity"), path),
        confidence=float(confidence),
        description=description,
        affected=affected,
    )


def parse_feed(data: bytes | str) -> list[VulnFeedEntry]:
    """Parse an OSV-subset feed: a JSON array or {"vulns": [...]}."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocumentError(f"feed is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedDocumentError(f"feed is not valid JSON: {exc}") from None
    if isinstance(doc, dict):
        doc = doc.get("vulns", [])
    if not isinstance(doc, list):
        raise MalformedDocumentError("feed must be a list or an object with a vulns list")
    return [_parse_entry(e, i) for i, e in enumerate(doc)]


@dataclass
class MatchResult:
    signal_id: str
    external_id: str
    comp_ids: list[str]


def match_vulnerabilities(graph: OrgGraph, entries: list[VulnFeedEntry]) -> list[MatchResult]:
    """Create or update Signal nodes for entries that hit a stored component.

    Matching is by base purl plus version-range membership. Entries hitting
    nothing are skipped entirely. Re-ingesting the same feed is idempotent:
    signals are keyed by external_id and affects edges are not duplicated.
    """
    by_external: dict[str, SignalNode] = {
        node.external_id: node for node in graph.nodes(NodeKind.SIGNAL)
    }
    comps = list(graph.nodes(NodeKind.COMP))

    results: list[MatchResult] = []
    for entry in entries:
        hit_ids: list[str] = []
        for comp in comps:
            base, purl_version = split_purl(comp.purl)
            version = comp.version or purl_version
            for pkg in entry.affected:
                if pkg.base_purl == base and pkg.matches_version(version):
                    hit_ids.append(comp.id)
                    break
        if not hit_ids:
            logger.debug("feed entry %s matched no components", entry.external_id)
            continue

        existing = by_external.get(entry.external_id)
        if existing is None:
            signal_id = graph.add_node(
                NodeKind.SIGNAL,
                {
                    "external_id": entry.external_id,
                    "severity": entry.severity,
                    "confidence": entry.confidence,
                    "description": entry.description,
                },
            )
            by_external[entry.external_id] = graph.node(signal_id)
        else:
            signal_id = existing.id
            existing.severity = entry.severity
            existing.confidence = entry.confidence
            if entry.description:
                existing.description = entry.description

        already = {e.dst for e in graph.out_edges(signal_id, EdgeKind.AFFECTS)}
        for comp_id in hit_ids:
            if comp_id not in already:
                graph.add_edge(signal_id, comp_id, EdgeKind.AFFECTS)
        results.append(
            MatchResult(signal_id=signal_id, external_id=entry.external_id, comp_ids=sorted(hit_ids))
        )
    return results
