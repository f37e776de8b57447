"""SBOM parsing and graph reconciliation.

Consumes a CycloneDX-subset JSON layout: ``components[].purl``, ``.name``,
``.version``, ``.licenses[].license.id``, plus extension properties
``deptex:direct``, ``deptex:scope`` and ``deptex:depth``. Unknown fields are
ignored so real-world documents pass through. The full layout, including the
defaults applied when extension properties are absent, is documented in
docs/formats.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .errors import (
    InvariantViolationError,
    MalformedDocumentError,
    MissingFieldError,
)
from .graph import EdgeKind, NodeKind, OrgGraph

SCOPES = ("runtime", "dev", "test")


def split_purl(purl: str) -> tuple[str, str]:
    """Split a package-url into (base, version).

    The version is the part after the last '@' that follows the 'pkg:' head;
    qualifiers and subpath are cut first. 'pkg:npm/@scope/name@1.2.3' keeps
    its scope '@' intact.
    """
    head = purl.split("?", 1)[0].split("#", 1)[0]
    body = head[4:] if head.startswith("pkg:") else head
    at = body.rfind("@")
    if at <= 0:
        return head, ""
    prefix = head[: len(head) - (len(body) - at)]
    return prefix, body[at + 1 :]


@dataclass
class ComponentSpec:
    """One dependency row from an SBOM."""

    purl: str
    name: str = ""
    version: str = ""
    licenses: list[str] = field(default_factory=list)
    direct: bool = True
    scope: str = "runtime"
    depth: int = 1

    @property
    def base_purl(self) -> str:
        return split_purl(self.purl)[0]

    def edge_attrs(self) -> dict[str, Any]:
        return {"direct": self.direct, "scope": self.scope, "depth": self.depth}


@dataclass
class SbomDocument:
    asset_ref: str = ""
    components: list[ComponentSpec] = field(default_factory=list)


def _component_properties(raw: dict[str, Any]) -> dict[str, str]:
    props: dict[str, str] = {}
    for entry in raw.get("properties") or []:
        if isinstance(entry, dict) and "name" in entry:
            props[str(entry["name"])] = str(entry.get("value", ""))
    return props


def _parse_component(raw: Any, index: int) -> ComponentSpec:
    path = f"components[{index}]"
    if not isinstance(raw, dict):
        raise MalformedDocumentError(f"{path} must be an object")
    purl = raw.get("purl")
    if purl is None:
        raise MissingFieldError(f"{path}.purl")
    if not isinstance(purl, str) or not purl:
        raise InvariantViolationError(f"{path}.purl must be a non-empty string")

    licenses: list[str] = []
    for li, lic in enumerate(raw.get("licenses") or []):
        if isinstance(lic, dict):
            inner = lic.get("license")
            if isinstance(inner, dict) and "id" in inner:
                licenses.append(str(inner["id"]))

    props = _component_properties(raw)
    direct_raw = props.get("deptex:direct")
    depth_raw = props.get("deptex:depth")

    if direct_raw is None and depth_raw is None:
        direct, depth = True, 1
    elif direct_raw is None:
        depth = _parse_depth(depth_raw, path)
        direct = depth == 1
    else:
        if direct_raw not in ("true", "false"):
            raise InvariantViolationError(
                f"{path}: deptex:direct must be 'true' or 'false', got {direct_raw!r}"
            )
        direct = direct_raw == "true"
        if depth_raw is None:
            depth = 1 if direct else 2
        else:
            depth = _parse_depth(depth_raw, path)

    if (depth == 1) != direct:
        raise InvariantViolationError(
            f"{path}: direct={str(direct).lower()} inconsistent with depth={depth}"
        )

    scope = props.get("deptex:scope", "runtime")
    if scope not in SCOPES:
        raise InvariantViolationError(f"{path}: unknown deptex:scope {scope!r}")

    version = str(raw.get("version", "")) or split_purl(purl)[1]
    return ComponentSpec(
        purl=purl,
        name=str(raw.get("name", "")),
        version=version,
        licenses=licenses,
        direct=direct,
        scope=scope,
        depth=depth,
    )


def _parse_depth(raw: str, path: str) -> int:
    try:
        depth = int(raw)
    except (TypeError, ValueError):
        raise InvariantViolationError(f"{path}: deptex:depth must be an integer") from None
    if depth < 1:
        raise InvariantViolationError(f"{path}: deptex:depth must be >= 1, got {depth}")
    return depth


def parse_sbom(data: bytes | str) -> SbomDocument:
    """Parse a CycloneDX-subset document; raises on structural violations."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedDocumentError(f"document is not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedDocumentError(f"document is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocumentError("top-level value must be an object")

    asset_ref = ""
    meta = doc.get("metadata")
    if isinstance(meta, dict):
        comp = meta.get("component")
        if isinstance(comp, dict):
            asset_ref = str(comp.get("name", ""))

    raw_components = doc.get("components", [])
    if not isinstance(raw_components, list):
        raise MalformedDocumentError("components must be a list")

    components = [_parse_component(c, i) for i, c in enumerate(raw_components)]
    seen: set[str] = set()
    for i, comp in enumerate(components):
        if comp.purl in seen:
            raise InvariantViolationError(
                f"components[{i}]: duplicate purl {comp.purl}"
            )
        seen.add(comp.purl)
    return SbomDocument(asset_ref=asset_ref, components=components)


def serialize_sbom(doc: SbomDocument) -> str:
    """Render back to the subset layout; parse(serialize(parse(x))) is stable."""
    out: dict[str, Any] = {"bomFormat": "CycloneDX", "specVersion": "1.5"}
    if doc.asset_ref:
        out["metadata"] = {"component": {"name": doc.asset_ref}}
    comps = []
    for c in doc.components:
        entry: dict[str, Any] = {"purl": c.purl, "name": c.name, "version": c.version}
        if c.licenses:
            entry["licenses"] = [{"license": {"id": lid}} for lid in c.licenses]
        entry["properties"] = [
            {"name": "deptex:direct", "value": "true" if c.direct else "false"},
            {"name": "deptex:scope", "value": c.scope},
            {"name": "deptex:depth", "value": str(c.depth)},
        ]
        comps.append(entry)
    out["components"] = comps
    return json.dumps(out, indent=2)


def apply_sbom(graph: OrgGraph, asset_id: str, doc: SbomDocument) -> dict[str, int]:
    """Reconcile the asset's depends_on edges to mirror the document.

    Components are created on demand, keyed by full purl; components no
    longer referenced keep their node (signals may still point at them) but
    lose the edge. Returns {"added": n, "removed": m}.
    """
    graph.require(asset_id, NodeKind.ASSET)

    purl_to_comp = {
        node.purl: node.id for node in graph.nodes(NodeKind.COMP)
    }
    existing = {
        graph.node(e.dst).purl: e for e in graph.out_edges(asset_id, EdgeKind.DEPENDS_ON)
    }
    desired = {c.purl: c for c in doc.components}

    removed = 0
    for purl, edge in existing.items():
        if purl not in desired:
            graph.delete_edge(edge.src, edge.dst, edge.kind)
            removed += 1

    added = 0
    for purl, comp in desired.items():
        if purl in existing:
            existing[purl].attrs.update(comp.edge_attrs())
            continue
        comp_id = purl_to_comp.get(purl)
        if comp_id is None:
            comp_id = graph.add_node(
                NodeKind.COMP,
                {
                    "purl": comp.purl,
                    "name": comp.name,
                    "version": comp.version,
                    "licenses": comp.licenses,
                },
            )
            purl_to_comp[purl] = comp_id
        graph.add_edge(asset_id, comp_id, EdgeKind.DEPENDS_ON, comp.edge_attrs())
        added += 1
    return {"added": added, "removed": removed}


def dependency_delta(old: SbomDocument, new: SbomDocument) -> dict[str, list]:
    """Diff two documents by base purl.

    Same base purl with a different version counts as upgraded, not as an
    add/remove pair.
    """
    old_by_base = {c.base_purl: c for c in old.components}
    new_by_base = {c.base_purl: c for c in new.components}

    added = [new_by_base[b] for b in sorted(set(new_by_base) - set(old_by_base))]
    removed = [old_by_base[b] for b in sorted(set(old_by_base) - set(new_by_base))]
    upgraded = []
    for base in sorted(set(old_by_base) & set(new_by_base)):
        before, after = old_by_base[base], new_by_base[base]
        if before.version != after.version:
            upgraded.append(
                {
                    "purl": base,
                    "name": after.name or before.name,
                    "from_version": before.version,
                    "to_version": after.version,
                }
            )
    return {"added": added, "removed": removed, "upgraded": upgraded}
