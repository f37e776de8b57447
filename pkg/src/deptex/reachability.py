"""Reachability analysis: slice reports, entry verification and decay scoring.

A slice report is a pre-extracted call/dataflow subgraph connecting an
asset's entry points to a vulnerable sink. Scoring walks three phases:
depth (shortest hop count), verification (entry weight plus sanitizer
coverage, rule-based or delegated to an external endpoint), then the decay
product w_entry * alpha^d. Sanitized paths score exactly 0.0, never merely
small.
"""

from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable

import httpx

from .errors import (
    InvalidFieldError,
    InvariantViolationError,
    MalformedDocumentError,
    MissingFieldError,
    SchemaViolationError,
    SliceMismatchError,
    TransportFailureError,
    UnknownEntryError,
)
from .graph import SignalNode

logger = logging.getLogger(__name__)

ENTRY_KINDS = ("public_http", "authenticated_http", "internal_rpc", "cli", "background_job")

# public_http and background_job anchor the scale; the middle rungs are
# interpolated by design choice.
DEFAULT_ENTRY_WEIGHTS: dict[str, float] = {
    "public_http": 1.0,
    "authenticated_http": 0.6,
    "internal_rpc": 0.4,
    "cli": 0.25,
    "background_job": 0.1,
}

# entry kinds missing from the weight table count as fully exposed
CONSERVATIVE_WEIGHT = 1.0

DEFAULT_ALPHA = 0.85
VERIFIER_TIMEOUT_S = 10.0


@dataclass
class EpdParams:
    alpha: float = DEFAULT_ALPHA
    entry_weight_table: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_ENTRY_WEIGHTS)
    )

    def validate(self) -> None:
        if not (0.0 < self.alpha <= 1.0):
            raise InvalidFieldError(f"alpha must be in (0, 1], got {self.alpha}")
        for kind, w in self.entry_weight_table.items():
            if not (0.0 <= w <= 1.0):
                raise InvalidFieldError(f"entry weight for {kind} out of [0, 1]: {w}")

    def weight_for(self, entry_kind: str | None) -> float:
        if entry_kind is None:
            return CONSERVATIVE_WEIGHT
        return self.entry_weight_table.get(entry_kind, CONSERVATIVE_WEIGHT)


@dataclass
class SliceFunction:
    fn_id: str
    name: str = ""
    file: str = ""
    entry_kind: str | None = None
    sanitizer: bool = False
    snippet: str = ""


@dataclass
class SliceEdge:
    src: str
    dst: str
    kind: str = "call"


@dataclass
class SliceReport:
    asset_ref: str
    signal_ref: str
    functions: list[SliceFunction] = field(default_factory=list)
    edges: list[SliceEdge] = field(default_factory=list)
    entry_points: list[str] = field(default_factory=list)
    sink: str = ""

    def function(self, fn_id: str) -> SliceFunction:
        for fn in self.functions:
            if fn.fn_id == fn_id:
                return fn
        raise UnknownEntryError(f"function not declared in slice: {fn_id}")

    def validate(self) -> None:
        declared = {fn.fn_id for fn in self.functions}
        if len(declared) != len(self.functions):
            raise InvariantViolationError("duplicate fn_id in slice functions")
        if not self.entry_points:
            raise InvariantViolationError("slice has no entry points")
        if self.sink not in declared:
            raise InvariantViolationError(f"sink {self.sink} not declared in functions")
        for ep in self.entry_points:
            if ep not in declared:
                raise InvariantViolationError(f"entry point {ep} not declared in functions")
        for edge in self.edges:
            if edge.src not in declared or edge.dst not in declared:
                raise InvariantViolationError(
                    f"edge {edge.src}->{edge.dst} references undeclared function"
                )
            if edge.kind not in ("call", "dataflow"):
                raise InvariantViolationError(f"unknown edge kind {edge.kind}")

    def adjacency(self, exclude: set[str] | None = None) -> dict[str, list[str]]:
        exclude = exclude or set()
        adj: dict[str, list[str]] = {fn.fn_id: [] for fn in self.functions}
        for edge in self.edges:
            if edge.src in exclude or edge.dst in exclude:
                continue
            adj[edge.src].append(edge.dst)
        return adj


def parse_slice(data: bytes | str | dict[str, Any]) -> SliceReport:
    """Parse and validate one slice interchange document."""
    if isinstance(data, (bytes, str)):
        if isinstance(data, bytes):
            try:
                data = data.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise MalformedDocumentError(f"slice is not UTF-8: {exc}") from None
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise MalformedDocumentError(f"slice is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise MalformedDocumentError("slice must be a JSON object")

    for key in ("asset_ref", "signal_ref", "entry_points", "sink"):
        if key not in data:
            raise MissingFieldError(key)

    functions = []
    for i, raw in enumerate(data.get("functions") or []):
        if not isinstance(raw, dict) or "fn_id" not in raw:
            raise MissingFieldError(f"functions[{i}].fn_id")
        entry_kind = raw.get("entry_kind")
        if entry_kind is not None and entry_kind not in ENTRY_KINDS:
            raise InvariantViolationError(
                f"functions[{i}]: unknown entry_kind {entry_kind!r}"
            )
        functions.append(
            SliceFunction(
                fn_id=str(raw["fn_id"]),
                name=str(raw.get("name", "")),
                file=str(raw.get("file", "")),
                entry_kind=entry_kind,
                sanitizer=bool(raw.get("sanitizer", False)),
                snippet=str(raw.get("snippet", "")),
            )
        )

    edges = []
    for i, raw in enumerate(data.get("edges") or []):
        if not isinstance(raw, dict) or "from" not in raw or "to" not in raw:
            raise MissingFieldError(f"edges[{i}].from/to")
        edges.append(
            SliceEdge(
                src=str(raw["from"]),
                dst=str(raw["to"]),
                kind=str(raw.get("kind", "call")),
            )
        )

    report = SliceReport(
        asset_ref=str(data["asset_ref"]),
        signal_ref=str(data["signal_ref"]),
        functions=functions,
        edges=edges,
        entry_points=[str(e) for e in data["entry_points"]],
        sink=str(data["sink"]),
    )
    report.validate()
    return report


def serialize_slice(report: SliceReport) -> str:
    return json.dumps(
        {
            "asset_ref": report.asset_ref,
            "signal_ref": report.signal_ref,
            "functions": [
                {
                    "fn_id": f.fn_id,
                    "name": f.name,
                    "file": f.file,
                    "entry_kind": f.entry_kind,
                    "sanitizer": f.sanitizer,
                    "snippet": f.snippet,
                }
                for f in report.functions
            ],
            "edges": [{"from": e.src, "to": e.dst, "kind": e.kind} for e in report.edges],
            "entry_points": report.entry_points,
            "sink": report.sink,
        },
        indent=2,
    )


@dataclass
class VerifierVerdict:
    w_entry: float
    is_sanitized: bool
    rationale: str = ""


def _bfs_depth(adj: dict[str, list[str]], start: str, goal: str) -> int | None:
    if start == goal:
        return 0
    seen = {start}
    queue = deque([(start, 0)])
    while queue:
        node, depth = queue.popleft()
        for nxt in adj.get(node, ()):
            if nxt == goal:
                return depth + 1
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, depth + 1))
    return None


def path_depth(slice_report: SliceReport, entry: str) -> int | None:
    """Shortest hop count from entry to the sink; None when unreachable."""
    if entry not in slice_report.entry_points:
        raise UnknownEntryError(f"not an entry point of this slice: {entry}")
    return _bfs_depth(slice_report.adjacency(), entry, slice_report.sink)


def rule_based_verify(
    slice_report: SliceReport, entry: str, params: EpdParams | None = None
) -> VerifierVerdict:
    """Deterministic verdict from declared slice facts alone.

    is_sanitized holds only when every shortest entry->sink path crosses a
    sanitizer function (endpoints included). Partial coverage does not
    neutralize. An unreachable sink yields is_sanitized=false; callers skip
    unreachable entries before the verdict matters.
    """
    params = params or EpdParams()
    if entry not in slice_report.entry_points:
        raise UnknownEntryError(f"not an entry point of this slice: {entry}")
    fn = slice_report.function(entry)
    w_entry = params.weight_for(fn.entry_kind)
    kind_note = fn.entry_kind if fn.entry_kind else "unknown (conservative weight)"

    full_depth = _bfs_depth(slice_report.adjacency(), entry, slice_report.sink)
    if full_depth is None:
        return VerifierVerdict(
            w_entry=w_entry,
            is_sanitized=False,
            rationale=f"entry kind {kind_note}; sink unreachable from entry",
        )

    sanitizers = {f.fn_id for f in slice_report.functions if f.sanitizer}
    if entry in sanitizers or slice_report.sink in sanitizers:
        # an endpoint sanitizer sits on every path by construction
        return VerifierVerdict(
            w_entry=w_entry,
            is_sanitized=True,
            rationale=f"entry kind {kind_note}; endpoint function sanitizes all paths",
        )

    # A sanitizer-free shortest path exists iff the shortest distance is
    # unchanged after deleting all sanitizer nodes.
    stripped_depth = _bfs_depth(
        slice_report.adjacency(exclude=sanitizers), entry, slice_report.sink
    )
    is_sanitized = stripped_depth is None or stripped_depth > full_depth
    detail = (
        "every shortest path crosses a sanitizer"
        if is_sanitized
        else "at least one shortest path avoids all sanitizers"
    )
    return VerifierVerdict(
        w_entry=w_entry,
        is_sanitized=is_sanitized,
        rationale=f"entry kind {kind_note}; {detail}",
    )


def _validate_verifier_response(payload: Any) -> VerifierVerdict:
    if not isinstance(payload, dict):
        raise SchemaViolationError("verifier response must be a JSON object")
    expected = {"w_entry", "is_sanitized", "rationale"}
    if set(payload) != expected:
        raise SchemaViolationError(
            f"verifier response keys {sorted(payload)} != {sorted(expected)}"
        )
    w_entry = payload["w_entry"]
    if isinstance(w_entry, bool) or not isinstance(w_entry, (int, float)):
        raise SchemaViolationError("w_entry must be a number")
    if not (0.0 <= w_entry <= 1.0):
        raise SchemaViolationError(f"w_entry {w_entry} out of [0, 1]")
    if not isinstance(payload["is_sanitized"], bool):
        raise SchemaViolationError("is_sanitized must be a boolean")
    if not isinstance(payload["rationale"], str):
        raise SchemaViolationError("rationale must be a string")
    return VerifierVerdict(
        w_entry=float(w_entry),
        is_sanitized=payload["is_sanitized"],
        rationale=payload["rationale"],
    )


def external_verify(
    slice_report: SliceReport,
    entry: str,
    endpoint: str,
    params: EpdParams | None = None,
    timeout: float = VERIFIER_TIMEOUT_S,
    client: httpx.Client | None = None,
) -> VerifierVerdict:
    """Delegate the verdict to an external endpoint, falling back locally.

    Transport failures and schema violations both degrade to
    rule_based_verify with a logged warning; scoring never hard-fails on a
    flaky verifier.
    """
    params = params or EpdParams()
    if entry not in slice_report.entry_points:
        raise UnknownEntryError(f"not an entry point of this slice: {entry}")
    fn = slice_report.function(entry)
    request = {
        "snippets": [
            {"fn_id": f.fn_id, "name": f.name, "snippet": f.snippet}
            for f in slice_report.functions
        ],
        "entry": {"fn_id": fn.fn_id, "entry_kind": fn.entry_kind},
        "sink": {"fn_id": slice_report.sink},
    }
    try:
        try:
            if client is not None:
                response = client.post(endpoint, json=request, timeout=timeout)
            else:
                response = httpx.post(endpoint, json=request, timeout=timeout)
        except httpx.HTTPError as exc:
            raise TransportFailureError(f"verifier transport failure: {exc}") from None
        if response.status_code != 200:
            raise TransportFailureError(
                f"verifier returned HTTP {response.status_code}"
            )
        try:
            payload = response.json()
        except ValueError:
            raise SchemaViolationError("verifier response is not JSON") from None
        return _validate_verifier_response(payload)
    except (TransportFailureError, SchemaViolationError) as exc:
        logger.warning(
            "external verifier failed (%s); using rule-based verdict", exc.message
        )
        fallback = rule_based_verify(slice_report, entry, params)
        fallback.rationale = f"fallback after verifier failure: {fallback.rationale}"
        return fallback


def compute_epd(d: int, verdict: VerifierVerdict, params: EpdParams | None = None) -> float:
    """Decay product w_entry * alpha^d; sanitized verdicts pin it to 0.0."""
    params = params or EpdParams()
    if d < 0:
        raise InvalidFieldError(f"depth must be >= 0, got {d}")
    if verdict.is_sanitized:
        return 0.0
    return verdict.w_entry * params.alpha**d


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass
class DepscoreResult:
    d: int
    entry_point: str
    w_entry: float
    is_sanitized: bool
    epd: float
    depscore: int
    rationale: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "d": self.d,
            "entry_point": self.entry_point,
            "w_entry": self.w_entry,
            "is_sanitized": self.is_sanitized,
            "epd": self.epd,
            "depscore": self.depscore,
            "rationale": self.rationale,
        }


VerifyFn = Callable[[SliceReport, str], VerifierVerdict]


def depscore(
    signal: SignalNode,
    slice_report: SliceReport,
    params: EpdParams | None = None,
    verify: VerifyFn | None = None,
) -> DepscoreResult:
    """Score one (signal, slice) pair by its dominant entry point.

    Each reachable entry gets (depth, verdict, epd); the maximal epd wins,
    first-declared entry breaking ties. Unreachable entries are skipped;
    when nothing reaches the sink the score is 0.
    """
    params = params or EpdParams()
    params.validate()
    if slice_report.signal_ref != signal.id:
        raise SliceMismatchError(
            f"slice is for signal {slice_report.signal_ref}, not {signal.id}"
        )
    if verify is None:
        verify = lambda s, e: rule_based_verify(s, e, params)

    best: DepscoreResult | None = None
    reachable = 0
    for entry in slice_report.entry_points:
        d = path_depth(slice_report, entry)
        if d is None:
            continue
        reachable += 1
        verdict = verify(slice_report, entry)
        epd = compute_epd(d, verdict, params)
        candidate = DepscoreResult(
            d=d,
            entry_point=entry,
            w_entry=verdict.w_entry,
            is_sanitized=verdict.is_sanitized,
            epd=epd,
            depscore=0,
            rationale=verdict.rationale,
        )
        if best is None or candidate.epd > best.epd:
            best = candidate

    if best is None:
        return DepscoreResult(
            d=0,
            entry_point="",
            w_entry=0.0,
            is_sanitized=False,
            epd=0.0,
            depscore=0,
            rationale="no entry point reaches the sink",
        )

    best.depscore = round_half_up(100.0 * (signal.severity / 10.0) * best.epd)
    best.rationale = (
        f"dominant entry {best.entry_point} at depth {best.d} "
        f"({reachable}/{len(slice_report.entry_points)} entries reachable); {best.rationale}"
    )
    return best
