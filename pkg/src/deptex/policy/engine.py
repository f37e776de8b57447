"""Stored policies and the status transition runner."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from typing import Any, Callable

from ..errors import (
    BudgetExceededError,
    HttpDeniedError,
    InvalidFieldError,
    PolicyRuntimeError,
)
from ..graph import NodeKind, OrgGraph
from .contexts import CONTEXTS, StatusOutcome, build_status_binding
from .interpreter import SandboxBudget, Transport, evaluate
from .parser import Program, parse_policy

logger = logging.getLogger(__name__)

_HEADER_RE = re.compile(r"^#\s*context:\s*(\w+)\s*$")


@dataclass
class PolicyScript:
    """A stored, pre-compiled script bound to one evaluation context."""

    policy_id: str
    context: str
    source: str
    compiled: Program

    @classmethod
    def create(cls, policy_id: str, context: str, source: str) -> "PolicyScript":
        if not policy_id:
            raise InvalidFieldError("policy_id must be non-empty")
        if context not in CONTEXTS:
            raise InvalidFieldError(
                f"unknown policy context {context!r}; expected one of {', '.join(CONTEXTS)}"
            )
        compiled = parse_policy(source)  # rejects broken scripts before storage
        return cls(policy_id=policy_id, context=context, source=source, compiled=compiled)

    def to_dict(self) -> dict[str, Any]:
        return {"policy_id": self.policy_id, "context": self.context, "source": self.source}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "PolicyScript":
        return cls.create(data["policy_id"], data["context"], data["source"])


def parse_policy_file(text: str) -> tuple[str, str]:
    """Split a .dpx file into (context, source).

    The first non-blank line must be a `#context: <name>` header; the header
    line stays part of the source (it is a comment).
    """
    for line in text.splitlines():
        if not line.strip():
            continue
        match = _HEADER_RE.match(line.strip())
        if not match:
            raise InvalidFieldError(
                "policy file must start with a '#context: <name>' header"
            )
        context = match.group(1)
        if context not in CONTEXTS:
            raise InvalidFieldError(f"unknown policy context {context!r}")
        return context, text
    raise InvalidFieldError("policy file is empty")


AuditFn = Callable[[dict[str, Any]], None]


def run_status_policies(
    graph: OrgGraph,
    policies: list[PolicyScript],
    asset_id: str,
    depscores: dict[tuple[str, str], int] | None = None,
    budget: SandboxBudget | None = None,
    transport: Transport | None = None,
    audit: AuditFn | None = None,
) -> list[dict[str, Any]]:
    """Evaluate all status policies against one asset, in policy_id order.

    Every evaluation is audited; only the first non-neutral transition is
    applied. A policy that errors is recorded and skipped so one broken
    script cannot stall ingestion. Returns the applied transitions (at most
    one).
    """
    graph.require(asset_id, NodeKind.ASSET)
    binding = build_status_binding(graph, asset_id, depscores)
    decisions: list[tuple[str, str]] = []
    for script in sorted(
        (p for p in policies if p.context == "status"), key=lambda p: p.policy_id
    ):
        entry: dict[str, Any] = {
            "event": "status_policy_evaluated",
            "policy_id": script.policy_id,
            "asset_id": asset_id,
        }
        try:
            outcome = evaluate(script, binding, budget, transport)
            assert isinstance(outcome, StatusOutcome)
            entry["transition_to"] = outcome.transition_to
            if outcome.transition_to is not None:
                decisions.append((script.policy_id, outcome.transition_to))
        except (PolicyRuntimeError, BudgetExceededError, HttpDeniedError) as exc:
            logger.warning(
                "status policy %s failed on %s: %s", script.policy_id, asset_id, exc.message
            )
            entry["error"] = exc.message
        if audit is not None:
            audit(entry)

    applied: list[dict[str, Any]] = []
    if decisions:
        policy_id, target = decisions[0]
        asset = graph.node(asset_id)
        previous = asset.compliance_status
        if target != previous:
            graph.set_asset_status(asset_id, target)  # raises UnknownStatus
            record = {
                "event": "status_transition",
                "policy_id": policy_id,
                "asset_id": asset_id,
                "from": previous,
                "to": target,
            }
            applied.append(record)
            if audit is not None:
                audit(record)
    return applied
