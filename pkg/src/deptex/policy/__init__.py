"""Bounded policy DSL: parser, sandboxed interpreter and context plumbing."""

from .contexts import (
    NotificationOutcome,
    PolicyCheckOutcome,
    PrOutcome,
    StatusOutcome,
)
from .engine import PolicyScript, parse_policy_file, run_status_policies
from .interpreter import DryRunResult, SandboxBudget, dry_run, evaluate
from .parser import parse_policy

__all__ = [
    "DryRunResult",
    "NotificationOutcome",
    "PolicyCheckOutcome",
    "PolicyScript",
    "PrOutcome",
    "SandboxBudget",
    "StatusOutcome",
    "dry_run",
    "evaluate",
    "parse_policy",
    "parse_policy_file",
    "run_status_policies",
]
