"""Budgeted PolicyLang interpreter.

Evaluation is strict and deterministic: conditions must be booleans,
arithmetic wants numbers, member access wants the key to exist. Every
statement execution costs one step against the budget, wall-clock time is
checked alongside, and HTTP goes through an injectable transport guarded
by an allowlist and a call cap. Scripts cannot touch the graph; their only
effect is the returned outcome.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol

import httpx

from ..errors import (
    BudgetExceededError,
    HttpDeniedError,
    InvalidFieldError,
    MissingVerdictError,
    PolicyRuntimeError,
)
from .contexts import (
    CONTEXT_ACTIONS,
    NotificationOutcome,
    Outcome,
    PolicyCheckOutcome,
    PrOutcome,
    StatusOutcome,
)
from .parser import (
    Binary,
    Call,
    Expr,
    ExprStmt,
    ForStmt,
    Identifier,
    IfStmt,
    Index,
    LetStmt,
    ListLiteral,
    Literal,
    Member,
    Node,
    Program,
    RecordLiteral,
    Stmt,
    Unary,
)

logger = logging.getLogger(__name__)

TRACE_CAP = 1000

HOST_FUNCTIONS = ("http_get", "http_post", "regex_match", "len", "log")

# transport(method, url, body_json_or_none) -> response text
Transport = Callable[[str, str, Any], str]


@dataclass
class SandboxBudget:
    max_steps: int = 100_000
    max_http_calls: int = 2
    timeout_ms: int = 5_000
    http_allowlist: list[str] = field(default_factory=list)

    def validate(self) -> None:
        for name in ("max_steps", "max_http_calls", "timeout_ms"):
            if getattr(self, name) <= 0:
                raise InvalidFieldError(f"{name} must be positive")


def default_transport(method: str, url: str, body: Any, timeout_s: float) -> str:
    response = httpx.request(
        method, url, json=body if method == "POST" else None, timeout=timeout_s
    )
    return response.text


class ScriptLike(Protocol):
    policy_id: str
    context: str
    compiled: Program


class _Terminate(Exception):
    """Internal: an action ended the script early."""


def _type_name(value: Any) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "string"
    if isinstance(value, list):
        return "list"
    if isinstance(value, dict):
        return "record"
    return type(value).__name__


def _equals(a: Any, b: Any) -> bool:
    # booleans never equal numbers, despite Python's arithmetic view
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    if isinstance(a, (int, float)) and isinstance(b, (int, float)):
        return a == b
    if type(a) is not type(b) and not (a is None and b is None):
        return False
    return a == b


class _Interp:
    def __init__(
        self,
        context: str,
        binding: dict[str, Any],
        budget: SandboxBudget,
        transport: Transport | None,
        record_trace: bool,
    ):
        self.context = context
        self.scopes: list[dict[str, Any]] = [dict(binding)]
        self.budget = budget
        self.transport = transport
        self.record_trace = record_trace
        self.steps = 0
        self.http_calls = 0
        self.deadline = time.monotonic() + budget.timeout_ms / 1000.0
        self.trace: list[dict[str, Any]] = []
        self.http_log: list[dict[str, Any]] = []
        self.logs: list[str] = []
        # outcome accumulators
        self.status = StatusOutcome()
        self.check = PolicyCheckOutcome()
        self.pr: PrOutcome | None = None
        self.notification = NotificationOutcome()

    # --- bookkeeping ---

    def tick(self, node: Node) -> None:
        self.steps += 1
        if self.steps > self.budget.max_steps:
            raise BudgetExceededError("steps")
        if time.monotonic() > self.deadline:
            raise BudgetExceededError("time")

    def add_trace(self, node: Node, kind: str, values: dict[str, Any]) -> None:
        if self.record_trace and len(self.trace) < TRACE_CAP:
            self.trace.append(
                {
                    "step": self.steps,
                    "statement": f"{kind} (line {node.line})",
                    "values": values,
                }
            )

    def fail(self, node: Node, message: str) -> PolicyRuntimeError:
        return PolicyRuntimeError(message, line=node.line, col=node.col)

    # --- scoping ---

    def lookup(self, node: Identifier) -> Any:
        for scope in reversed(self.scopes):
            if node.name in scope:
                return scope[node.name]
        raise self.fail(node, f"unknown identifier {node.name!r}")

    def define(self, name: str, value: Any) -> None:
        self.scopes[-1][name] = value

    # --- statements ---

    def run(self, program: Program) -> None:
        self.exec_block(program.body, new_scope=False)

    def exec_block(self, body: list[Stmt], new_scope: bool = True) -> None:
        if new_scope:
            self.scopes.append({})
        try:
            for stmt in body:
                self.exec_stmt(stmt)
        finally:
            if new_scope:
                self.scopes.pop()

    def exec_stmt(self, stmt: Stmt) -> None:
        self.tick(stmt)
        if isinstance(stmt, LetStmt):
            value = self.eval(stmt.value)
            self.define(stmt.name, value)
            self.add_trace(stmt, f"let {stmt.name}", {stmt.name: value})
            return
        if isinstance(stmt, IfStmt):
            condition = self.eval(stmt.condition)
            if not isinstance(condition, bool):
                raise self.fail(
                    stmt.condition,
                    f"if condition must be boolean, got {_type_name(condition)}",
                )
            self.add_trace(stmt, "if", {"condition": condition})
            self.exec_block(stmt.then_body if condition else stmt.else_body)
            return
        if isinstance(stmt, ForStmt):
            iterable = self.eval(stmt.iterable)
            if not isinstance(iterable, list):
                raise self.fail(
                    stmt.iterable, f"for expects a list, got {_type_name(iterable)}"
                )
            self.add_trace(stmt, f"for {stmt.var}", {"length": len(iterable)})
            for item in iterable:
                self.tick(stmt)
                self.scopes.append({stmt.var: item})
                try:
                    for inner in stmt.body:
                        self.exec_stmt(inner)
                finally:
                    self.scopes.pop()
            return
        # expression statement: bare action, action call, or host call
        expr = stmt.expr
        if isinstance(expr, Identifier) and expr.name in CONTEXT_ACTIONS.get(self.context, ()):
            self.add_trace(stmt, f"action {expr.name}", {})
            self.invoke_action(expr, expr.name, [])
            return
        if isinstance(expr, Call) and expr.name in CONTEXT_ACTIONS.get(self.context, ()):
            args = [self.eval(a) for a in expr.args]
            self.add_trace(stmt, f"action {expr.name}", {"args": args})
            self.invoke_action(expr, expr.name, args)
            return
        if isinstance(expr, (Identifier, Call)) and self._known_action_name(expr):
            name = expr.name
            raise self.fail(
                expr, f"action {name!r} is not available in {self.context} context"
            )
        value = self.eval(expr)
        self.add_trace(stmt, "expr", {"value": value})

    @staticmethod
    def _known_action_name(expr: Identifier | Call) -> bool:
        all_actions = {a for actions in CONTEXT_ACTIONS.values() for a in actions}
        return expr.name in all_actions

    # --- actions ---

    def invoke_action(self, node: Node, name: str, args: list[Any]) -> None:
        if name == "transition":
            if len(args) != 1 or not isinstance(args[0], str):
                raise self.fail(node, "transition expects one string argument")
            self.status.transition_to = args[0]
            raise _Terminate()
        if name == "violation":
            if len(args) != 1 or not isinstance(args[0], str):
                raise self.fail(node, "violation expects one string argument")
            self.check.violations.append(args[0])
            self.check.passed = False
            return
        if name == "allow":
            if args:
                raise self.fail(node, "allow takes no arguments")
            self.pr = PrOutcome(decision="allow", comment="")
            raise _Terminate()
        if name == "block":
            if len(args) > 1 or (args and not isinstance(args[0], str)):
                raise self.fail(node, "block takes at most one string argument")
            self.pr = PrOutcome(decision="block", comment=args[0] if args else "")
            raise _Terminate()
        if name == "notify":
            if len(args) != 2 or not isinstance(args[0], str):
                raise self.fail(node, "notify expects (channel_id, payload)")
            self.notification.dispatches.append(
                {"channel_id": args[0], "payload": args[1]}
            )
            return
        raise self.fail(node, f"unknown action {name!r}")

    # --- host functions ---

    def call_host(self, node: Call, args: list[Any]) -> Any:
        name = node.name
        if name == "len":
            if len(args) != 1 or not isinstance(args[0], (str, list, dict)):
                raise self.fail(node, "len expects one string, list or record")
            return len(args[0])
        if name == "regex_match":
            if len(args) != 2 or not all(isinstance(a, str) for a in args):
                raise self.fail(node, "regex_match expects (pattern, string)")
            try:
                return re.search(args[0], args[1]) is not None
            except re.error as exc:
                raise self.fail(node, f"invalid regex: {exc}") from None
        if name == "log":
            if len(args) != 1:
                raise self.fail(node, "log expects one argument")
            rendered = args[0] if isinstance(args[0], str) else json.dumps(args[0])
            self.logs.append(rendered)
            return None
        if name == "http_get":
            if len(args) != 1 or not isinstance(args[0], str):
                raise self.fail(node, "http_get expects one URL string")
            return self.http(node, "GET", args[0], None)
        if name == "http_post":
            if len(args) != 2 or not isinstance(args[0], str):
                raise self.fail(node, "http_post expects (url, body)")
            return self.http(node, "POST", args[0], args[1])
        raise self.fail(node, f"unknown function {name!r}")

    def http(self, node: Node, method: str, url: str, body: Any) -> Any:
        if not any(url.startswith(prefix) for prefix in self.budget.http_allowlist):
            raise HttpDeniedError(url)
        if self.http_calls >= self.budget.max_http_calls:
            raise BudgetExceededError("http")
        self.http_calls += 1
        remaining = max(0.05, self.deadline - time.monotonic())
        try:
            if self.transport is not None:
                text = self.transport(method, url, body)
            else:
                text = default_transport(method, url, body, remaining)
        except (HttpDeniedError, BudgetExceededError):
            raise
        except Exception as exc:
            raise self.fail(node, f"http request failed: {exc}") from None
        try:
            value = json.loads(text)
        except (json.JSONDecodeError, TypeError):
            value = {"raw": text}
        self.http_log.append({"method": method, "url": url, "body": body, "response": value})
        return value

    # --- expressions ---

    def eval(self, expr: Expr) -> Any:
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, Identifier):
            return self.lookup(expr)
        if isinstance(expr, ListLiteral):
            return [self.eval(item) for item in expr.items]
        if isinstance(expr, RecordLiteral):
            return {key: self.eval(value) for key, value in expr.entries}
        if isinstance(expr, Member):
            obj = self.eval(expr.obj)
            if not isinstance(obj, dict):
                raise self.fail(
                    expr, f"member access on {_type_name(obj)}, expected record"
                )
            if expr.attr not in obj:
                raise self.fail(expr, f"record has no field {expr.attr!r}")
            return obj[expr.attr]
        if isinstance(expr, Index):
            return self.eval_index(expr)
        if isinstance(expr, Unary):
            return self.eval_unary(expr)
        if isinstance(expr, Binary):
            return self.eval_binary(expr)
        if isinstance(expr, Call):
            if expr.name in HOST_FUNCTIONS:
                args = [self.eval(a) for a in expr.args]
                return self.call_host(expr, args)
            all_actions = {a for actions in CONTEXT_ACTIONS.values() for a in actions}
            if expr.name in all_actions:
                raise self.fail(expr, f"action {expr.name!r} cannot be used in an expression")
            raise self.fail(expr, f"unknown function {expr.name!r}")
        raise self.fail(expr, f"cannot evaluate {type(expr).__name__}")

    def eval_index(self, expr: Index) -> Any:
        obj = self.eval(expr.obj)
        key = self.eval(expr.index)
        if isinstance(obj, list):
            if not isinstance(key, int) or isinstance(key, bool):
                raise self.fail(expr, f"list index must be an integer, got {_type_name(key)}")
            if not (0 <= key < len(obj)):
                raise self.fail(expr, f"list index {key} out of range (length {len(obj)})")
            return obj[key]
        if isinstance(obj, dict):
            if not isinstance(key, str):
                raise self.fail(expr, f"record index must be a string, got {_type_name(key)}")
            if key not in obj:
                raise self.fail(expr, f"record has no field {key!r}")
            return obj[key]
        raise self.fail(expr, f"cannot index into {_type_name(obj)}")

    def eval_unary(self, expr: Unary) -> Any:
        value = self.eval(expr.operand)
        if expr.op == "not":
            if not isinstance(value, bool):
                raise self.fail(expr, f"not expects a boolean, got {_type_name(value)}")
            return not value
        # unary minus
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise self.fail(expr, f"unary - expects a number, got {_type_name(value)}")
        return -value

    def eval_binary(self, expr: Binary) -> Any:
        op = expr.op
        if op == "and":
            left = self.eval(expr.left)
            if not isinstance(left, bool):
                raise self.fail(expr, f"and expects booleans, got {_type_name(left)}")
            if not left:
                return False
            right = self.eval(expr.right)
            if not isinstance(right, bool):
                raise self.fail(expr, f"and expects booleans, got {_type_name(right)}")
            return right
        if op == "or":
            left = self.eval(expr.left)
            if not isinstance(left, bool):
                raise self.fail(expr, f"or expects booleans, got {_type_name(left)}")
            if left:
                return True
            right = self.eval(expr.right)
            if not isinstance(right, bool):
                raise self.fail(expr, f"or expects booleans, got {_type_name(right)}")
            return right

        left = self.eval(expr.left)
        right = self.eval(expr.right)
        if op == "==":
            return _equals(left, right)
        if op == "!=":
            return not _equals(left, right)
        if op == "in":
            if isinstance(right, list):
                return any(_equals(left, item) for item in right)
            if isinstance(right, str):
                if not isinstance(left, str):
                    raise self.fail(
                        expr, f"substring test needs a string, got {_type_name(left)}"
                    )
                return left in right
            if isinstance(right, dict):
                if not isinstance(left, str):
                    raise self.fail(
                        expr, f"record membership needs a string key, got {_type_name(left)}"
                    )
                return left in right
            raise self.fail(expr, f"in expects a list, string or record, got {_type_name(right)}")
        if op in ("<", "<=", ">", ">="):
            both_numbers = (
                isinstance(left, (int, float))
                and isinstance(right, (int, float))
                and not isinstance(left, bool)
                and not isinstance(right, bool)
            )
            both_strings = isinstance(left, str) and isinstance(right, str)
            if not (both_numbers or both_strings):
                raise self.fail(
                    expr,
                    f"cannot order {_type_name(left)} and {_type_name(right)}",
                )
            if op == "<":
                return left < right
            if op == "<=":
                return left <= right
            if op == ">":
                return left > right
            return left >= right
        if op == "+":
            if isinstance(left, str) and isinstance(right, str):
                return left + right
            if (
                isinstance(left, (int, float))
                and isinstance(right, (int, float))
                and not isinstance(left, bool)
                and not isinstance(right, bool)
            ):
                return left + right
            raise self.fail(
                expr, f"+ expects two numbers or two strings, got "
                f"{_type_name(left)} and {_type_name(right)}"
            )
        if op in ("-", "*", "/"):
            for side in (left, right):
                if isinstance(side, bool) or not isinstance(side, (int, float)):
                    raise self.fail(
                        expr, f"{op} expects numbers, got {_type_name(side)}"
                    )
            if op == "-":
                return left - right
            if op == "*":
                return left * right
            if right == 0:
                raise self.fail(expr, "division by zero")
            return left / right
        raise self.fail(expr, f"unknown operator {op!r}")

    def outcome(self) -> Outcome:
        if self.context == "status":
            return self.status
        if self.context == "policy":
            return self.check
        if self.context == "pr":
            if self.pr is None:
                raise MissingVerdictError()
            return self.pr
        return self.notification


def _run(
    script: ScriptLike,
    binding: dict[str, Any],
    budget: SandboxBudget | None,
    transport: Transport | None,
    record_trace: bool,
) -> _Interp:
    budget = budget or SandboxBudget()
    budget.validate()
    interp = _Interp(script.context, binding, budget, transport, record_trace)
    try:
        interp.run(script.compiled)
    except _Terminate:
        pass
    return interp


def evaluate(
    script: ScriptLike,
    binding: dict[str, Any],
    budget: SandboxBudget | None = None,
    transport: Transport | None = None,
) -> Outcome:
    """Run a script against a binding and return its context outcome."""
    interp = _run(script, binding, budget, transport, record_trace=False)
    for message in interp.logs:
        logger.info("policy %s: %s", getattr(script, "policy_id", "?"), message)
    return interp.outcome()


@dataclass
class DryRunResult:
    outcome: Outcome
    trace: list[dict[str, Any]]
    http_log: list[dict[str, Any]]
    logs: list[str]

    def to_dict(self) -> dict[str, Any]:
        return {
            "outcome": self.outcome.to_dict(),
            "trace": self.trace,
            "http_log": self.http_log,
            "logs": self.logs,
        }


def dry_run(
    script: ScriptLike,
    binding: dict[str, Any],
    budget: SandboxBudget | None = None,
    transport: Transport | None = None,
) -> DryRunResult:
    """Evaluate with full tracing; same outcome as evaluate, capped trace.

    Budget and runtime errors surface exactly as in evaluate; the partial
    trace up to the failure rides along on the error as `partial_trace`.
    """
    budget = budget or SandboxBudget()
    budget.validate()
    interp = _Interp(script.context, binding, budget, transport, record_trace=True)
    try:
        interp.run(script.compiled)
    except _Terminate:
        pass
    except (BudgetExceededError, HttpDeniedError, PolicyRuntimeError) as exc:
        exc.partial_trace = interp.trace
        raise
    return DryRunResult(
        outcome=interp.outcome(),
        trace=interp.trace,
        http_log=interp.http_log,
        logs=interp.logs,
    )
