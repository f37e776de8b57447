"""Exception hierarchy for the deptex service.

Every error carries an ``http_status`` used by the REST layer, so raising
a domain error anywhere below the API automatically maps to the right
response code (400 validation, 404 missing, 409 duplicate, 422 policy or
type violations, 503 store unavailable).
"""

from __future__ import annotations


class DeptexError(Exception):
    """Base class for all domain errors."""

    http_status = 400
    code = "error"

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message


# --- graph store ---

class DuplicateIdError(DeptexError):
    http_status = 409
    code = "duplicate_id"


class InvalidFieldError(DeptexError):
    code = "invalid_field"


class TypeViolationError(DeptexError):
    http_status = 422
    code = "type_violation"


class MissingEndpointError(DeptexError):
    code = "missing_endpoint"


class DuplicateEdgeError(DeptexError):
    http_status = 409
    code = "duplicate_edge"


class NotFoundError(DeptexError):
    http_status = 404
    code = "not_found"


class WrongKindError(DeptexError):
    code = "wrong_kind"


# --- ingestion ---

class MalformedDocumentError(DeptexError):
    code = "malformed_document"


class MissingFieldError(DeptexError):
    code = "missing_field"

    def __init__(self, path: str, message: str = ""):
        super().__init__(message or f"missing required field: {path}")
        self.path = path


class InvariantViolationError(DeptexError):
    code = "invariant_violation"


class MalformedRangeError(DeptexError):
    code = "malformed_range"


# --- reachability ---

class UnknownEntryError(DeptexError):
    code = "unknown_entry"


class SliceMismatchError(DeptexError):
    code = "slice_mismatch"


class SchemaViolationError(DeptexError):
    code = "schema_violation"


class TransportFailureError(DeptexError):
    http_status = 503
    code = "transport_failure"


# --- risk ---

class RangeViolationError(DeptexError):
    code = "range_violation"


# --- policy engine ---

class PolicySyntaxError(DeptexError):
    http_status = 400
    code = "syntax_error"

    def __init__(self, line: int, col: int, message: str):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col
        self.detail = message


class PolicyRuntimeError(DeptexError):
    """Type or value error raised while a policy script runs."""

    http_status = 422
    code = "runtime_type_error"

    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col
        self.detail = message


class BudgetExceededError(DeptexError):
    http_status = 422
    code = "budget_exceeded"

    def __init__(self, kind: str, message: str = ""):
        # kind is one of "steps", "http", "time"
        super().__init__(message or f"sandbox budget exceeded: {kind}")
        self.kind = kind


class HttpDeniedError(DeptexError):
    http_status = 422
    code = "http_denied"

    def __init__(self, url: str):
        super().__init__(f"url not in allowlist: {url}")
        self.url = url


class MissingVerdictError(DeptexError):
    http_status = 422
    code = "missing_verdict"


class UnknownStatusError(DeptexError):
    http_status = 422
    code = "unknown_status"

    def __init__(self, target: str):
        super().__init__(f"unknown compliance status: {target}")
        self.target = target


# --- service ---

class UnknownChannelError(DeptexError):
    http_status = 422
    code = "unknown_channel"

    def __init__(self, channel_id: str):
        super().__init__(f"unknown channel: {channel_id}")
        self.channel_id = channel_id


class CorruptSnapshotError(DeptexError):
    http_status = 503
    code = "corrupt_snapshot"

    def __init__(self, reason: str):
        super().__init__(f"snapshot rejected: {reason}")
        self.reason = reason
