"""Webhook channels and dispatch delivery with retry.

A notification policy emits ``notify(channel, payload)`` dispatches.  Each
dispatch becomes one HTTP POST to the channel endpoint.  The posted body is a
JSON envelope:

* ``event`` and ``signal`` always come from the triggering context.
* if the payload is a record, its keys are merged into the envelope (this is
  how scripts supply ``asset``, ``depscore`` and ``tier``);
* any other payload value lands under a ``payload`` key.

When the channel has a secret, the body bytes are signed with HMAC-SHA256 and
the hex digest travels in the ``X-Deptex-Signature`` header.

Failed deliveries retry up to three times with 1s/2s/4s backoff.  A dispatch
to a channel nobody registered is recorded as failed, never raised out of the
delivery loop.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from ..errors import InvalidFieldError, UnknownChannelError

logger = logging.getLogger(__name__)

# 1 initial attempt + MAX_RETRIES retries, sleeping BACKOFF_S[i] before retry i.
MAX_RETRIES = 3
BACKOFF_S = (1.0, 2.0, 4.0)

SIGNATURE_HEADER = "X-Deptex-Signature"

CHANNEL_KINDS = ("webhook",)


@dataclass
class ChannelDef:
    """A named delivery target for notification dispatches."""

    channel_id: str
    endpoint: str
    kind: str = "webhook"
    secret: str = ""
    description: str = ""

    def validate(self) -> None:
        if not self.channel_id or not isinstance(self.channel_id, str):
            raise InvalidFieldError("channel_id must be a non-empty string")
        if self.kind not in CHANNEL_KINDS:
            raise InvalidFieldError(
                f"channel kind must be one of {sorted(CHANNEL_KINDS)}, got {self.kind!r}"
            )
        if not isinstance(self.endpoint, str) or not (
            self.endpoint.startswith("http://") or self.endpoint.startswith("https://")
        ):
            raise InvalidFieldError("channel endpoint must be an http(s) URL")
        if not isinstance(self.secret, str):
            raise InvalidFieldError("channel secret must be a string")

    def to_dict(self) -> dict:
        return {
            "channel_id": self.channel_id,
            "endpoint": self.endpoint,
            "kind": self.kind,
            "secret": self.secret,
            "description": self.description,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ChannelDef":
        chan = cls(
            channel_id=data.get("channel_id", ""),
            endpoint=data.get("endpoint", ""),
            kind=data.get("kind", "webhook"),
            secret=data.get("secret", ""),
            description=data.get("description", ""),
        )
        chan.validate()
        return chan


@dataclass
class Dispatch:
    """One pending notification: channel name plus script payload."""

    channel_id: str
    payload: Any
    event: str = ""
    signal: str = ""


@dataclass
class DeliveryReport:
    """Outcome of delivering one dispatch."""

    channel_id: str
    status: str  # delivered | failed | unknown_channel
    attempts: int = 0
    error: str = ""
    endpoint: str = ""

    def to_dict(self) -> dict:
        return {
            "channel_id": self.channel_id,
            "status": self.status,
            "attempts": self.attempts,
            "error": self.error,
            "endpoint": self.endpoint,
        }


def sign_body(secret: str, body: bytes) -> str:
    return hmac.new(secret.encode("utf-8"), body, hashlib.sha256).hexdigest()


def envelope_body(dispatch: Dispatch) -> bytes:
    body: dict = {"event": dispatch.event, "signal": dispatch.signal}
    if isinstance(dispatch.payload, dict):
        for key, value in dispatch.payload.items():
            body[key] = value
    else:
        body["payload"] = dispatch.payload
    return json.dumps(body, ensure_ascii=False).encode("utf-8")


def _default_transport(url: str, body: bytes, headers: dict) -> int:
    import httpx

    resp = httpx.post(url, content=body, headers=headers, timeout=10.0)
    return resp.status_code


@dataclass
class Dispatcher:
    """Delivers dispatches to registered channels with bounded retry.

    ``transport`` and ``sleep`` are injectable so tests can run without a
    network or a clock.  ``deliver`` is synchronous; ``deliver_background``
    runs the same loop on a daemon thread so callers do not wait out the
    backoff schedule, reporting through ``on_report`` when finished.
    """

    channels: Callable[[], dict]
    transport: Callable[[str, bytes, dict], int] = field(default=_default_transport)
    sleep: Callable[[float], None] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.sleep is None:
            import time

            self.sleep = time.sleep

    def _deliver_one(self, dispatch: Dispatch) -> DeliveryReport:
        registry = self.channels()
        try:
            channel = registry[dispatch.channel_id]
        except KeyError:
            exc = UnknownChannelError(dispatch.channel_id)
            logger.warning("dispatch dropped: %s", exc.message)
            return DeliveryReport(
                channel_id=dispatch.channel_id,
                status="unknown_channel",
                error=exc.message,
            )
        body = envelope_body(dispatch)
        headers = {"Content-Type": "application/json"}
        if channel.secret:
            headers[SIGNATURE_HEADER] = sign_body(channel.secret, body)
        attempts = 0
        last_error = ""
        while attempts <= MAX_RETRIES:
            if attempts > 0:
                self.sleep(BACKOFF_S[attempts - 1])
            attempts += 1
            try:
                status = self.transport(channel.endpoint, body, headers)
            except Exception as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                logger.warning(
                    "dispatch to %s attempt %d failed: %s",
                    dispatch.channel_id,
                    attempts,
                    last_error,
                )
                continue
            if 200 <= status < 300:
                return DeliveryReport(
                    channel_id=dispatch.channel_id,
                    status="delivered",
                    attempts=attempts,
                    endpoint=channel.endpoint,
                )
            last_error = f"http status {status}"
            logger.warning(
                "dispatch to %s attempt %d failed: %s",
                dispatch.channel_id,
                attempts,
                last_error,
            )
        return DeliveryReport(
            channel_id=dispatch.channel_id,
            status="failed",
            attempts=attempts,
            error=last_error,
            endpoint=channel.endpoint,
        )

    def deliver(self, dispatches: list) -> list:
        return [self._deliver_one(d) for d in dispatches]

    def deliver_background(
        self,
        dispatches: list,
        on_report: Optional[Callable[[list], None]] = None,
    ) -> threading.Thread:
        def worker() -> None:
            reports = self.deliver(dispatches)
            if on_report is not None:
                try:
                    on_report(reports)
                except Exception:
                    logger.exception("dispatch report callback failed")

        thread = threading.Thread(target=worker, daemon=True)
        thread.start()
        return thread
