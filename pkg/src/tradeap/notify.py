"""Trigger subscriptions and notification delivery (webhook or log).

Webhook delivery is at-least-once with a dedup token; failures are retried
and then dead-lettered without ever blocking the pipeline.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

from .edi import canonical_json
from .errors import DocValidationError

logger = logging.getLogger(__name__)

TRIGGERS = {
    "CA_ISSUED",
    "PA_ISSUED",
    "DISPUTE_RAISED",
    "DISPUTE_RESOLVED",
    "AUTO_APPROVED",
    "FINALIZED",
}


@dataclass(frozen=True)
class Channel:
    kind: str  # WEBHOOK | LOG
    url: Optional[str] = None


@dataclass
class NotificationSubscription:
    subscription_id: str
    user_id: str
    org_id: str
    triggers: frozenset[str]
    channel: Channel


@dataclass
class Delivery:
    subscription_id: str
    trigger: str
    payload: dict
    dedup_token: str
    attempts: int = 0
    delivered: bool = False


class Notifier:
    """Fans committed triggers out to matching subscriptions.

    `transport(url, payload)` posts one webhook; it is injectable so tests
    never touch the network. The default transport uses httpx.
    """

    def __init__(self, transport: Optional[Callable[[str, dict], None]] = None, max_retries: int = 3):
        self._transport = transport or _httpx_transport
        self.max_retries = max_retries
        self.subscriptions: dict[str, NotificationSubscription] = {}
        self.log: list[Delivery] = []
        self.dead_letters: list[Delivery] = []
        self._seq = itertools.count(1)
        self._seen_tokens: set[str] = set()

    def subscribe(self, user_id: str, org_id: str, triggers: list[str], channel: Channel) -> str:
        if not triggers:
            raise DocValidationError("triggers", "must be non-empty")
        unknown = set(triggers) - TRIGGERS
        if unknown:
            raise DocValidationError("triggers", f"unknown trigger {sorted(unknown)[0]!r}")
        sub_id = f"sub{next(self._seq):05d}"
        self.subscriptions[sub_id] = NotificationSubscription(
            sub_id, user_id, org_id, frozenset(triggers), channel
        )
        return sub_id

    def notify(self, trigger_event: dict) -> list[Delivery]:
        """One delivery per matching subscription for a committed trigger."""
        trigger = trigger_event["trigger"]
        scope_orgs = set(trigger_event.get("orgs", ()))
        deliveries = []
        for sub in self.subscriptions.values():
            if trigger not in sub.triggers or sub.org_id not in scope_orgs:
                continue
            token = hashlib.sha256(
                canonical_json({"sub": sub.subscription_id, "event": trigger_event})
            ).hexdigest()
            delivery = Delivery(sub.subscription_id, trigger, trigger_event, token)
            if token in self._seen_tokens:
                continue  # already delivered this event to this subscription
            self._seen_tokens.add(token)
            self._dispatch(sub, delivery)
            deliveries.append(delivery)
        return deliveries

    def _dispatch(self, sub: NotificationSubscription, delivery: Delivery) -> None:
        if sub.channel.kind == "LOG":
            delivery.attempts = 1
            delivery.delivered = True
            self.log.append(delivery)
            logger.info("notification %s -> %s: %s", delivery.trigger, sub.user_id, delivery.payload)
            return
        for _ in range(self.max_retries):
            delivery.attempts += 1
            try:
                self._transport(sub.channel.url, delivery.payload)
                delivery.delivered = True
                self.log.append(delivery)
                return
            except Exception:  # noqa: BLE001 - delivery must never block the pipeline
                logger.warning("webhook delivery failed (attempt %d)", delivery.attempts)
        self.dead_letters.append(delivery)


def _httpx_transport(url: str, payload: dict) -> None:
    import httpx

    httpx.post(url, json=payload, timeout=5.0).raise_for_status()
