"""Shipment tracking: registrations, event ingestion, and pass scheduling.

Shipments are tracked by <bol, containerNo>. A "container loaded on truck"
event makes each linked <PO, lineItem> eligible for pass 1 once PO, DA, and
CI are all present; "container dispatched from truck" marks the shipment
delivered and makes pass 2 (then PA generation) eligible once the RA
arrives. Scheduling is exactly-once per <PO, lineItem> regardless of event
duplication or reordering, and pass 2 never precedes pass 1.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .errors import DocValidationError, NotFoundError

logger = logging.getLogger(__name__)

EVENT_LOADED = "container loaded on truck"
EVENT_DISPATCHED = "container dispatched from truck"
EVENT_PACKED = "container packed"


class ActionKind(str, Enum):
    PASS1 = "PASS1"
    PASS2 = "PASS2"
    COMPUTE_PAS = "COMPUTE_PAS"


@dataclass(frozen=True)
class ScheduledAction:
    kind: ActionKind
    po_id: str
    line_item_id: str


@dataclass
class TrackingEvent:
    event_id: str
    bol: str
    container_no: str
    event_type: str
    occurred_at: float
    payload: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "TrackingEvent":
        for f in ("eventId", "bol", "containerNo", "eventType", "occurredAt"):
            if f not in data:
                raise DocValidationError(f, "missing event field")
        return cls(
            event_id=data["eventId"],
            bol=data["bol"],
            container_no=data["containerNo"],
            event_type=data["eventType"],
            occurred_at=data["occurredAt"],
            payload=data.get("payload", {}),
        )

    def to_dict(self) -> dict:
        return {
            "eventId": self.event_id,
            "bol": self.bol,
            "containerNo": self.container_no,
            "eventType": self.event_type,
            "occurredAt": self.occurred_at,
            "payload": self.payload,
        }


@dataclass
class ShipmentRegistration:
    bol: str
    container_no: str
    po_refs: tuple[tuple[str, str], ...]
    status: str = "TRACKED"


@dataclass
class _LineItemProgress:
    loaded: bool = False
    delivered: bool = False
    pass1_scheduled: bool = False
    pass2_scheduled: bool = False
    pas_scheduled: bool = False


class EventProcessor:
    """Tracks shipments of interest and schedules invoice-processing work.

    `has_document(kind, po_id, li)` reports document availability on the
    ledger; `persist_event(args)` submits the putEvent transaction.
    """

    def __init__(
        self,
        has_document: Callable[[str, str, str], bool],
        persist_event: Callable[[dict], Optional[str]],
    ):
        self._has_document = has_document
        self._persist_event = persist_event
        self.registrations: dict[tuple[str, str], ShipmentRegistration] = {}
        self._seen_events: set[str] = set()
        self._progress: dict[tuple[str, str], _LineItemProgress] = {}
        self.packed_by: dict[tuple[str, str], str] = {}
        self.pending_actions: list[ScheduledAction] = []

    def register_shipment(
        self, bol: str, container_no: str, po_refs: list[tuple[str, str]]
    ) -> ShipmentRegistration:
        key = (bol, container_no)
        if key in self.registrations:
            return self.registrations[key]  # idempotent
        for po_id, li in po_refs:
            if not self._has_document("PO", po_id, li):
                raise NotFoundError(f"unknown PO {po_id!r} for shipment registration")
        reg = ShipmentRegistration(bol, container_no, tuple((p, l) for p, l in po_refs))
        self.registrations[key] = reg
        for ref in reg.po_refs:
            self._progress.setdefault(ref, _LineItemProgress())
        self._persist_event(
            {"action": "REGISTER", "bol": bol, "containerNo": container_no, "poRefs": list(po_refs)}
        )
        return reg

    def ingest_event(self, event: TrackingEvent) -> list[ScheduledAction]:
        """Persist the event and return any newly scheduled actions."""
        if event.event_id in self._seen_events:
            return []
        self._seen_events.add(event.event_id)
        self._persist_event({"event": event.to_dict()})

        reg = self.registrations.get((event.bol, event.container_no))
        if reg is None:
            return []  # stored, but not a shipment of interest

        scheduled: list[ScheduledAction] = []
        for ref in reg.po_refs:
            progress = self._progress[ref]
            if event.event_type == EVENT_LOADED:
                progress.loaded = True
            elif event.event_type == EVENT_DISPATCHED:
                progress.delivered = True
                reg.status = "DELIVERED"
            elif event.event_type == EVENT_PACKED:
                self.packed_by[ref] = event.payload.get("packedBy", "SUPPLIER")
            scheduled.extend(self._evaluate(ref))
        self.pending_actions.extend(scheduled)
        return scheduled

    def document_arrived(self, po_id: str, line_item_id: str) -> list[ScheduledAction]:
        """Re-check deferred passes when an EDI document lands."""
        ref = (po_id, line_item_id)
        if ref not in self._progress:
            return []
        scheduled = self._evaluate(ref)
        self.pending_actions.extend(scheduled)
        return scheduled

    def _evaluate(self, ref: tuple[str, str]) -> list[ScheduledAction]:
        po_id, li = ref
        progress = self._progress[ref]
        actions = []
        docs_ready = self._has_document("DA", po_id, li) and self._has_document("CI", po_id, li)
        if progress.loaded and not progress.pass1_scheduled and docs_ready:
            progress.pass1_scheduled = True
            actions.append(ScheduledAction(ActionKind.PASS1, po_id, li))
        if (
            progress.delivered
            and progress.pass1_scheduled
            and not progress.pass2_scheduled
            and self._has_document("RA", po_id, li)
        ):
            progress.pass2_scheduled = True
            actions.append(ScheduledAction(ActionKind.PASS2, po_id, li))
            if not progress.pas_scheduled:
                progress.pas_scheduled = True
                actions.append(ScheduledAction(ActionKind.COMPUTE_PAS, po_id, li))
        return actions

    def take_actions(self, kinds: set[ActionKind]) -> list[ScheduledAction]:
        """Drain pending actions of the given kinds (cron consumption)."""
        taken = [a for a in self.pending_actions if a.kind in kinds]
        self.pending_actions = [a for a in self.pending_actions if a.kind not in kinds]
        return taken
