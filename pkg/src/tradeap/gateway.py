"""Goods processor: REST gateway, role-based access, cron jobs, read cache.

All mutations go through ledger transactions; the gateway drains the
pipeline synchronously after each submission so REST responses reflect
committed state. Committed transaction results carry notification triggers
which the gateway fans out through the notifier after commit (never during
endorsement, which may re-execute).
"""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Optional

from . import contracts
from .claims import CAPass, ClaimAdvice, ClaimCategory, matching_report
from .edi import DocumentKind, document_from_dict
from .errors import (
    AccessError,
    ContractError,
    DocValidationError,
    NotFoundError,
    TradeApError,
)
from .events import ActionKind, EventProcessor, TrackingEvent
from .ledger import Ledger, NetworkTopology, Validity, single_dc_topology
from .lifecycle import aggregate_ca_state, AdviceState
from .notify import Channel, Notifier

logger = logging.getLogger(__name__)


class Role(str, Enum):
    SHIPPER_AP = "SHIPPER_AP"
    SHIPPER_RECEIVING = "SHIPPER_RECEIVING"
    SUPPLIER_AR = "SUPPLIER_AR"
    CARRIER_AR = "CARRIER_AR"
    ADMIN = "ADMIN"


@dataclass(frozen=True)
class UserAccount:
    user_id: str
    org_id: str
    role: Role
    api_key: str


# Which roles may submit which document kinds.
SUBMIT_MATRIX: dict[str, frozenset[Role]] = {
    "PO": frozenset({Role.SHIPPER_AP, Role.ADMIN}),
    "RA": frozenset({Role.SHIPPER_RECEIVING, Role.ADMIN}),
    "DA": frozenset({Role.SUPPLIER_AR, Role.ADMIN}),
    "CI": frozenset({Role.SUPPLIER_AR, Role.ADMIN}),
    "CARRIER_INVOICE": frozenset({Role.CARRIER_AR, Role.ADMIN}),
}

FINALIZE_ROLES = frozenset({Role.SHIPPER_AP, Role.ADMIN})


@dataclass
class GatewayConfig:
    topology: Optional[NetworkTopology] = None
    block_size: int = 100
    block_timeout: float = 0.5
    auto_approve_waiting_period: float = 7 * 86400.0
    claim_cron_interval: float = 30.0
    pa_cron_interval: float = 30.0
    auto_approve_cron_interval: float = 3600.0
    seed: int = 0
    block_log_path: Optional[str] = None


@dataclass
class JobReport:
    submitted: int = 0
    committed: int = 0
    conflicted: int = 0
    deferred: int = 0

    def to_dict(self) -> dict:
        return self.__dict__.copy()


class ReadCache:
    """Advice views keyed by (kind, po, lineItem), tagged with the ledger digest."""

    def __init__(self):
        self._entries: dict[tuple, tuple[str, Any]] = {}

    def get(self, key: tuple, digest: str) -> Optional[Any]:
        entry = self._entries.get(key)
        if entry and entry[0] == digest:
            return entry[1]
        return None

    def put(self, key: tuple, digest: str, view: Any) -> None:
        self._entries[key] = (digest, view)

    def verify(self, rebuild: Callable[[tuple], Any], current_digest: str) -> int:
        """Coherence sweep: count entries tagged current but diverging from ledger."""
        divergent = 0
        for key, (digest, view) in list(self._entries.items()):
            if digest != current_digest:
                continue
            if rebuild(key) != view:
                divergent += 1
        return divergent


class GatewayService:
    def __init__(
        self,
        config: Optional[GatewayConfig] = None,
        users: Optional[list[UserAccount]] = None,
        notifier: Optional[Notifier] = None,
    ):
        self.config = config or GatewayConfig()
        topology = self.config.topology or single_dc_topology(["shipper", "supplier", "carrier"])
        self.ledger = Ledger(
            topology,
            block_size=self.config.block_size,
            block_timeout=self.config.block_timeout,
            seed=self.config.seed,
            exec_cost=dict(contracts.DEFAULT_EXEC_COSTS),
            block_log_path=self.config.block_log_path,
        )
        contracts.register_all(self.ledger)
        self.events = EventProcessor(self._has_document, self._persist_event)
        self.notifier = notifier or Notifier()
        self.cache = ReadCache()
        self.users: dict[str, UserAccount] = {u.api_key: u for u in (users or [])}
        self._time = 0.0
        self._trigger_cursor = 0
        self._doc_index: dict[tuple[str, str], str] = {}  # (kind, docId) -> ledger key
        self._pa_index: dict[str, tuple[str, str, str]] = {}  # paId -> (po, li, payee)
        self._dispute_seq = itertools.count(1)

    # -- clock ---------------------------------------------------------------

    def now(self) -> float:
        return self._time

    def set_time(self, t: float) -> None:
        if t < self._time:
            raise DocValidationError("time", "clock must not move backwards")
        self._time = t

    def advance_time(self, dt: float) -> None:
        self.set_time(self._time + dt)

    # -- internals -----------------------------------------------------------

    def add_user(self, user: UserAccount) -> None:
        self.users[user.api_key] = user

    def authenticate(self, api_key: Optional[str]) -> UserAccount:
        user = self.users.get(api_key or "")
        if user is None:
            raise AccessError("invalid or missing API key")
        return user

    def _has_document(self, kind: str, po_id: str, li: str) -> bool:
        key = f"doc/PO/{po_id}" if kind == "PO" else f"doc/{kind}/{po_id}/{li}"
        return self.ledger.query(key, Ledger.PRIVILEGED_ORG) is not None

    def _persist_event(self, args: dict) -> str:
        return self._invoke("putEvent", args, Ledger.PRIVILEGED_ORG)

    def _invoke(self, fn: str, args: dict, org: str) -> str:
        tx_id = self.ledger.submit(fn, args, org)
        self._drain()
        tx = self.ledger.tx_status(tx_id)
        if tx.validity is Validity.MVCC_CONFLICT:
            # Direct invocations are serialized behind the drain; retry once.
            tx_id = self.ledger.submit(fn, args, org)
            self._drain()
            tx = self.ledger.tx_status(tx_id)
        if tx.validity is not Validity.VALID:
            raise ContractError(f"transaction {tx_id} failed: {tx.validity}")
        return tx_id

    def _drain(self) -> None:
        self.ledger.run_until_idle()
        committed = self.ledger.committed
        while self._trigger_cursor < len(committed):
            tx = committed[self._trigger_cursor]
            self._trigger_cursor += 1
            if tx.validity is not Validity.VALID or not isinstance(tx.result, dict):
                continue
            for trigger in tx.result.get("triggers", ()):
                try:
                    self.notifier.notify(trigger)
                except Exception:  # noqa: BLE001 - notifications never block commits
                    logger.exception("notification dispatch failed")

    # -- EDI document APIs -----------------------------------------------------

    def ingest_edi_document(self, kind: str, body: dict, caller: UserAccount) -> dict:
        if kind not in SUBMIT_MATRIX:
            raise DocValidationError("kind", f"unknown document kind {kind!r}")
        if caller.role not in SUBMIT_MATRIX[kind]:
            raise AccessError(f"role {caller.role.value} may not submit {kind}")
        doc = document_from_dict(body, DocumentKind(kind))
        self._check_document_org(kind, body, caller)
        tx_id = self._invoke("putDocument", {"kind": kind, "body": body}, caller.org_id)
        result = self.ledger.tx_status(tx_id).result
        self._doc_index[(kind, result["docId"])] = result["key"]
        if kind in ("DA", "RA", "CI"):
            for action in self.events.document_arrived(body["poId"], body["lineItemId"]):
                logger.debug("scheduled %s on document arrival", action)
        return {"docId": result["docId"], "txId": tx_id}

    def _check_document_org(self, kind: str, body: dict, caller: UserAccount) -> None:
        if caller.role is Role.ADMIN:
            return
        if kind == "PO" and body.get("shipperId") != caller.org_id:
            raise AccessError("shipper may only submit its own purchase orders")
        if kind == "CI" and body.get("supplierId") != caller.org_id:
            raise AccessError("supplier may only submit its own invoices")
        if kind == "CARRIER_INVOICE" and body.get("carrierId") != caller.org_id:
            raise AccessError("carrier may only submit its own invoices")

    def get_edi_document(self, kind: str, doc_id: str, caller: UserAccount) -> dict:
        key = self._doc_index.get((kind, doc_id))
        if key is None:
            raise NotFoundError(f"unknown {kind} document {doc_id!r}")
        value = self.ledger.query(key, caller.org_id)
        if value is None:
            raise NotFoundError(f"document {doc_id!r} not on ledger")
        return value

    # -- shipment / event APIs ---------------------------------------------------

    def register_shipment(self, bol: str, container: str, po_refs: list, caller: UserAccount) -> dict:
        reg = self.events.register_shipment(bol, container, [tuple(r) for r in po_refs])
        return {"bol": reg.bol, "containerNo": reg.container_no, "status": reg.status}

    def list_shipments(self, caller: UserAccount) -> list[dict]:
        return [
            {"bol": r.bol, "containerNo": r.container_no, "status": r.status,
             "poRefs": [list(ref) for ref in r.po_refs]}
            for r in self.events.registrations.values()
        ]

    def shipment_events(self, bol: str, container: str, caller: UserAccount) -> list[dict]:
        found = self.ledger.query_prefix(f"event/{bol}/{container}/", caller.org_id)
        return sorted(found.values(), key=lambda e: (e["occurredAt"], e["eventId"]))

    def ingest_tracking_event(self, body: dict, caller: UserAccount) -> dict:
        event = TrackingEvent.from_dict(body)
        actions = self.events.ingest_event(event)
        return {"eventId": event.event_id, "scheduled": [a.kind.value for a in actions]}

    # -- advice queries ------------------------------------------------------------

    def get_advice(self, po_id: str, li: str, kind: str, caller: UserAccount) -> dict:
        digest = self.ledger.world_state_digest()
        cache_key = (kind, po_id, li, caller.org_id)
        cached = self.cache.get(cache_key, digest)
        if cached is not None:
            return cached
        view = self._build_advice_view(po_id, li, kind, caller.org_id)
        self.cache.put(cache_key, digest, view)
        return view

    def _require_line_scope(self, po_id: str, li: str, org: str) -> dict:
        po = self.ledger.query(f"doc/PO/{po_id}", Ledger.PRIVILEGED_ORG)
        if po is None:
            raise NotFoundError(f"unknown PO {po_id!r}")
        line = next((l for l in po["lineItems"] if l["lineItemId"] == li), None)
        if line is None:
            raise NotFoundError(f"unknown line item {li!r}")
        if org not in (po["shipperId"], line["supplierId"]):
            raise AccessError(f"org {org!r} outside scope of <{po_id}, {li}>")
        return po

    def _build_advice_view(self, po_id: str, li: str, kind: str, org: str) -> dict:
        if kind == "CA":
            raw = self.ledger.query(contracts.ca_key(po_id, li), org)
            if raw is None:
                self._require_line_scope(po_id, li, org)
                return {"status": "PASS1_PENDING", "poId": po_id, "lineItemId": li}
            ca = ClaimAdvice.from_dict(raw)
            categories = {
                cat.value: {
                    "amount": claim.amount.to_dict(),
                    "quantityDelta": claim.quantity_delta,
                    "state": claim.state.value,
                    "issuedAt": claim.issued_at,
                    "disputes": self._dispute_summaries(org, ca_id=ca.ca_id, category=cat.value),
                }
                for cat, claim in ca.claims.items()
            }
            if ca.pass_ is CAPass.PASS1_DONE:
                categories[ClaimCategory.TRANSPORT_DAMAGE.value] = {"state": AdviceState.CIP.value}
            view = {
                "status": "OK",
                "caId": ca.ca_id,
                "poId": po_id,
                "lineItemId": li,
                "scenario": ca.scenario.value,
                "pass": ca.pass_.value,
                "aggregateState": aggregate_ca_state(
                    [c.state for c in ca.claims.values()]
                ).value,
                "claims": categories,
                "matchingReport": self._matching_report(po_id, li, ca),
            }
            if ca.pass_ is CAPass.COMPLETE:
                total = sum(c.amount.amount for c in ca.claims.values())
                view["totalClaim"] = {"amount": total, "currency": next(iter(ca.claims.values())).amount.currency}
            return view

        if kind != "PA":
            raise DocValidationError("kind", "advice kind must be CA or PA")
        found = self.ledger.query_prefix(f"pa/{po_id}/{li}/", org)
        if not found:
            self._require_line_scope(po_id, li, org)
            return {"status": "NOT_GENERATED", "poId": po_id, "lineItemId": li, "paymentAdvices": []}
        pas = []
        for value in found.values():
            self._pa_index[value["paId"]] = (po_id, li, value["payeeId"])
            pas.append(
                {**value, "disputes": self._dispute_summaries(org, pa_id=value["paId"])}
            )
        return {"status": "OK", "poId": po_id, "lineItemId": li, "paymentAdvices": pas}

    def _matching_report(self, po_id: str, li: str, ca: ClaimAdvice) -> list[str]:
        po = document_from_dict(self.ledger.query(f"doc/PO/{po_id}", Ledger.PRIVILEGED_ORG))
        da = self.ledger.query(f"doc/DA/{po_id}/{li}", Ledger.PRIVILEGED_ORG)
        ci = self.ledger.query(f"doc/CI/{po_id}/{li}", Ledger.PRIVILEGED_ORG)
        ra = self.ledger.query(f"doc/RA/{po_id}/{li}", Ledger.PRIVILEGED_ORG)
        level = 4 if ra is not None else 3
        return matching_report(
            po.line_item(li),
            document_from_dict(ci),
            document_from_dict(da),
            document_from_dict(ra) if ra else None,
            level=level,
        )

    def _dispute_summaries(self, org: str, ca_id: str = None, category: str = None, pa_id: str = None):
        out = []
        for value in self.ledger.query_prefix("dispute/", org).values():
            target = value["target"]
            if pa_id is not None and target["paId"] != pa_id:
                continue
            if ca_id is not None and (target["caId"] != ca_id or target["category"] != category):
                continue
            out.append(value)
        return out

    # -- dispute APIs -----------------------------------------------------------

    def raise_dispute(self, target: dict, text: str, caller: UserAccount) -> dict:
        dispute_id = f"D{next(self._dispute_seq):06d}"
        tx_id = self._invoke(
            "manageDispute",
            {
                "action": "RAISE",
                "target": target,
                "text": text,
                "actorUser": caller.user_id,
                "actorOrg": caller.org_id,
                "disputeId": dispute_id,
                "now": self.now(),
            },
            caller.org_id,
        )
        return {"disputeId": dispute_id, "txId": tx_id}

    def add_comment(self, dispute_id: str, text: str, caller: UserAccount,
                    attachment_digest: Optional[str] = None) -> dict:
        tx_id = self._invoke(
            "manageDispute",
            {
                "action": "COMMENT",
                "disputeId": dispute_id,
                "text": text,
                "actorUser": caller.user_id,
                "actorOrg": caller.org_id,
                "attachmentDigest": attachment_digest,
                "now": self.now(),
            },
            caller.org_id,
        )
        return {"disputeId": dispute_id, "txId": tx_id}

    def resolve_dispute(self, dispute_id: str, verdict: str, caller: UserAccount) -> dict:
        tx_id = self._invoke(
            "manageDispute",
            {
                "action": "RESOLVE",
                "disputeId": dispute_id,
                "verdict": verdict,
                "actorOrg": caller.org_id,
                "now": self.now(),
            },
            caller.org_id,
        )
        return {"disputeId": dispute_id, "txId": tx_id}

    def get_dispute(self, dispute_id: str, caller: UserAccount) -> dict:
        value = self.ledger.query(f"dispute/{dispute_id}", caller.org_id)
        if value is None:
            raise NotFoundError(f"unknown dispute {dispute_id!r}")
        return value

    def finalize_pa(self, pa_id: str, caller: UserAccount) -> dict:
        if caller.role not in FINALIZE_ROLES:
            raise AccessError(f"role {caller.role.value} may not finalize payment advices")
        ref = self._pa_index.get(pa_id) or self._find_pa(pa_id)
        po_id, li, payee = ref
        tx_id = self._invoke(
            "finalizePA",
            {"poId": po_id, "lineItemId": li, "payeeId": payee, "actorOrg": caller.org_id},
            caller.org_id,
        )
        return {"paId": pa_id, "txId": tx_id}

    def _find_pa(self, pa_id: str) -> tuple[str, str, str]:
        for key, value in self.ledger.query_prefix("pa/", Ledger.PRIVILEGED_ORG).items():
            if value["paId"] == pa_id:
                _, po_id, li, payee = key.split("/")
                self._pa_index[pa_id] = (po_id, li, payee)
                return po_id, li, payee
        raise NotFoundError(f"unknown payment advice {pa_id!r}")

    # -- subscriptions & tx status -------------------------------------------------

    def subscribe(self, triggers: list[str], channel: dict, caller: UserAccount) -> dict:
        chan = Channel(channel["kind"], channel.get("url"))
        sub_id = self.notifier.subscribe(caller.user_id, caller.org_id, triggers, chan)
        return {"subscriptionId": sub_id}

    def tx_status(self, tx_id: str, caller: UserAccount) -> dict:
        tx = self.ledger.tx_status(tx_id)
        return {
            "txId": tx.tx_id,
            "phase": tx.phase.value,
            "validity": tx.validity.value if tx.validity else None,
        }

    # -- cron jobs -------------------------------------------------------------

    def _run_actions(self, kinds: set[ActionKind]) -> JobReport:
        report = JobReport()
        actions = self.events.take_actions(kinds)
        submitted = []
        for action in actions:
            args = {
                "poId": action.po_id,
                "lineItemId": action.line_item_id,
                "now": self.now(),
                "shipmentDate": self.now(),
            }
            fn = "computePAs" if action.kind is ActionKind.COMPUTE_PAS else "computeCA"
            if fn == "computeCA":
                args["pass"] = "PASS1" if action.kind is ActionKind.PASS1 else "PASS2"
            try:
                submitted.append((action, self.ledger.submit(fn, args, Ledger.PRIVILEGED_ORG)))
                report.submitted += 1
            except (ContractError, TradeApError):
                report.deferred += 1
                self.events.pending_actions.append(action)
        self._drain()
        for action, tx_id in submitted:
            tx = self.ledger.tx_status(tx_id)
            if tx.validity is Validity.VALID:
                report.committed += 1
            elif tx.validity is Validity.MVCC_CONFLICT:
                report.conflicted += 1
                self.events.pending_actions.append(action)  # retried by the next run
        return report

    def run_generate_claim_advices(self) -> JobReport:
        return self._run_actions({ActionKind.PASS1, ActionKind.PASS2})

    def run_generate_payment_advices(self) -> JobReport:
        return self._run_actions({ActionKind.COMPUTE_PAS})

    def run_ca_auto_approve(self) -> JobReport:
        report = JobReport()
        tx_id = self.ledger.submit(
            "autoApproveCAs",
            {"now": self.now(), "waitingPeriod": self.config.auto_approve_waiting_period},
            Ledger.PRIVILEGED_ORG,
        )
        report.submitted = 1
        self._drain()
        tx = self.ledger.tx_status(tx_id)
        if tx.validity is Validity.VALID:
            report.committed = 1
        elif tx.validity is Validity.MVCC_CONFLICT:
            report.conflicted = 1
        return report

    def verify_cache(self) -> int:
        digest = self.ledger.world_state_digest()
        return self.cache.verify(
            lambda key: self._build_advice_view(key[1], key[2], key[0], key[3]), digest
        )


def create_app(service: GatewayService):
    """FastAPI application over a gateway service instance."""
    from fastapi import FastAPI, Header, Request
    from fastapi.responses import JSONResponse

    app = FastAPI(title="blockchain accounts payable gateway")
    app.state.service = service

    def auth(x_api_key: Optional[str]) -> UserAccount:
        return service.authenticate(x_api_key)

    @app.exception_handler(TradeApError)
    async def handle_error(request: Request, exc: TradeApError):
        status = 500
        if isinstance(exc, AccessError):
            status = 403
        elif isinstance(exc, NotFoundError):
            status = 404
        elif isinstance(exc, DocValidationError):
            status = 400
        else:
            status = 409
        return JSONResponse(status_code=status, content={"error": str(exc)})

    @app.post("/edi/{kind}")
    async def post_edi(kind: str, body: dict, x_api_key: Optional[str] = Header(None)):
        return service.ingest_edi_document(kind, body, auth(x_api_key))

    @app.get("/edi/{kind}/{doc_id}")
    async def get_edi(kind: str, doc_id: str, x_api_key: Optional[str] = Header(None)):
        return service.get_edi_document(kind, doc_id, auth(x_api_key))

    @app.get("/shipments")
    async def get_shipments(x_api_key: Optional[str] = Header(None)):
        return service.list_shipments(auth(x_api_key))

    @app.post("/shipments")
    async def post_shipment(body: dict, x_api_key: Optional[str] = Header(None)):
        return service.register_shipment(
            body["bol"], body["containerNo"], body["poRefs"], auth(x_api_key)
        )

    @app.get("/shipments/{bol}/{container}/events")
    async def get_events(bol: str, container: str, x_api_key: Optional[str] = Header(None)):
        return service.shipment_events(bol, container, auth(x_api_key))

    @app.post("/events")
    async def post_event(body: dict, x_api_key: Optional[str] = Header(None)):
        return service.ingest_tracking_event(body, auth(x_api_key))

    @app.get("/pos/{po_id}/line-items/{li}/claim-advice")
    async def get_ca(po_id: str, li: str, x_api_key: Optional[str] = Header(None)):
        return service.get_advice(po_id, li, "CA", auth(x_api_key))

    @app.get("/pos/{po_id}/line-items/{li}/payment-advices")
    async def get_pa(po_id: str, li: str, x_api_key: Optional[str] = Header(None)):
        return service.get_advice(po_id, li, "PA", auth(x_api_key))

    @app.post("/disputes")
    async def post_dispute(body: dict, x_api_key: Optional[str] = Header(None)):
        return service.raise_dispute(body["target"], body["text"], auth(x_api_key))

    @app.get("/disputes/{dispute_id}")
    async def get_dispute(dispute_id: str, x_api_key: Optional[str] = Header(None)):
        return service.get_dispute(dispute_id, auth(x_api_key))

    @app.post("/disputes/{dispute_id}/comments")
    async def post_comment(dispute_id: str, body: dict, x_api_key: Optional[str] = Header(None)):
        return service.add_comment(
            dispute_id, body["text"], auth(x_api_key), body.get("attachmentDigest")
        )

    @app.post("/disputes/{dispute_id}/resolve")
    async def post_resolve(dispute_id: str, body: dict, x_api_key: Optional[str] = Header(None)):
        return service.resolve_dispute(dispute_id, body["verdict"], auth(x_api_key))

    @app.post("/payment-advices/{pa_id}/finalize")
    async def post_finalize(pa_id: str, x_api_key: Optional[str] = Header(None)):
        return service.finalize_pa(pa_id, auth(x_api_key))

    @app.post("/subscriptions")
    async def post_subscription(body: dict, x_api_key: Optional[str] = Header(None)):
        return service.subscribe(body["triggers"], body["channel"], auth(x_api_key))

    @app.get("/tx/{tx_id}")
    async def get_tx(tx_id: str, x_api_key: Optional[str] = Header(None)):
        return service.tx_status(tx_id, auth(x_api_key))

    @app.post("/cron/{job}")
    async def run_cron(job: str, x_api_key: Optional[str] = Header(None)):
        caller = auth(x_api_key)
        if caller.role is not Role.ADMIN:
            raise AccessError("cron jobs require the ADMIN role")
        if job == "generateClaimAdvices":
            return service.run_generate_claim_advices().to_dict()
        if job == "generatePaymentAdvices":
            return service.run_generate_payment_advices().to_dict()
        if job == "CAautoApprove":
            return service.run_ca_auto_approve().to_dict()
        raise NotFoundError(f"unknown cron job {job!r}")

    return app


def load_users(path: str) -> list[UserAccount]:
    """API key table: JSON list of {userId, orgId, role, apiKey}."""
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    return [UserAccount(r["userId"], r["orgId"], Role(r["role"]), r["apiKey"]) for r in rows]
