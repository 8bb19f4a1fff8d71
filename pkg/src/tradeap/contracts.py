"""Contract functions (the invoice-processor chaincode) over ledger state.

Every function is deterministic given (state snapshot, args): timestamps
and actor identity arrive in the args, never from ambient context. Values
stored in world state are plain JSON-compatible dicts so blocks can be
canonically encoded and replayed.

Key layout:
    doc/PO/{poId}                       purchase order
    poref/{poId}                        public PO reference (shipper + line ids)
    doc/DA|RA|CI/{poId}/{lineItemId}    per line-item documents
    doc/CARRIER_INVOICE/{invoiceId}     carrier invoices
    cidx/{poId}/{li}/{invoiceId}        carrier invoice index per line item
    ca/{poId}/{li}                      claim advice
    pa/{poId}/{li}/{payeeId}            payment advices
    dispute/{disputeId}                 disputes
    dopen/{targetKey}                   open-dispute marker per target
    shipment/{bol}/{container}          shipment registration
    shipidx/{poId}/{li}/{bol}/{container}  shipment index per line item
    event/{bol}/{container}/{eventId}   tracking events
    packedby/{bol}/{container}          packing responsibility
"""
from __future__ import annotations

from typing import Optional

from . import claims as claims_mod
from . import lifecycle, payments
from .claims import CAPass, ClaimAdvice, ClaimCategory
from .edi import DocumentKind, document_from_dict, document_id, document_to_dict
from .errors import (
    AccessError,
    ConflictError,
    ContractError,
    DocValidationError,
    InvalidTransitionError,
    PreconditionError,
    RoutingError,
    TradeApError,
)
from .ledger import Ledger, StateView
from .lifecycle import AdviceState, Dispute, TargetRef, Trigger
from .payments import PackedBy, PaymentAdvice

CONTRACT_FUNCTIONS = (
    "putDocument",
    "putEvent",
    "computeCA",
    "computePAs",
    "manageDispute",
    "finalizePA",
    "autoApproveCAs",
)


def ca_key(po_id: str, li: str) -> str:
    return f"ca/{po_id}/{li}"


def pa_key(po_id: str, li: str, payee: str) -> str:
    return f"pa/{po_id}/{li}/{payee}"


def _load_po(view: StateView, po_id: str) -> dict:
    po = view.get(f"doc/PO/{po_id}")
    if po is None:
        raise ContractError(f"unknown PO {po_id!r}")
    return po


def _load_poref(view: StateView, po_id: str) -> dict:
    ref = view.get(f"poref/{po_id}")
    if ref is None:
        raise ContractError(f"unknown PO {po_id!r}")
    return ref


def _po_line(po: dict, li: str) -> dict:
    for item in po["lineItems"]:
        if item["lineItemId"] == li:
            return item
    raise ContractError(f"line item {li!r} not in PO {po['poId']!r}")


def _trigger(trigger: Trigger, orgs: list[str], **details) -> dict:
    return {"trigger": trigger.value, "orgs": sorted(orgs), **details}


def put_document(view: StateView, args: dict):
    """Validate and store one EDI document; indexes carrier invoices."""
    kind = DocumentKind(args["kind"])
    doc = document_from_dict(args["body"], kind)
    body = document_to_dict(doc)
    doc_id = document_id(doc)

    if kind is DocumentKind.PO:
        shipper = body["shipperId"]
        suppliers = {li["supplierId"] for li in body["lineItems"]}
        view.put(f"doc/PO/{doc_id}", body, scope={shipper, *suppliers})
        # Public reference entry (no prices) so carriers can validate
        # allocations without access to the priced purchase order.
        view.put(
            f"poref/{doc_id}",
            {
                "shipperId": shipper,
                "lineItemIds": [li["lineItemId"] for li in body["lineItems"]],
            },
        )
        return {"docId": doc_id, "key": f"doc/PO/{doc_id}"}

    if kind in (DocumentKind.DA, DocumentKind.RA, DocumentKind.CI):
        po = _load_po(view, body["poId"])
        line = _po_line(po, body["lineItemId"])
        key = f"doc/{kind.value}/{body['poId']}/{body['lineItemId']}"
        view.put(key, body, scope={po["shipperId"], line["supplierId"]})
        return {"docId": doc_id, "key": key}

    shippers = set()
    for alloc in body["allocations"]:
        ref = _load_poref(view, alloc["poId"])
        if alloc["lineItemId"] not in ref["lineItemIds"]:
            raise ContractError(
                f"line item {alloc['lineItemId']!r} not in PO {alloc['poId']!r}"
            )
        shippers.add(ref["shipperId"])
        view.put(
            f"cidx/{alloc['poId']}/{alloc['lineItemId']}/{doc_id}",
            doc_id,
            scope={ref["shipperId"], body["carrierId"]},
        )
    key = f"doc/CARRIER_INVOICE/{doc_id}"
    view.put(key, body, scope={body["carrierId"], *shippers})
    return {"docId": doc_id, "key": key}


def put_event(view: StateView, args: dict):
    """Store a tracking event (deduplicated) or a shipment registration."""
    if args.get("action") == "REGISTER":
        bol, container = args["bol"], args["containerNo"]
        key = f"shipment/{bol}/{container}"
        existing = view.get(key)
        if existing is not None:
            return {"registered": False, "key": key}
        po_refs = [list(ref) for ref in args["poRefs"]]
        for po_id, li in po_refs:
            po = _load_po(view, po_id)
            _po_line(po, li)
            view.put(f"shipidx/{po_id}/{li}/{bol}/{container}", [bol, container])
        view.put(key, {"bol": bol, "containerNo": container, "poRefs": po_refs, "status": "TRACKED"})
        return {"registered": True, "key": key}

    event = args["event"]
    for field in ("eventId", "bol", "containerNo", "eventType", "occurredAt"):
        if field not in event:
            raise ContractError(f"malformed event: missing {field!r}")
    key = f"event/{event['bol']}/{event['containerNo']}/{event['eventId']}"
    if view.get(key) is not None:
        return {"stored": False, "key": key}
    view.put(key, event)
    if event["eventType"] == "container packed":
        packed_by = event.get("payload", {}).get("packedBy", PackedBy.SUPPLIER.value)
        view.put(f"packedby/{event['bol']}/{event['containerNo']}", packed_by)
    if event["eventType"] == "container dispatched from truck":
        ship_key = f"shipment/{event['bol']}/{event['containerNo']}"
        reg = view.get(ship_key)
        if reg is not None and reg["status"] != "DELIVERED":
            view.put(ship_key, {**reg, "status": "DELIVERED"})
    return {"stored": True, "key": key}


def _docs_for(view: StateView, po_id: str, li: str):
    po = _load_po(view, po_id)
    line = _po_line(po, li)
    po_doc = document_from_dict(po)
    po_line = po_doc.line_item(li)
    da = view.get(f"doc/DA/{po_id}/{li}")
    ci = view.get(f"doc/CI/{po_id}/{li}")
    ra = view.get(f"doc/RA/{po_id}/{li}")
    return po, line, po_line, da, ci, ra


def compute_ca(view: StateView, args: dict):
    """Pass 1, pass 2, or full claim-advice generation for one <PO, lineItem>."""
    po_id, li = args["poId"], args["lineItemId"]
    mode = args.get("pass", "FULL")
    now = args.get("now", 0.0)
    po, line, po_line, da, ci, ra = _docs_for(view, po_id, li)
    scope = {po["shipperId"], line["supplierId"]}
    key = ca_key(po_id, li)
    existing = view.get(key)

    try:
        if mode == "PASS1":
            if existing is not None:
                return {"caId": existing["caId"], "pass": existing["pass"], "updated": False}
            if da is None or ci is None:
                raise ContractError("pass 1 requires PO, DA, and CI")
            ca = claims_mod.compute_pass1(
                po_line, document_from_dict(da), document_from_dict(ci), now
            )
        elif mode == "PASS2":
            if existing is None:
                raise ContractError("pass 2 requires a pass-1 claim advice")
            if ra is None:
                raise ContractError("pass 2 requires the receiving advice")
            ca = claims_mod.compute_pass2(
                ClaimAdvice.from_dict(existing), po_line, document_from_dict(ra), now
            )
        else:
            if da is None or ci is None or ra is None:
                raise ContractError("full computation requires PO, DA, RA, and CI")
            if existing is not None and existing["pass"] == CAPass.COMPLETE.value:
                prior = ClaimAdvice.from_dict(existing)
                ra_doc = document_from_dict(ra)
                if prior.ra_q == ra_doc.accepted_quantity.value:
                    return {"caId": prior.ca_id, "pass": prior.pass_.value, "updated": False}
                raise ConflictError("claim advice already complete with a different RA")
            ca = claims_mod.compute_ca(
                po_line,
                document_from_dict(da),
                document_from_dict(ra),
                document_from_dict(ci),
                now,
            )
    except (DocValidationError, ConflictError) as exc:
        raise ContractError(str(exc)) from exc

    view.put(key, ca.to_dict(), scope=scope)
    newly_issued = set(ca.claims) - set(
        ClaimCategory(c) for c in (existing or {}).get("claims", {})
    )
    triggers = [
        _trigger(
            Trigger.CA_ISSUED,
            sorted(scope),
            caId=ca.ca_id,
            poId=po_id,
            lineItemId=li,
            category=cat.value,
        )
        for cat in sorted(newly_issued, key=lambda c: c.value)
    ]
    return {"caId": ca.ca_id, "pass": ca.pass_.value, "updated": True, "triggers": triggers}


def _packed_by(view: StateView, po_id: str, li: str) -> tuple[PackedBy, Optional[str]]:
    for key in view.keys(f"shipidx/{po_id}/{li}/"):
        bol, container = view.get(key)
        packed = view.get(f"packedby/{bol}/{container}")
        if packed is not None:
            return PackedBy(packed), None
    return PackedBy.SUPPLIER, "no packing event seen; defaulting to SUPPLIER"


def compute_pas(view: StateView, args: dict):
    """Generate payment advices for the supplier and every invoicing carrier."""
    po_id, li = args["poId"], args["lineItemId"]
    po, line, po_line, da, ci, ra = _docs_for(view, po_id, li)
    ca_raw = view.get(ca_key(po_id, li))
    if ca_raw is None or ca_raw["pass"] != CAPass.COMPLETE.value:
        raise ContractError("claim advice must be complete before PA generation")
    if ci is None:
        raise ContractError("supplier invoice required")
    ca = ClaimAdvice.from_dict(ca_raw)

    invoices = []
    for key in view.keys(f"cidx/{po_id}/{li}/"):
        invoices.append(document_from_dict(view.get(f"doc/CARRIER_INVOICE/{view.get(key)}")))

    packed_by, warning = _packed_by(view, po_id, li)
    try:
        pas = payments.compute_pas(document_from_dict(ci), invoices, ca, packed_by)
    except (RoutingError, PreconditionError) as exc:
        raise ContractError(str(exc)) from exc

    # Amount fields; state and warning may legitimately advance after issue,
    # so they are excluded from the idempotence comparison.
    frozen_fields = ("paId", "payeeId", "payeeRole", "grossAmount", "deductions", "netAmount")

    triggers = []
    updated = False
    for pa in pas:
        if warning and pa.payee_role is payments.PayeeRole.SUPPLIER:
            pa.warning = warning
        key = pa_key(po_id, li, pa.payee_id)
        body = pa.to_dict()
        existing = view.get(key)
        if existing is not None and all(existing[f] == body[f] for f in frozen_fields):
            continue
        updated = True
        scope = {po["shipperId"], pa.payee_id}
        view.put(key, body, scope=scope)
        triggers.append(
            _trigger(
                Trigger.PA_ISSUED,
                sorted(scope),
                paId=pa.pa_id,
                poId=po_id,
                lineItemId=li,
                payeeId=pa.payee_id,
            )
        )
    return {
        "paIds": [pa.pa_id for pa in pas],
        "packedBy": packed_by.value,
        "updated": updated,
        "triggers": triggers,
    }


def _load_target(view: StateView, target: TargetRef) -> tuple[str, dict]:
    if target.pa_id is not None:
        for key in view.keys("pa/"):
            value = view.get(key)
            if value["paId"] == target.pa_id:
                return key, value
        raise ContractError(f"unknown payment advice {target.pa_id!r}")
    for key in view.keys("ca/"):
        value = view.get(key)
        if value["caId"] == target.ca_id:
            return key, value
    raise ContractError(f"unknown claim advice {target.ca_id!r}")


def _counterparty(view: StateView, target: TargetRef, key: str, value: dict, actor_org: str) -> str:
    if target.pa_id is not None:
        # Carrier payees are not party to the priced purchase order, so the
        # shipper comes from the public reference entry.
        shipper = _load_poref(view, value["poId"])["shipperId"]
        other = value["payeeId"]
    else:
        po = _load_po(view, value["poId"])
        shipper = po["shipperId"]
        other = _po_line(po, value["lineItemId"])["supplierId"]
    if actor_org == shipper:
        return other
    if actor_org == other:
        return shipper
    raise AccessError(f"org {actor_org!r} is not a participant on {key!r}")


def manage_dispute(view: StateView, args: dict):
    """RAISE / COMMENT / RESOLVE actions of the dispute workflow."""
    action = args["action"]
    now = args.get("now", 0.0)

    if action == "RAISE":
        target = TargetRef.from_dict(args["target"])
        key, value = _load_target(view, target)
        actor_org = args["actorOrg"]
        reviewer = _counterparty(view, target, key, value, actor_org)
        if view.get(f"dopen/{target.key}") is not None:
            raise ContractError(f"an open dispute already exists on {target.key}")
        try:
            if target.pa_id is not None:
                pa = PaymentAdvice.from_dict(value)
                dispute = lifecycle.new_dispute(
                    target, args["actorUser"], actor_org, reviewer, args["text"], now,
                    dispute_id=args["disputeId"],
                )
                lifecycle.raise_dispute_on_pa(pa, dispute)
                view.put(key, pa.to_dict())
            else:
                ca = ClaimAdvice.from_dict(value)
                category = ClaimCategory(target.category)
                if category not in ca.claims:
                    raise ContractError(f"category {category.value} not present on {ca.ca_id}")
                dispute = lifecycle.new_dispute(
                    target, args["actorUser"], actor_org, reviewer, args["text"], now,
                    dispute_id=args["disputeId"],
                )
                lifecycle.raise_dispute_on_claim(ca.claims[category], dispute)
                view.put(key, ca.to_dict())
        except (InvalidTransitionError, PreconditionError, ConflictError) as exc:
            raise ContractError(str(exc)) from exc
        scope = sorted({actor_org, reviewer})
        view.put(f"dispute/{dispute.dispute_id}", dispute.to_dict(), scope=scope)
        view.put(f"dopen/{target.key}", dispute.dispute_id)
        return {
            "disputeId": dispute.dispute_id,
            "triggers": [
                _trigger(Trigger.DISPUTE_RAISED, scope, disputeId=dispute.dispute_id,
                         target=target.to_dict())
            ],
        }

    dispute_raw = view.get(f"dispute/{args['disputeId']}")
    if dispute_raw is None:
        raise ContractError(f"unknown dispute {args['disputeId']!r}")
    dispute = Dispute.from_dict(dispute_raw)

    if action == "COMMENT":
        actor_org = args["actorOrg"]
        if actor_org not in (dispute.raised_by_org, dispute.reviewer_org):
            raise AccessError(f"org {actor_org!r} is not a participant on this dispute")
        try:
            lifecycle.add_comment(
                dispute, args["actorUser"], actor_org, args["text"], now,
                args.get("attachmentDigest"),
            )
        except PreconditionError as exc:
            raise ContractError(str(exc)) from exc
        view.put(f"dispute/{dispute.dispute_id}", dispute.to_dict())
        return {"disputeId": dispute.dispute_id, "comments": len(dispute.comments)}

    if action == "RESOLVE":
        key, value = _load_target(view, dispute.target)
        try:
            if dispute.target.pa_id is not None:
                target_obj = PaymentAdvice.from_dict(value)
            else:
                target_obj = ClaimAdvice.from_dict(value).claims[
                    ClaimCategory(dispute.target.category)
                ]
            lifecycle.resolve_dispute(dispute, args["actorOrg"], args["verdict"], target_obj)
        except (PreconditionError, InvalidTransitionError, DocValidationError) as exc:
            raise ContractError(str(exc)) from exc
        if dispute.target.pa_id is not None:
            view.put(key, target_obj.to_dict())
        else:
            ca = ClaimAdvice.from_dict(value)
            ca.claims[ClaimCategory(dispute.target.category)] = target_obj
            view.put(key, ca.to_dict())
        view.put(f"dispute/{dispute.dispute_id}", dispute.to_dict())
        view.put(f"dopen/{dispute.target.key}", None)
        scope = sorted({dispute.raised_by_org, dispute.reviewer_org})
        return {
            "disputeId": dispute.dispute_id,
            "status": dispute.status.value,
            "triggers": [
                _trigger(Trigger.DISPUTE_RESOLVED, scope, disputeId=dispute.dispute_id,
                         verdict=args["verdict"])
            ],
        }

    raise ContractError(f"unknown dispute action {action!r}")


def finalize_pa(view: StateView, args: dict):
    """Shipper-only AR -> MA; permanently blocks further disputes on the PA."""
    po_id, li, payee = args["poId"], args["lineItemId"], args["payeeId"]
    key = pa_key(po_id, li, payee)
    value = view.get(key)
    if value is None:
        raise ContractError(f"unknown payment advice {key!r}")
    pa = PaymentAdvice.from_dict(value)
    shipper = _load_poref(view, po_id)["shipperId"]
    target = TargetRef(pa_id=pa.pa_id)
    has_open = view.get(f"dopen/{target.key}") is not None
    try:
        lifecycle.finalize_pa(pa, args["actorOrg"], shipper, has_open)
    except (AccessError, PreconditionError, InvalidTransitionError) as exc:
        raise ContractError(str(exc)) from exc
    view.put(key, pa.to_dict())
    scope = sorted({shipper, pa.payee_id})
    return {
        "paId": pa.pa_id,
        "state": pa.state.value,
        "triggers": [_trigger(Trigger.FINALIZED, scope, paId=pa.pa_id)],
    }


def auto_approve_cas(view: StateView, args: dict):
    """Cron sweep: OPEN claims past the waiting period move to AA."""
    now = args["now"]
    config = lifecycle.LifecycleConfig(args.get("waitingPeriod", 7 * 86400.0))
    triggers = []
    approved = 0
    for key in view.keys("ca/"):
        ca = ClaimAdvice.from_dict(view.get(key))
        changed = lifecycle.auto_approve(ca.claims.values(), now, config)
        if changed:
            view.put(key, ca.to_dict())
            approved += len(changed)
            po = _load_po(view, ca.po_id)
            line = _po_line(po, ca.line_item_id)
            scope = sorted({po["shipperId"], line["supplierId"]})
            for claim in changed:
                triggers.append(
                    _trigger(Trigger.AUTO_APPROVED, scope, caId=ca.ca_id,
                             category=claim.category.value)
                )
    return {"approved": approved, "triggers": triggers}


# Relative execution costs (seconds) used by the pipeline's timing model.
# computeCA validates four documents and is structurally heavier than
# computePAs, which reads the CA plus invoices.
DEFAULT_EXEC_COSTS = {
    "computeCA": 0.0010,
    "computePAs": 0.0006,
    "putDocument": 0.0003,
    "putEvent": 0.0002,
    "manageDispute": 0.0004,
    "finalizePA": 0.0003,
    "autoApproveCAs": 0.0010,
}


def register_all(ledger: Ledger) -> None:
    ledger.register_contract("putDocument", put_document, exec_cost=DEFAULT_EXEC_COSTS["putDocument"])
    ledger.register_contract("putEvent", put_event, exec_cost=DEFAULT_EXEC_COSTS["putEvent"])
    ledger.register_contract("computeCA", compute_ca, exec_cost=DEFAULT_EXEC_COSTS["computeCA"])
    ledger.register_contract("computePAs", compute_pas, exec_cost=DEFAULT_EXEC_COSTS["computePAs"])
    ledger.register_contract("manageDispute", manage_dispute, exec_cost=DEFAULT_EXEC_COSTS["manageDispute"])
    ledger.register_contract("finalizePA", finalize_pa, exec_cost=DEFAULT_EXEC_COSTS["finalizePA"])
    ledger.register_contract("autoApproveCAs", auto_approve_cas, exec_cost=DEFAULT_EXEC_COSTS["autoApproveCAs"])
