"""Claim advice generation: scenario split, per-category claims, two passes.

A claim advice covers one <PO, lineItem>. Pass 1 needs PO, DA, and CI and
issues the quantity/price discrepancy claims before delivery completes;
pass 2 adds the transport damage claim once the receiving advice exists.
Amounts are signed: a negative claim means the invoice under-bills the
shipper. After pass 2 the claim amounts always sum to
CI.Q*CI.P - RA.Q*PO.P exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

from . import lifecycle
from .edi import (
    CommercialInvoice,
    DespatchAdvice,
    LineItem,
    Money,
    Quantity,
    ReceivingAdvice,
)
from .errors import (
    ConflictError,
    CurrencyMismatchError,
    DocValidationError,
    PreconditionError,
)
from .lifecycle import AdviceState


class ClaimCategory(str, Enum):
    SHORT_DELIVERY = "SHORT_DELIVERY"
    EXCESS_DELIVERY = "EXCESS_DELIVERY"
    PRICE_DISCREPANCY = "PRICE_DISCREPANCY"
    GOODS_NOT_DELIVERED = "GOODS_NOT_DELIVERED"
    TRANSPORT_DAMAGE = "TRANSPORT_DAMAGE"


class Scenario(str, Enum):
    SHORT = "SHORT"  # CI.Q <= PO.Q
    EXCESS = "EXCESS"  # CI.Q > PO.Q


class CAPass(str, Enum):
    PASS1_DONE = "PASS1_DONE"
    COMPLETE = "COMPLETE"


@dataclass
class Claim:
    kind = "CA"  # lifecycle discriminator

    category: ClaimCategory
    quantity_delta: int
    amount: Money
    state: AdviceState = AdviceState.CIP
    issued_at: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "quantityDelta": self.quantity_delta,
            "amount": self.amount.to_dict(),
            "state": self.state.value,
            "issuedAt": self.issued_at,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Claim":
        return cls(
            category=ClaimCategory(data["category"]),
            quantity_delta=data["quantityDelta"],
            amount=Money.from_dict(data["amount"], "amount"),
            state=AdviceState(data["state"]),
            issued_at=data["issuedAt"],
        )


@dataclass
class ClaimAdvice:
    ca_id: str
    po_id: str
    line_item_id: str
    scenario: Scenario
    claims: dict[ClaimCategory, Claim]
    pass_: CAPass
    clamped_daq: Quantity
    ra_q: Optional[int] = None  # recorded at pass 2 for idempotence checks

    def to_dict(self) -> dict:
        return {
            "caId": self.ca_id,
            "poId": self.po_id,
            "lineItemId": self.line_item_id,
            "scenario": self.scenario.value,
            "claims": {cat.value: c.to_dict() for cat, c in self.claims.items()},
            "pass": self.pass_.value,
            "clampedDAQ": self.clamped_daq.value,
            "raQ": self.ra_q,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClaimAdvice":
        return cls(
            ca_id=data["caId"],
            po_id=data["poId"],
            line_item_id=data["lineItemId"],
            scenario=Scenario(data["scenario"]),
            claims={
                ClaimCategory(cat): Claim.from_dict(c) for cat, c in data["claims"].items()
            },
            pass_=CAPass(data["pass"]),
            clamped_daq=Quantity(data["clampedDAQ"]),
            ra_q=data["raQ"],
        )


def clamp_despatch(po_line: LineItem, da: DespatchAdvice) -> Quantity:
    """Cap DA.Q at PO.Q so the shipper never pays beyond the ordered quantity."""
    return Quantity(min(da.quantity.value, po_line.quantity.value))


def classify_scenario(po_line: LineItem, ci: CommercialInvoice) -> Scenario:
    return Scenario.SHORT if ci.quantity.value <= po_line.quantity.value else Scenario.EXCESS


def _check_refs(po_line: LineItem, *docs) -> None:
    po_ids = {d.po_id for d in docs}
    li_ids = {d.line_item_id for d in docs}
    if len(po_ids) > 1 or len(li_ids) > 1 or li_ids != {po_line.line_item_id}:
        raise DocValidationError("lineItemId", "documents reference different <PO, lineItem>")


def compute_pass1(
    po_line: LineItem,
    da: DespatchAdvice,
    ci: CommercialInvoice,
    now: float = 0.0,
    ca_id: Optional[str] = None,
) -> ClaimAdvice:
    """Generate and issue the three pre-delivery claims from PO, DA, and CI."""
    _check_refs(po_line, da, ci)
    if ci.unit_price.currency != po_line.unit_price.currency:
        raise CurrencyMismatchError(
            f"invoice currency {ci.unit_price.currency} != PO currency {po_line.unit_price.currency}"
        )
    po_q = po_line.quantity.value
    po_p = po_line.unit_price
    ci_q = ci.quantity.value
    ci_p = ci.unit_price
    da_q = clamp_despatch(po_line, da)
    scenario = classify_scenario(po_line, ci)

    claims: dict[ClaimCategory, Claim] = {}
    if scenario is Scenario.SHORT:
        claims[ClaimCategory.SHORT_DELIVERY] = Claim(
            ClaimCategory.SHORT_DELIVERY, po_q - ci_q, Money(0, po_p.currency)
        )
        claims[ClaimCategory.GOODS_NOT_DELIVERED] = Claim(
            ClaimCategory.GOODS_NOT_DELIVERED, ci_q - da_q.value, (ci_q - da_q.value) * po_p
        )
    else:
        claims[ClaimCategory.EXCESS_DELIVERY] = Claim(
            ClaimCategory.EXCESS_DELIVERY, ci_q - po_q, (ci_q - po_q) * po_p
        )
        claims[ClaimCategory.GOODS_NOT_DELIVERED] = Claim(
            ClaimCategory.GOODS_NOT_DELIVERED, po_q - da_q.value, (po_q - da_q.value) * po_p
        )
    claims[ClaimCategory.PRICE_DISCREPANCY] = Claim(
        ClaimCategory.PRICE_DISCREPANCY, 0, (ci_p - po_p) * ci_q
    )

    # Computation of these categories is complete, so they are issued right
    # away: disputes may start before the goods are delivered.
    for claim in claims.values():
        lifecycle.issue_claim(claim, now)

    return ClaimAdvice(
        ca_id=ca_id or f"CA-{ci.po_id}-{ci.line_item_id}",
        po_id=ci.po_id,
        line_item_id=ci.line_item_id,
        scenario=scenario,
        claims=claims,
        pass_=CAPass.PASS1_DONE,
        clamped_daq=da_q,
    )


def compute_pass2(
    ca: ClaimAdvice, po_line: LineItem, ra: ReceivingAdvice, now: float = 0.0
) -> ClaimAdvice:
    """Add the transport damage claim once the receiving advice is available."""
    _check_refs(po_line, ra)
    if ra.po_id != ca.po_id or ra.line_item_id != ca.line_item_id:
        raise DocValidationError("raId", "receiving advice references a different <PO, lineItem>")
    ra_q = ra.accepted_quantity.value
    if ca.pass_ is CAPass.COMPLETE:
        if ca.ra_q == ra_q:
            return ca  # idempotent re-invocation
        raise ConflictError(
            f"claim advice already complete with RA.Q={ca.ra_q}, got RA.Q={ra_q}"
        )
    if ra_q > ca.clamped_daq.value:
        raise DocValidationError(
            "acceptedQuantity", f"RA.Q={ra_q} exceeds despatched quantity {ca.clamped_daq.value}"
        )
    po_p = po_line.unit_price
    damage = Claim(
        ClaimCategory.TRANSPORT_DAMAGE,
        ca.clamped_daq.value - ra_q,
        (ca.clamped_daq.value - ra_q) * po_p,
    )
    lifecycle.issue_claim(damage, now)
    claims = dict(ca.claims)
    claims[ClaimCategory.TRANSPORT_DAMAGE] = damage
    return replace(ca, claims=claims, pass_=CAPass.COMPLETE, ra_q=ra_q)


def compute_ca(
    po_line: LineItem,
    da: DespatchAdvice,
    ra: ReceivingAdvice,
    ci: CommercialInvoice,
    now: float = 0.0,
    ca_id: Optional[str] = None,
) -> ClaimAdvice:
    """Single-shot generation; equals compute_pass2(compute_pass1(...))."""
    return compute_pass2(compute_pass1(po_line, da, ci, now, ca_id), po_line, ra, now)


def total_claim(ca: ClaimAdvice) -> Money:
    """Sum over categories; equals CI.Q*CI.P - RA.Q*PO.P for a complete CA."""
    if ca.pass_ is not CAPass.COMPLETE:
        raise PreconditionError("total is defined only for a complete claim advice")
    total = Money(0, next(iter(ca.claims.values())).amount.currency)
    for claim in ca.claims.values():
        total = total + claim.amount
    return total


# Matching criteria in their fixed reporting order.
CRITERIA_2WAY = ("CI.Q <= PO.Q", "CI.P <= PO.P")
CRITERIA_3WAY = CRITERIA_2WAY + ("CI.Q <= DA.Q",)
CRITERIA_4WAY = CRITERIA_3WAY + ("CI.Q <= RA.Q",)


def matching_report(
    po_line: LineItem,
    ci: CommercialInvoice,
    da: Optional[DespatchAdvice] = None,
    ra: Optional[ReceivingAdvice] = None,
    level: int = 4,
) -> list[str]:
    """Return the violated 2/3/4-way matching criteria, in fixed order."""
    if level not in (2, 3, 4):
        raise DocValidationError("level", "must be 2, 3, or 4")
    if level >= 3 and da is None:
        raise DocValidationError("da", "3-way matching requires the despatch advice")
    if level == 4 and ra is None:
        raise DocValidationError("ra", "4-way matching requires the receiving advice")
    violations = []
    if ci.quantity.value > po_line.quantity.value:
        violations.append("CI.Q <= PO.Q")
    if ci.unit_price.amount > po_line.unit_price.amount:
        violations.append("CI.P <= PO.P")
    if level >= 3 and ci.quantity.value > clamp_despatch(po_line, da).value:
        violations.append("CI.Q <= DA.Q")
    if level == 4 and ci.quantity.value > ra.accepted_quantity.value:
        violations.append("CI.Q <= RA.Q")
    return violations
