"""Payment advice generation for the supplier and each carrier.

The supplier PA deducts every claim category except transport damage from
the invoice amount; the damage deduction is routed to the supplier or the
OCM carrier depending on who packed the container. Carrier PAs aggregate
that carrier's allocation shares for the <PO, lineItem> across containers.
The full claim amount is always deducted exactly once across all PAs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Optional

from . import lifecycle
from .claims import CAPass, ClaimAdvice, ClaimCategory, total_claim
from .edi import CarrierInvoice, CarrierRole, CommercialInvoice, Money
from .errors import CurrencyMismatchError, PreconditionError, RoutingError
from .lifecycle import AdviceState


class PackedBy(str, Enum):
    SUPPLIER = "SUPPLIER"
    OCM = "OCM"


class PayeeRole(str, Enum):
    SUPPLIER = "SUPPLIER"
    OCM = "OCM"
    ORIGIN_LAND = "ORIGIN_LAND"
    OCEAN = "OCEAN"
    DEST_LAND = "DEST_LAND"
    DRAYAGE = "DRAYAGE"


@dataclass
class PaymentAdvice:
    kind = "PA"  # lifecycle discriminator

    pa_id: str
    po_id: str
    line_item_id: str
    payee_id: str
    payee_role: PayeeRole
    gross_amount: Money
    deductions: list[tuple[ClaimCategory, Money]] = field(default_factory=list)
    net_amount: Money = None  # type: ignore[assignment]
    state: AdviceState = AdviceState.CIP
    warning: Optional[str] = None

    def __post_init__(self):
        if self.net_amount is None:
            net = self.gross_amount
            for _, amount in self.deductions:
                net = net - amount
            self.net_amount = net
        if self.net_amount.amount < 0 and self.warning is None:
            self.warning = "negative net amount"

    def to_dict(self) -> dict:
        return {
            "paId": self.pa_id,
            "poId": self.po_id,
            "lineItemId": self.line_item_id,
            "payeeId": self.payee_id,
            "payeeRole": self.payee_role.value,
            "grossAmount": self.gross_amount.to_dict(),
            "deductions": [[cat.value, amount.to_dict()] for cat, amount in self.deductions],
            "netAmount": self.net_amount.to_dict(),
            "state": self.state.value,
            "warning": self.warning,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PaymentAdvice":
        return cls(
            pa_id=data["paId"],
            po_id=data["poId"],
            line_item_id=data["lineItemId"],
            payee_id=data["payeeId"],
            payee_role=PayeeRole(data["payeeRole"]),
            gross_amount=Money.from_dict(data["grossAmount"], "grossAmount"),
            deductions=[
                (ClaimCategory(cat), Money.from_dict(amount, "deduction"))
                for cat, amount in data["deductions"]
            ],
            net_amount=Money.from_dict(data["netAmount"], "netAmount"),
            state=AdviceState(data["state"]),
            warning=data["warning"],
        )


def aggregate_carrier_gross(
    invoices: Iterable[CarrierInvoice], po_id: str, line_item_id: str
) -> dict[str, Money]:
    """Per-carrier sum of allocation shares for the <PO, lineItem>."""
    totals: dict[str, Money] = {}
    for invoice in invoices:
        for alloc in invoice.allocations:
            if alloc.po_id == po_id and alloc.line_item_id == line_item_id:
                if invoice.carrier_id in totals:
                    totals[invoice.carrier_id] = totals[invoice.carrier_id] + alloc.amount
                else:
                    totals[invoice.carrier_id] = alloc.amount
    return totals


def default_damage_router(packed_by: PackedBy) -> PayeeRole:
    """Built-in routing: whoever packed the container absorbs the damage."""
    return PayeeRole.SUPPLIER if packed_by is PackedBy.SUPPLIER else PayeeRole.OCM


def compute_pas(
    ci: CommercialInvoice,
    carrier_invoices: Iterable[CarrierInvoice],
    ca: ClaimAdvice,
    packed_by: PackedBy,
    damage_router: Callable[[PackedBy], PayeeRole] = default_damage_router,
) -> list[PaymentAdvice]:
    """One payment advice per payee; claims deducted exactly once overall."""
    if ca.pass_ is not CAPass.COMPLETE:
        raise PreconditionError("claim advice must be complete before PA generation")
    carrier_invoices = list(carrier_invoices)
    currency = ci.unit_price.currency
    for invoice in carrier_invoices:
        if invoice.total.currency != currency:
            raise CurrencyMismatchError(
                f"carrier invoice {invoice.invoice_id} currency {invoice.total.currency}"
            )

    damage_target = damage_router(packed_by)
    damage = ca.claims[ClaimCategory.TRANSPORT_DAMAGE].amount

    supplier_deductions = [
        (cat, claim.amount)
        for cat, claim in ca.claims.items()
        if cat is not ClaimCategory.TRANSPORT_DAMAGE
    ]
    if damage_target is PayeeRole.SUPPLIER:
        supplier_deductions.append((ClaimCategory.TRANSPORT_DAMAGE, damage))

    pas = [
        PaymentAdvice(
            pa_id=f"PA-{ci.po_id}-{ci.line_item_id}-{ci.supplier_id}",
            po_id=ci.po_id,
            line_item_id=ci.line_item_id,
            payee_id=ci.supplier_id,
            payee_role=PayeeRole.SUPPLIER,
            gross_amount=ci.quantity.value * ci.unit_price,
            deductions=supplier_deductions,
        )
    ]

    roles = {inv.carrier_id: PayeeRole(inv.carrier_role.value) for inv in carrier_invoices}
    gross_by_carrier = aggregate_carrier_gross(carrier_invoices, ci.po_id, ci.line_item_id)
    damage_routed = damage_target is PayeeRole.SUPPLIER
    for carrier_id in sorted(gross_by_carrier):
        deductions = []
        if damage_target is PayeeRole.OCM and roles[carrier_id] is PayeeRole.OCM:
            deductions.append((ClaimCategory.TRANSPORT_DAMAGE, damage))
            damage_routed = True
        pas.append(
            PaymentAdvice(
                pa_id=f"PA-{ci.po_id}-{ci.line_item_id}-{carrier_id}",
                po_id=ci.po_id,
                line_item_id=ci.line_item_id,
                payee_id=carrier_id,
                payee_role=roles[carrier_id],
                gross_amount=gross_by_carrier[carrier_id],
                deductions=deductions,
            )
        )
    if not damage_routed:
        raise RoutingError(
            f"damage deduction targets {damage_target.value} but no such payee has an invoice"
        )

    for pa in pas:
        lifecycle.issue_pa(pa)
    return pas


def conservation_delta(pas: Iterable[PaymentAdvice], ca: ClaimAdvice) -> Money:
    """Sum(gross - net) over PAs minus the CA total; zero when conserved."""
    total = total_claim(ca)
    deducted = Money(0, total.currency)
    for pa in pas:
        deducted = deducted + (pa.gross_amount - pa.net_amount)
    return deducted - total
