"""EDI document model and the canonical interchange format.

Documents are immutable values. All monetary amounts are exact integers in
minor currency units; quantities are non-negative integer unit counts.
The interchange format is canonical JSON (UTF-8, sorted keys, compact
separators) so that semantically equal documents serialize to identical
bytes and can be hashed as ledger payloads.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from typing import Any

from .errors import CurrencyMismatchError, DocValidationError, ParseError


@dataclass(frozen=True)
class Money:
    """Exact amount in minor currency units (e.g. cents). May be negative."""

    amount: int
    currency: str = "USD"

    def __post_init__(self):
        if not isinstance(self.amount, int) or isinstance(self.amount, bool):
            raise DocValidationError("amount", "must be an integer of minor units")
        if not self.currency or not isinstance(self.currency, str):
            raise DocValidationError("currency", "must be a non-empty ISO-4217 code")

    def _check(self, other: "Money") -> None:
        if self.currency != other.currency:
            raise CurrencyMismatchError(
                f"cannot mix {self.currency} and {other.currency}"
            )

    def __add__(self, other: "Money") -> "Money":
        self._check(other)
        return Money(self.amount + other.amount, self.currency)

    def __sub__(self, other: "Money") -> "Money":
        self._check(other)
        return Money(self.amount - other.amount, self.currency)

    def __neg__(self) -> "Money":
        return Money(-self.amount, self.currency)

    def __mul__(self, n: int) -> "Money":
        if not isinstance(n, int):
            raise TypeError("Money can only be multiplied by an integer")
        return Money(self.amount * n, self.currency)

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"amount": self.amount, "currency": self.currency}

    @classmethod
    def from_dict(cls, data: Any, field: str) -> "Money":
        if not isinstance(data, dict) or set(data) != {"amount", "currency"}:
            raise DocValidationError(field, "expected {amount, currency}")
        return cls(data["amount"], data["currency"])


@dataclass(frozen=True)
class Quantity:
    """Non-negative count of goods units."""

    value: int

    def __post_init__(self):
        if not isinstance(self.value, int) or isinstance(self.value, bool):
            raise DocValidationError("quantity", "must be an integer")
        if self.value < 0:
            raise DocValidationError("quantity", "must be >= 0")


class DocumentKind(str, Enum):
    PO = "PO"
    DA = "DA"
    RA = "RA"
    CI = "CI"
    CARRIER_INVOICE = "CARRIER_INVOICE"


class CarrierRole(str, Enum):
    OCM = "OCM"
    ORIGIN_LAND = "ORIGIN_LAND"
    OCEAN = "OCEAN"
    DEST_LAND = "DEST_LAND"
    DRAYAGE = "DRAYAGE"


@dataclass(frozen=True)
class LineItem:
    line_item_id: str
    sku: str
    quantity: Quantity  # ordered quantity
    unit_price: Money  # agreed unit price
    supplier_id: str

    def __post_init__(self):
        if self.quantity.value <= 0:
            raise DocValidationError("quantity", "line item quantity must be > 0")
        if self.unit_price.amount < 0:
            raise DocValidationError("unitPrice", "must be >= 0")


@dataclass(frozen=True)
class PurchaseOrder:
    po_id: str
    shipper_id: str
    line_items: tuple[LineItem, ...]

    def __post_init__(self):
        if not self.line_items:
            raise DocValidationError("lineItems", "at least one line item required")
        ids = [li.line_item_id for li in self.line_items]
        if len(set(ids)) != len(ids):
            raise DocValidationError("lineItemId", "duplicate lineItemIds within PO")

    def line_item(self, line_item_id: str) -> LineItem:
        for li in self.line_items:
            if li.line_item_id == line_item_id:
                return li
        raise DocValidationError("lineItemId", f"{line_item_id} not in {self.po_id}")


@dataclass(frozen=True)
class DespatchAdvice:
    da_id: str
    po_id: str
    line_item_id: str
    quantity: Quantity  # quantity despatched by the supplier
    container_nos: tuple[str, ...]


@dataclass(frozen=True)
class ReceivingAdvice:
    ra_id: str
    po_id: str
    line_item_id: str
    accepted_quantity: Quantity  # quantity accepted after inspection


@dataclass(frozen=True)
class CommercialInvoice:
    ci_id: str
    po_id: str
    line_item_id: str
    quantity: Quantity  # invoiced quantity
    unit_price: Money  # invoiced unit price
    supplier_id: str


@dataclass(frozen=True)
class Allocation:
    po_id: str
    line_item_id: str
    amount: Money


@dataclass(frozen=True)
class CarrierInvoice:
    invoice_id: str
    carrier_id: str
    carrier_role: CarrierRole
    container_no: str
    bol: str
    total: Money
    allocations: tuple[Allocation, ...]

    def __post_init__(self):
        if not self.allocations:
            raise DocValidationError("allocations", "must be non-empty")
        acc = Money(0, self.total.currency)
        for alloc in self.allocations:
            acc = acc + alloc.amount
        if acc.amount != self.total.amount:
            raise DocValidationError(
                "allocations", f"sum {acc.amount} != total {self.total.amount}"
            )


EdiDocument = (
    PurchaseOrder | DespatchAdvice | ReceivingAdvice | CommercialInvoice | CarrierInvoice
)


def canonical_json(obj: Any) -> bytes:
    """Deterministic JSON encoding used everywhere bytes are hashed or stored."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


def digest(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj)).hexdigest()


def _require(data: dict, fields: set[str], kind: str) -> None:
    extra = set(data) - fields
    if extra:
        raise DocValidationError(sorted(extra)[0], f"unknown field for {kind}")
    missing = fields - set(data)
    if missing:
        raise DocValidationError(sorted(missing)[0], f"missing field for {kind}")


def _quantity(data: Any, field: str) -> Quantity:
    if not isinstance(data, int) or isinstance(data, bool):
        raise DocValidationError(field, "must be an integer")
    return Quantity(data)


def document_to_dict(doc: EdiDocument) -> dict:
    if isinstance(doc, PurchaseOrder):
        return {
            "kind": "PO",
            "poId": doc.po_id,
            "shipperId": doc.shipper_id,
            "lineItems": [
                {
                    "lineItemId": li.line_item_id,
                    "sku": li.sku,
                    "quantity": li.quantity.value,
                    "unitPrice": li.unit_price.to_dict(),
                    "supplierId": li.supplier_id,
                }
                for li in doc.line_items
            ],
        }
    if isinstance(doc, DespatchAdvice):
        return {
            "kind": "DA",
            "daId": doc.da_id,
            "poId": doc.po_id,
            "lineItemId": doc.line_item_id,
            "quantity": doc.quantity.value,
            "containerNos": list(doc.container_nos),
        }
    if isinstance(doc, ReceivingAdvice):
        return {
            "kind": "RA",
            "raId": doc.ra_id,
            "poId": doc.po_id,
            "lineItemId": doc.line_item_id,
            "acceptedQuantity": doc.accepted_quantity.value,
        }
    if isinstance(doc, CommercialInvoice):
        return {
            "kind": "CI",
            "ciId": doc.ci_id,
            "poId": doc.po_id,
            "lineItemId": doc.line_item_id,
            "quantity": doc.quantity.value,
            "unitPrice": doc.unit_price.to_dict(),
            "supplierId": doc.supplier_id,
        }
    if isinstance(doc, CarrierInvoice):
        return {
            "kind": "CARRIER_INVOICE",
            "invoiceId": doc.invoice_id,
            "carrierId": doc.carrier_id,
            "carrierRole": doc.carrier_role.value,
            "containerNo": doc.container_no,
            "bol": doc.bol,
            "total": doc.total.to_dict(),
            "allocations": [
                {
                    "poId": a.po_id,
                    "lineItemId": a.line_item_id,
                    "amount": a.amount.to_dict(),
                }
                for a in doc.allocations
            ],
        }
    raise TypeError(f"not an EDI document: {type(doc)!r}")


def document_from_dict(data: dict, kind: DocumentKind | None = None) -> EdiDocument:
    if not isinstance(data, dict):
        raise DocValidationError("document", "must be an object")
    declared = data.get("kind")
    if declared not in DocumentKind.__members__:
        raise DocValidationError("kind", f"unknown document kind {declared!r}")
    declared_kind = DocumentKind(declared)
    if kind is not None and declared_kind is not DocumentKind(kind):
        raise DocValidationError("kind", f"expected {DocumentKind(kind).value}, got {declared}")

    if declared_kind is DocumentKind.PO:
        _require(data, {"kind", "poId", "shipperId", "lineItems"}, "PO")
        items = data["lineItems"]
        if not isinstance(items, list):
            raise DocValidationError("lineItems", "must be a list")
        line_items = []
        for item in items:
            _require(
                item,
                {"lineItemId", "sku", "quantity", "unitPrice", "supplierId"},
                "LineItem",
            )
            line_items.append(
                LineItem(
                    line_item_id=item["lineItemId"],
                    sku=item["sku"],
                    quantity=_quantity(item["quantity"], "quantity"),
                    unit_price=Money.from_dict(item["unitPrice"], "unitPrice"),
                    supplier_id=item["supplierId"],
                )
            )
        return PurchaseOrder(data["poId"], data["shipperId"], tuple(line_items))

    if declared_kind is DocumentKind.DA:
        _require(data, {"kind", "daId", "poId", "lineItemId", "quantity", "containerNos"}, "DA")
        return DespatchAdvice(
            da_id=data["daId"],
            po_id=data["poId"],
            line_item_id=data["lineItemId"],
            quantity=_quantity(data["quantity"], "quantity"),
            container_nos=tuple(data["containerNos"]),
        )

    if declared_kind is DocumentKind.RA:
        _require(data, {"kind", "raId", "poId", "lineItemId", "acceptedQuantity"}, "RA")
        return ReceivingAdvice(
            ra_id=data["raId"],
            po_id=data["poId"],
            line_item_id=data["lineItemId"],
            accepted_quantity=_quantity(data["acceptedQuantity"], "acceptedQuantity"),
        )

    if declared_kind is DocumentKind.CI:
        _require(
            data,
            {"kind", "ciId", "poId", "lineItemId", "quantity", "unitPrice", "supplierId"},
            "CI",
        )
        return CommercialInvoice(
            ci_id=data["ciId"],
            po_id=data["poId"],
            line_item_id=data["lineItemId"],
            quantity=_quantity(data["quantity"], "quantity"),
            unit_price=Money.from_dict(data["unitPrice"], "unitPrice"),
            supplier_id=data["supplierId"],
        )

    _require(
        data,
        {"kind", "invoiceId", "carrierId", "carrierRole", "containerNo", "bol", "total", "allocations"},
        "CARRIER_INVOICE",
    )
    if data["carrierRole"] not in CarrierRole.__members__:
        raise DocValidationError("carrierRole", f"unknown role {data['carrierRole']!r}")
    allocations = []
    for alloc in data["allocations"]:
        _require(alloc, {"poId", "lineItemId", "amount"}, "Allocation")
        allocations.append(
            Allocation(alloc["poId"], alloc["lineItemId"], Money.from_dict(alloc["amount"], "amount"))
        )
    return CarrierInvoice(
        invoice_id=data["invoiceId"],
        carrier_id=data["carrierId"],
        carrier_role=CarrierRole(data["carrierRole"]),
        container_no=data["containerNo"],
        bol=data["bol"],
        total=Money.from_dict(data["total"], "total"),
        allocations=tuple(allocations),
    )


def parse_document(raw: bytes, kind: DocumentKind | None = None) -> EdiDocument:
    """Parse canonical interchange bytes into a validated document."""
    try:
        data = json.loads(raw.decode("utf-8"))
    except UnicodeDecodeError as exc:
        raise ParseError("invalid UTF-8", exc.start) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, exc.pos) from exc
    return document_from_dict(data, kind)


def serialize_document(doc: EdiDocument) -> bytes:
    """Canonical, byte-stable serialization; parse(serialize(d)) == d."""
    return canonical_json(document_to_dict(doc))


def document_id(doc: EdiDocument) -> str:
    if isinstance(doc, PurchaseOrder):
        return doc.po_id
    if isinstance(doc, DespatchAdvice):
        return doc.da_id
    if isinstance(doc, ReceivingAdvice):
        return doc.ra_id
    if isinstance(doc, CommercialInvoice):
        return doc.ci_id
    return doc.invoice_id


def document_kind(doc: EdiDocument) -> DocumentKind:
    return DocumentKind(document_to_dict(doc)["kind"])
