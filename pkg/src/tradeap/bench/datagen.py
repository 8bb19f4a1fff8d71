"""Synthetic EDI corpus generator.

Produces <PO, DA, RA, CI> tuples plus carrier invoices and a tracking-event
stream, with discrepancies injected at configurable rates. Generation is
fully seeded: the same spec yields byte-identical output.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from ..edi import (
    Allocation,
    CarrierInvoice,
    CarrierRole,
    CommercialInvoice,
    DespatchAdvice,
    LineItem,
    Money,
    PurchaseOrder,
    Quantity,
    ReceivingAdvice,
    serialize_document,
)
from ..errors import DocValidationError

CARRIERS = (
    ("ocm1", CarrierRole.OCM),
    ("landcarrier1", CarrierRole.ORIGIN_LAND),
    ("oceancarrier1", CarrierRole.OCEAN),
)


@dataclass(frozen=True)
class CorpusSpec:
    num_pos: int = 50
    line_items_per_po: tuple[int, int] = (1, 3)
    discrepancy_rates: dict = field(
        default_factory=lambda: {
            "short": 0.2,
            "excess": 0.1,
            "price_mismatch": 0.2,
            "despatch_shortfall": 0.15,
            "damage": 0.15,
        }
    )
    quantity_range: tuple[int, int] = (10, 500)
    price_range: tuple[int, int] = (100, 100000)  # minor units
    currency: str = "USD"
    shipper_id: str = "shipper1"
    supplier_id: str = "supplier1"
    seed: int = 0

    def __post_init__(self):
        for name, p in self.discrepancy_rates.items():
            if not 0.0 <= p <= 1.0:
                raise DocValidationError(name, "rate must be in [0, 1]")


@dataclass
class Shipment:
    bol: str
    container_no: str
    po_id: str
    line_item_id: str
    packed_by: str


@dataclass
class Corpus:
    pos: list[PurchaseOrder]
    das: list[DespatchAdvice]
    ras: list[ReceivingAdvice]
    cis: list[CommercialInvoice]
    carrier_invoices: list[CarrierInvoice]
    shipments: list[Shipment]

    def tuples(self) -> list[tuple[PurchaseOrder, LineItem, DespatchAdvice, ReceivingAdvice, CommercialInvoice]]:
        das = {(d.po_id, d.line_item_id): d for d in self.das}
        ras = {(r.po_id, r.line_item_id): r for r in self.ras}
        cis = {(c.po_id, c.line_item_id): c for c in self.cis}
        out = []
        for po in self.pos:
            for li in po.line_items:
                key = (po.po_id, li.line_item_id)
                out.append((po, li, das[key], ras[key], cis[key]))
        return out

    def invoices_for(self, po_id: str, line_item_id: str) -> list[CarrierInvoice]:
        return [
            inv
            for inv in self.carrier_invoices
            if any(a.po_id == po_id and a.line_item_id == line_item_id for a in inv.allocations)
        ]

    def event_stream(self, start_at: float = 0.0) -> list[dict]:
        """Tracking events per shipment: packed, loaded, dispatched."""
        events = []
        t = start_at
        for shipment in self.shipments:
            base = f"{shipment.bol}-{shipment.container_no}"
            events.append(
                {
                    "eventId": f"ev-{base}-packed",
                    "bol": shipment.bol,
                    "containerNo": shipment.container_no,
                    "eventType": "container packed",
                    "occurredAt": t,
                    "payload": {"packedBy": shipment.packed_by},
                }
            )
            events.append(
                {
                    "eventId": f"ev-{base}-loaded",
                    "bol": shipment.bol,
                    "containerNo": shipment.container_no,
                    "eventType": "container loaded on truck",
                    "occurredAt": t + 1,
                    "payload": {},
                }
            )
            events.append(
                {
                    "eventId": f"ev-{base}-dispatched",
                    "bol": shipment.bol,
                    "containerNo": shipment.container_no,
                    "eventType": "container dispatched from truck",
                    "occurredAt": t + 2,
                    "payload": {},
                }
            )
            t += 3
        return events

    def write_files(self, out_dir: str | Path) -> int:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        count = 0
        for doc in [*self.pos, *self.das, *self.ras, *self.cis, *self.carrier_invoices]:
            data = serialize_document(doc)
            from ..edi import document_id, document_kind

            name = f"{document_kind(doc).value}_{document_id(doc)}.json"
            (out / name).write_bytes(data)
            count += 1
        return count


def generate_corpus(spec: CorpusSpec) -> Corpus:
    rng = random.Random(spec.seed)
    rates = spec.discrepancy_rates
    pos, das, ras, cis, invoices, shipments = [], [], [], [], [], []

    for p in range(spec.num_pos):
        po_id = f"PO{p + 1:05d}"
        n_items = rng.randint(*spec.line_items_per_po)
        line_items = []
        for j in range(n_items):
            li_id = f"L{j + 1}"
            po_q = rng.randint(*spec.quantity_range)
            po_p = rng.randint(*spec.price_range)
            line_items.append(
                LineItem(li_id, f"SKU-{p}-{j}", Quantity(po_q), Money(po_p, spec.currency), spec.supplier_id)
            )
        pos.append(PurchaseOrder(po_id, spec.shipper_id, tuple(line_items)))

        for li in line_items:
            po_q = li.quantity.value
            po_p = li.unit_price.amount

            if rng.random() < rates["excess"]:
                ci_q = po_q + rng.randint(1, max(1, po_q // 5))
            elif rng.random() < rates["short"] and po_q > 1:
                ci_q = rng.randint(max(1, po_q // 2), po_q - 1)
            else:
                ci_q = po_q

            da_q = max(ci_q, po_q) if ci_q > po_q else po_q
            if rng.random() < rates["despatch_shortfall"] and da_q > 1:
                da_q = rng.randint(max(1, da_q // 2), da_q - 1)

            clamped = min(da_q, po_q)
            if rng.random() < rates["damage"] and clamped >= 1:
                ra_q = clamped - rng.randint(1, clamped)
            else:
                ra_q = clamped

            ci_p = po_p
            if rng.random() < rates["price_mismatch"]:
                ci_p = max(0, po_p + rng.randint(-po_p // 4, max(1, po_p // 4)))

            key = f"{po_id}-{li.line_item_id}"
            bol, container = f"BOL-{key}", f"CONT-{key}"
            das.append(
                DespatchAdvice(f"DA-{key}", po_id, li.line_item_id, Quantity(da_q), (container,))
            )
            ras.append(ReceivingAdvice(f"RA-{key}", po_id, li.line_item_id, Quantity(ra_q)))
            cis.append(
                CommercialInvoice(
                    f"CI-{key}", po_id, li.line_item_id, Quantity(ci_q),
                    Money(ci_p, spec.currency), li.supplier_id,
                )
            )
            for carrier_id, role in CARRIERS:
                amount = Money(rng.randint(1000, 500000), spec.currency)
                invoices.append(
                    CarrierInvoice(
                        invoice_id=f"CINV-{carrier_id}-{key}",
                        carrier_id=carrier_id,
                        carrier_role=role,
                        container_no=container,
                        bol=bol,
                        total=amount,
                        allocations=(Allocation(po_id, li.line_item_id, amount),),
                    )
                )
            shipments.append(
                Shipment(bol, container, po_id, li.line_item_id, rng.choice(["SUPPLIER", "OCM"]))
            )

    return Corpus(pos, das, ras, cis, invoices, shipments)
