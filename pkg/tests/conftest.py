"""Shared fixtures: worked-example documents and a wired gateway service."""
from __future__ import annotations

import pytest

from tradeap.edi import (
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
)
from tradeap.gateway import GatewayConfig, GatewayService, Role, UserAccount
from tradeap.ledger import single_dc_topology

ORGS = ("shipper1", "supplier1", "ocm1", "landcarrier1", "oceancarrier1")


def make_po(po_q=100, po_p=1000, po_id="PO1", li_id="L1", supplier="supplier1"):
    return PurchaseOrder(
        po_id,
        "shipper1",
        (LineItem(li_id, "SKU-1", Quantity(po_q), Money(po_p), supplier),),
    )


def make_docs(po_q, po_p, ci_q, ci_p, da_q, ra_q, po_id="PO1", li_id="L1"):
    po = make_po(po_q, po_p, po_id, li_id)
    da = DespatchAdvice(f"DA-{po_id}", po_id, li_id, Quantity(da_q), ("C1",))
    ra = ReceivingAdvice(f"RA-{po_id}", po_id, li_id, Quantity(ra_q))
    ci = CommercialInvoice(
        f"CI-{po_id}", po_id, li_id, Quantity(ci_q), Money(ci_p), "supplier1"
    )
    return po, po.line_items[0], da, ra, ci


@pytest.fixture
def short_docs():
    """PO.Q=100, PO.P=1000c, CI.Q=90, CI.P=1200c, DA.Q=85, RA.Q=80."""
    return make_docs(100, 1000, 90, 1200, 85, 80)


@pytest.fixture
def excess_docs():
    """PO.Q=100, PO.P=1000c, CI.Q=110, CI.P=900c, DA.Q=120, RA.Q=95."""
    return make_docs(100, 1000, 110, 900, 120, 95)


def make_carrier_invoice(carrier_id, role, amount, po_id="PO1", li_id="L1"):
    return CarrierInvoice(
        invoice_id=f"CINV-{carrier_id}-{po_id}",
        carrier_id=carrier_id,
        carrier_role=role,
        container_no="C1",
        bol="B1",
        total=Money(amount),
        allocations=(Allocation(po_id, li_id, Money(amount)),),
    )


@pytest.fixture
def ocm_invoice():
    return make_carrier_invoice("ocm1", CarrierRole.OCM, 20000)


STANDARD_USERS = [
    UserAccount("u-ship-ap", "shipper1", Role.SHIPPER_AP, "key-ship-ap"),
    UserAccount("u-ship-recv", "shipper1", Role.SHIPPER_RECEIVING, "key-ship-recv"),
    UserAccount("u-supp", "supplier1", Role.SUPPLIER_AR, "key-supp"),
    UserAccount("u-ocm", "ocm1", Role.CARRIER_AR, "key-ocm"),
    UserAccount("u-land", "landcarrier1", Role.CARRIER_AR, "key-land"),
    UserAccount("u-ocean", "oceancarrier1", Role.CARRIER_AR, "key-ocean"),
    UserAccount("u-admin", "shipper1", Role.ADMIN, "key-admin"),
]


def make_service(**config_kwargs) -> GatewayService:
    config = GatewayConfig(topology=single_dc_topology(ORGS), **config_kwargs)
    return GatewayService(config, list(STANDARD_USERS))


@pytest.fixture
def service() -> GatewayService:
    return make_service()


def user(service: GatewayService, key: str) -> UserAccount:
    return service.users[key]
