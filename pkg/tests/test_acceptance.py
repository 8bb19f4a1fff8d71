"""Acceptance suite: one test per release criterion, one printed line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
pass/fail lines as they are produced.
"""
import functools
import itertools
import json
import random
import time

import pytest
from fastapi.testclient import TestClient

from tradeap.bench.datagen import CorpusSpec, generate_corpus
from tradeap.bench.harness import LoadConfig, run_load, sweep
from tradeap.claims import ClaimCategory, compute_ca, compute_pass1, compute_pass2, total_claim
from tradeap.contracts import ca_key
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
    document_to_dict,
)
from tradeap.errors import (
    AccessError,
    ConflictError,
    InvalidTransitionError,
    PreconditionError,
)
from tradeap.events import EVENT_DISPATCHED, EVENT_LOADED, EVENT_PACKED
from tradeap.gateway import Role, UserAccount, create_app
from tradeap.ledger import Ledger, Validity, replay_block_log, single_dc_topology
from tradeap.lifecycle import (
    AdviceState,
    CA_ACTIONS,
    CA_TRANSITIONS,
    LifecycleConfig,
    PA_ACTIONS,
    PA_TRANSITIONS,
    TargetRef,
    auto_approve,
    ca_transition,
    finalize_pa,
    new_dispute,
    pa_transition,
    raise_dispute_on_pa,
    resolve_dispute,
)
from tradeap.payments import PackedBy, PayeeRole, compute_pas, conservation_delta

from conftest import make_carrier_invoice, make_docs, make_service


def criterion(name):
    """Print one pass/fail line per acceptance criterion."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"\nACCEPTANCE {name}: FAIL")
                raise
            print(f"\nACCEPTANCE {name}: PASS")

        return wrapper

    return decorate


def seeded_tuples(count, seed=12345):
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        po_q = rng.randint(1, 10_000)
        po_p = rng.randint(1, 1_000_000)
        ci_p = rng.randint(1, 1_000_000)
        da_q = rng.randint(0, 2 * po_q)
        ci_q = rng.randint(0, 2 * po_q)
        ra_q = rng.randint(0, min(da_q, po_q))
        out.append(make_docs(po_q, po_p, ci_q, ci_p, da_q, ra_q))
    return out


@criterion("claim identity over 10000 seeded tuples")
def test_claim_identity_property():
    started = time.perf_counter()
    scenarios = set()
    for _, li, da, ra, ci in seeded_tuples(10_000):
        ca = compute_ca(li, da, ra, ci)
        scenarios.add(ca.scenario)
        expected = ci.quantity.value * ci.unit_price.amount - (
            ra.accepted_quantity.value * li.unit_price.amount
        )
        assert total_claim(ca).amount == expected
    elapsed = time.perf_counter() - started
    assert len(scenarios) == 2, "both SHORT and EXCESS scenarios must occur"
    assert elapsed < 5.0, f"identity sweep took {elapsed:.2f}s (budget 5s)"


@criterion("worked claim examples")
def test_worked_examples():
    _, li, da, ra, ci = make_docs(100, 1000, 90, 1200, 85, 80)
    ca = compute_ca(li, da, ra, ci)
    amounts = {cat.value: c.amount.amount for cat, c in ca.claims.items()}
    assert amounts == {
        "SHORT_DELIVERY": 0,
        "PRICE_DISCREPANCY": 18000,
        "GOODS_NOT_DELIVERED": 5000,
        "TRANSPORT_DAMAGE": 5000,
    }
    assert total_claim(ca).amount == 28000

    _, li, da, ra, ci = make_docs(100, 1000, 110, 900, 120, 95)
    ca = compute_ca(li, da, ra, ci)
    amounts = {cat.value: c.amount.amount for cat, c in ca.claims.items()}
    assert amounts == {
        "EXCESS_DELIVERY": 10000,
        "PRICE_DISCREPANCY": -11000,
        "GOODS_NOT_DELIVERED": 0,
        "TRANSPORT_DAMAGE": 5000,
    }
    assert total_claim(ca).amount == 4000


@criterion("two-pass equivalence over 10000 tuples")
def test_two_pass_equivalence():
    for _, li, da, ra, ci in seeded_tuples(10_000):
        staged = compute_pass2(compute_pass1(li, da, ci), li, ra)
        assert staged.to_dict() == compute_ca(li, da, ra, ci).to_dict()


@criterion("payment advice conservation over 1000 scenarios")
def test_pa_conservation():
    rng = random.Random(777)
    for _ in range(1000):
        po_q = rng.randint(1, 2000)
        da_q = rng.randint(0, 2 * po_q)
        docs = make_docs(
            po_q,
            rng.randint(1, 100_000),
            rng.randint(0, 2 * po_q),
            rng.randint(1, 100_000),
            da_q,
            rng.randint(0, min(da_q, po_q)),
        )
        _, li, da, ra, ci = docs
        ca = compute_ca(li, da, ra, ci)
        invoices = [
            make_carrier_invoice("ocm1", CarrierRole.OCM, rng.randint(1, 90_000)),
            make_carrier_invoice("landcarrier1", CarrierRole.ORIGIN_LAND, rng.randint(1, 40_000)),
        ]
        for packed in (PackedBy.SUPPLIER, PackedBy.OCM):
            pas = compute_pas(ci, invoices, ca, packed)
            assert conservation_delta(pas, ca).amount == 0
            if packed is PackedBy.SUPPLIER:
                supplier = next(p for p in pas if p.payee_role is PayeeRole.SUPPLIER)
                entitled = ra.accepted_quantity.value * li.unit_price.amount
                assert supplier.net_amount.amount == entitled


@criterion("advice lifecycle FSMs, role gates, and auto-approval boundary")
def test_lifecycle_fsms():
    expected_ca = {
        (AdviceState.CIP, "issue"): AdviceState.OPEN,
        (AdviceState.OPEN, "raise_dispute"): AdviceState.AR,
        (AdviceState.AR, "resolve_dispute"): AdviceState.MA,
        (AdviceState.OPEN, "auto_approve"): AdviceState.AA,
    }
    expected_pa = {
        (AdviceState.CIP, "issue"): AdviceState.AR,
        (AdviceState.AR, "finalize"): AdviceState.MA,
        (AdviceState.AR, "raise_dispute"): AdviceState.AR,
        (AdviceState.AR, "resolve_dispute"): AdviceState.AR,
    }
    assert CA_TRANSITIONS == expected_ca
    assert PA_TRANSITIONS == expected_pa
    for state, action in itertools.product(AdviceState, CA_ACTIONS):
        if (state, action) not in expected_ca:
            with pytest.raises(InvalidTransitionError):
                ca_transition(state, action)
    for state, action in itertools.product(AdviceState, PA_ACTIONS):
        if (state, action) not in expected_pa:
            with pytest.raises(InvalidTransitionError):
                pa_transition(state, action)

    # Role gates on the actions that carry an actor.
    from tradeap.payments import PaymentAdvice

    def fresh_pa(state):
        return PaymentAdvice(
            "PA1", "PO1", "L1", "supplier1", PayeeRole.SUPPLIER,
            gross_amount=Money(1000), state=state,
        )

    dispute = new_dispute(
        TargetRef(ca_id="CA1", category="PRICE_DISCREPANCY"),
        "u1", "shipper1", "supplier1", "text", now=0.0,
    )
    with pytest.raises(AccessError):
        resolve_dispute(dispute, "shipper1", "ACCEPT", None)
    with pytest.raises(ConflictError):
        new_dispute(TargetRef(pa_id="PA1"), "u1", "shipper1", "shipper1", "x", now=0.0)
    with pytest.raises(AccessError):
        finalize_pa(fresh_pa(AdviceState.AR), "supplier1", "shipper1", False)

    # Post-finalization disputes are always rejected.
    pa = fresh_pa(AdviceState.AR)
    finalize_pa(pa, "shipper1", "shipper1", False)
    with pytest.raises(PreconditionError):
        raise_dispute_on_pa(
            pa,
            new_dispute(TargetRef(pa_id="PA1"), "u1", "supplier1", "shipper1", "x", now=0.0),
        )

    # Auto-approve fires at exactly issuedAt + waitingPeriod.
    from tradeap.claims import Claim

    period = 7 * 86400.0
    config = LifecycleConfig(period)
    claim = Claim(ClaimCategory.PRICE_DISCREPANCY, 0, Money(1), AdviceState.OPEN, 100.0)
    assert auto_approve([claim], 100.0 + period - 1e-6, config) == []
    assert claim.state is AdviceState.OPEN
    assert auto_approve([claim], 100.0 + period, config) == [claim]
    assert claim.state is AdviceState.AA


@criterion("ledger determinism, block cutting, and MVCC isolation")
def test_ledger_determinism(tmp_path):
    log_path = tmp_path / "blocks.jsonl"
    ledger = Ledger(
        single_dc_topology(["org1", "org2", "org3"]),
        block_size=100,
        block_timeout=0.5,
        seed=0,
        block_log_path=str(log_path),
    )
    ledger.register_contract(
        "setValue", lambda view, args: view.put(args["key"], args["value"]), exec_cost=0.001
    )

    # Size-100 cutting: 150 concurrent transactions form blocks of 100 and 50.
    for i in range(150):
        ledger.submit("setValue", {"key": f"k{i}", "value": i}, Ledger.PRIVILEGED_ORG)
    ledger.run_until_idle()
    assert [len(b.transactions) for b in ledger.blocks] == [100, 50]

    # Timeout cutting: a lone transaction waits out the 500 ms block timeout.
    lone = ledger.submit("setValue", {"key": "lone", "value": 1}, Ledger.PRIVILEGED_ORG)
    ledger.run_until_idle()
    assert ledger.tx_status(lone).latency >= 0.5

    # Concurrent same-key submissions: exactly one VALID, one MVCC_CONFLICT.
    a = ledger.submit("setValue", {"key": "shared", "value": "a"}, Ledger.PRIVILEGED_ORG)
    b = ledger.submit("setValue", {"key": "shared", "value": "b"}, Ledger.PRIVILEGED_ORG)
    ledger.run_until_idle()
    outcomes = sorted(ledger.tx_status(t).validity.value for t in (a, b))
    assert outcomes == [Validity.MVCC_CONFLICT.value, Validity.VALID.value]

    # Replaying the recorded block log reproduces the world-state digest.
    digest, blocks = replay_block_log(log_path.read_text().splitlines())
    assert digest == ledger.world_state_digest()
    assert blocks == len(ledger.blocks)


def _shipment_events(bol, container, packed_by="SUPPLIER", start=0.0):
    base = f"{bol}-{container}"
    return [
        {"eventId": f"ev-{base}-packed", "bol": bol, "containerNo": container,
         "eventType": EVENT_PACKED, "occurredAt": start, "payload": {"packedBy": packed_by}},
        {"eventId": f"ev-{base}-loaded", "bol": bol, "containerNo": container,
         "eventType": EVENT_LOADED, "occurredAt": start + 1, "payload": {}},
        {"eventId": f"ev-{base}-dispatched", "bol": bol, "containerNo": container,
         "eventType": EVENT_DISPATCHED, "occurredAt": start + 2, "payload": {}},
    ]


@criterion("per-line-item privacy across API and direct-query paths")
def test_privacy_scoping():
    service = make_service()
    service.add_user(UserAccount("u-supp2", "supplier2", Role.SUPPLIER_AR, "key-supp2"))
    client = TestClient(create_app(service))

    def must(method, path, key, body=None, status=200):
        kwargs = {"headers": {"X-API-Key": key}}
        if body is not None:
            kwargs["json"] = body
        response = getattr(client, method)(path, **kwargs)
        assert response.status_code == status, response.text
        return response

    po = PurchaseOrder("PO1", "shipper1", (
        LineItem("L1", "SKU-1", Quantity(100), Money(1000), "supplier1"),
        LineItem("L2", "SKU-2", Quantity(50), Money(2000), "supplier2"),
    ))
    must("post", "/edi/PO", "key-ship-ap", document_to_dict(po))
    lines = [("L1", "supplier1", "key-supp"), ("L2", "supplier2", "key-supp2")]
    for index, (li, supplier, key) in enumerate(lines):
        bol, container = f"B{index + 1}", f"C{index + 1}"
        da = DespatchAdvice(f"DA-{li}", "PO1", li, Quantity(40), (container,))
        ci = CommercialInvoice(f"CI-{li}", "PO1", li, Quantity(40), Money(1000), supplier)
        must("post", "/edi/DA", key, document_to_dict(da))
        must("post", "/edi/CI", key, document_to_dict(ci))
        invoice = CarrierInvoice(
            f"CINV-ocm1-{li}", "ocm1", CarrierRole.OCM, container, bol,
            total=Money(5000), allocations=(Allocation("PO1", li, Money(5000)),),
        )
        must("post", "/edi/CARRIER_INVOICE", "key-ocm", document_to_dict(invoice))
        must("post", "/shipments", "key-ship-ap",
             {"bol": bol, "containerNo": container, "poRefs": [["PO1", li]]})
        for event in _shipment_events(bol, container):
            must("post", "/events", "key-ship-ap", event)
    must("post", "/cron/generateClaimAdvices", "key-admin", {})
    for li, _, _ in ((li, s, k) for li, s, k in lines):
        ra = ReceivingAdvice(f"RA-{li}", "PO1", li, Quantity(40))
        must("post", "/edi/RA", "key-ship-recv", document_to_dict(ra))
    must("post", "/cron/generateClaimAdvices", "key-admin", {})
    must("post", "/cron/generatePaymentAdvices", "key-admin", {})

    # API path: supplier1 reads its own line and is denied the other.
    ok = must("get", "/pos/PO1/line-items/L1/claim-advice", "key-supp").json()
    assert ok["status"] == "OK" and ok["pass"] == "COMPLETE"
    pa_ok = must("get", "/pos/PO1/line-items/L1/payment-advices", "key-supp").json()
    assert pa_ok["status"] == "OK"
    must("get", "/pos/PO1/line-items/L2/claim-advice", "key-supp", status=403)
    must("get", "/pos/PO1/line-items/L2/payment-advices", "key-supp", status=403)
    # And symmetrically for supplier2.
    assert must("get", "/pos/PO1/line-items/L2/claim-advice", "key-supp2").json()["status"] == "OK"
    must("get", "/pos/PO1/line-items/L1/claim-advice", "key-supp2", status=403)

    # Direct-query path against the ledger itself.
    assert service.ledger.query(ca_key("PO1", "L1"), "supplier1") is not None
    with pytest.raises(AccessError):
        service.ledger.query(ca_key("PO1", "L2"), "supplier1")
    assert service.ledger.query("pa/PO1/L1/supplier1", "supplier1") is not None
    with pytest.raises(AccessError):
        service.ledger.query("pa/PO1/L2/supplier2", "supplier1")
    # Prefix scans silently exclude out-of-scope lines.
    assert service.ledger.query_prefix("ca/PO1/L2", "supplier1") == {}


@criterion("benchmark trends: saturation, latency, geo distribution, floor")
def test_benchmark_trends():
    corpus = generate_corpus(CorpusSpec(num_pos=200, seed=0))
    floor_violations = []

    def check_floor(report):
        for fn, stats in report.per_type.items():
            if stats.throughput < 25.0:
                floor_violations.append((fn, stats.throughput))

    # (a) Throughput rises with send rate, then saturates; the payment-advice
    # workload saturates strictly above the claim-advice workload.
    saturation = {}
    for fn in ("computeCA", "computePAs"):
        base = LoadConfig(tx_mix={fn: 1.0}, tx_count=2000, seed=0)
        started = time.perf_counter()
        results = sweep("SEND_RATE", [200, 600, 2500, 4000], base, corpus)
        assert time.perf_counter() - started < 600, "sweep exceeded 10 minute budget"
        tput = [r.per_type[fn].throughput for _, r in results]
        assert tput[1] > tput[0], f"{fn}: throughput must rise below saturation {tput}"
        assert tput[2] > tput[1], f"{fn}: throughput must rise below saturation {tput}"
        assert tput[3] <= tput[2] * 1.10, f"{fn}: throughput must plateau {tput}"
        saturation[fn] = max(tput[2], tput[3])
        for _, report in results:
            check_floor(report)
    assert saturation["computePAs"] > saturation["computeCA"], saturation

    # (b) Latency is non-decreasing in send rate across the loaded region.
    base = LoadConfig(tx_mix={"computeCA": 1.0}, tx_count=2000, seed=0)
    started = time.perf_counter()
    results = sweep("SEND_RATE", [1000, 1200, 1600, 2000], base, corpus)
    assert time.perf_counter() - started < 600, "sweep exceeded 10 minute budget"
    lat = [r.per_type["computeCA"].latency_mean for _, r in results]
    assert all(lat[i] <= lat[i + 1] for i in range(len(lat) - 1)), lat
    for _, report in results:
        check_floor(report)

    # (c) Five datacenters: strictly lower throughput and higher latency than
    # one datacenter for both transaction types.
    base = LoadConfig(
        tx_mix={"computeCA": 0.5, "computePAs": 0.5}, send_rate=1000.0, tx_count=2000, seed=0
    )
    started = time.perf_counter()
    geo = dict(sweep("GEO", [1, 5], base, corpus))
    assert time.perf_counter() - started < 600, "sweep exceeded 10 minute budget"
    for fn in ("computeCA", "computePAs"):
        one, five = geo[1].per_type[fn], geo[5].per_type[fn]
        assert five.throughput < one.throughput, fn
        assert five.latency_mean > one.latency_mean, fn
    check_floor(geo[1])
    check_floor(geo[5])

    # (d) Sustained committed throughput stays at or above 25 tx/s everywhere.
    assert not floor_violations, floor_violations


@criterion("end-to-end 50-PO corpus through the gateway with audited dispute")
def test_end_to_end_pipeline(tmp_path):
    log_path = tmp_path / "blocks.jsonl"
    service = make_service(block_log_path=str(log_path))
    corpus = generate_corpus(CorpusSpec(num_pos=50, seed=3))
    ship = service.users["key-ship-ap"]
    recv = service.users["key-ship-recv"]
    supp = service.users["key-supp"]
    admin = service.users["key-admin"]
    carrier_users = {
        "ocm1": service.users["key-ocm"],
        "landcarrier1": service.users["key-land"],
        "oceancarrier1": service.users["key-ocean"],
    }

    for po in corpus.pos:
        service.ingest_edi_document("PO", document_to_dict(po), ship)
    for da in corpus.das:
        service.ingest_edi_document("DA", document_to_dict(da), supp)
    for ci in corpus.cis:
        service.ingest_edi_document("CI", document_to_dict(ci), supp)
    for invoice in corpus.carrier_invoices:
        service.ingest_edi_document(
            "CARRIER_INVOICE", document_to_dict(invoice), carrier_users[invoice.carrier_id]
        )
    for shipment in corpus.shipments:
        service.register_shipment(
            shipment.bol, shipment.container_no,
            [(shipment.po_id, shipment.line_item_id)], ship,
        )
    for event in corpus.event_stream():
        service.ingest_tracking_event(event, ship)

    pass1 = service.run_generate_claim_advices()
    refs = [(po.po_id, li.line_item_id) for po, li, *_ in corpus.tuples()]
    assert pass1.committed == len(refs)
    for ra in corpus.ras:
        service.ingest_edi_document("RA", document_to_dict(ra), recv)
    pass2 = service.run_generate_claim_advices()
    assert pass2.committed == len(refs)
    pa_job = service.run_generate_payment_advices()
    assert pa_job.committed == len(refs)

    expected_payees = {"supplier1", "ocm1", "landcarrier1", "oceancarrier1"}
    for po_id, li in refs:
        ca_view = service.get_advice(po_id, li, "CA", supp)
        assert ca_view["pass"] == "COMPLETE", (po_id, li)
        pa_view = service.get_advice(po_id, li, "PA", ship)
        assert {p["payeeId"] for p in pa_view["paymentAdvices"]} == expected_payees, (po_id, li)

    # Scripted dispute on the first line item's price claim, driven to MA.
    po_id, li = refs[0]
    ca_view = service.get_advice(po_id, li, "CA", ship)
    target = {"caId": ca_view["caId"], "category": "PRICE_DISCREPANCY"}
    dispute_id = service.raise_dispute(target, "price looks wrong", ship)["disputeId"]
    service.add_comment(dispute_id, "verified against contract rates", supp)
    service.resolve_dispute(dispute_id, "ACCEPT", supp)
    resolved = service.get_advice(po_id, li, "CA", ship)
    assert resolved["claims"]["PRICE_DISCREPANCY"]["state"] == "MA"
    record = service.get_dispute(dispute_id, supp)
    assert record["status"] == "ACCEPTED"
    assert len(record["comments"]) == 2

    # Replay: identical world state, and the dispute's full audit trail is in
    # the block log as ordinary transactions.
    lines = log_path.read_text().splitlines()
    digest, blocks = replay_block_log(lines)
    assert digest == service.ledger.world_state_digest()
    assert blocks == len(service.ledger.blocks)
    actions = []
    for line in lines:
        for tx in json.loads(line)["transactions"]:
            if tx["contractFunction"] == "manageDispute" and tx["args"].get("disputeId") == dispute_id:
                actions.append(tx["args"]["action"])
    assert actions == ["RAISE", "COMMENT", "RESOLVE"]
