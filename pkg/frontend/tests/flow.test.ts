// Full dispute round trip against a mocked gateway: a supplier views a
// Pass-1 claim advice before delivery, raises a dispute, the shipper
// resolves it, and the claim lands in MA. All state lives in the fake
// server; the controllers only ever render what it returns.
import { describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import type { FetchFn } from "../src/api.js";
import { AdviceController } from "../src/controller.js";
import { canResolve } from "../src/permissions.js";
import { claimRows, paRows, totalLabel } from "../src/viewmodel.js";
import type {
  AdviceState,
  ClaimAdviceView,
  DisputeView,
  PaymentAdvicesView,
  Session,
} from "../src/types.js";

const ORG_BY_KEY: Record<string, string> = {
  "key-supp": "supplier1",
  "key-ship-ap": "shipper1",
};

class FakeGateway {
  claimStates: Record<string, AdviceState> = {
    SHORT_DELIVERY: "OPEN",
    PRICE_DISCREPANCY: "OPEN",
    GOODS_NOT_DELIVERED: "OPEN",
  };
  amounts: Record<string, number> = {
    SHORT_DELIVERY: 0,
    PRICE_DISCREPANCY: 18000,
    GOODS_NOT_DELIVERED: 5000,
  };
  disputes: DisputeView[] = [];
  paState: AdviceState = "AR";
  finalizeError: string | null = null;
  private seq = 1;

  fetchFn: FetchFn = async (url, init) => {
    const method = init?.method ?? "GET";
    const headers = init?.headers as Record<string, string>;
    const org = ORG_BY_KEY[headers["X-API-Key"]];
    const path = url.replace("http://gw", "");
    if (method === "GET" && path === "/pos/PO1/line-items/L1/claim-advice") {
      return this.json(200, this.claimView());
    }
    if (method === "GET" && path === "/pos/PO1/line-items/L1/payment-advices") {
      return this.json(200, this.paView());
    }
    if (method === "POST" && path === "/disputes") {
      const body = JSON.parse(String(init?.body));
      const dispute: DisputeView = {
        disputeId: `D${String(this.seq++).padStart(6, "0")}`,
        target: body.target,
        raisedByUser: "u1",
        raisedByOrg: org,
        reviewerOrg: org === "supplier1" ? "shipper1" : "supplier1",
        status: "OPEN",
        comments: [
          { author: "u1", org, timestamp: 0, text: body.text, attachmentDigest: null },
        ],
      };
      this.disputes.push(dispute);
      if (dispute.target.category) {
        this.claimStates[dispute.target.category] = "AR";
      }
      return this.json(200, { disputeId: dispute.disputeId, txId: "tx1" });
    }
    const resolve = path.match(/^\/disputes\/(D\d+)\/resolve$/);
    if (method === "POST" && resolve) {
      const dispute = this.disputes.find((d) => d.disputeId === resolve[1])!;
      if (dispute.reviewerOrg !== org) {
        return this.json(403, { error: `org '${org}' is not the reviewer of this dispute` });
      }
      const body = JSON.parse(String(init?.body));
      dispute.status = body.verdict === "ACCEPT" ? "ACCEPTED" : "REJECTED";
      if (dispute.target.category) {
        this.claimStates[dispute.target.category] = "MA";
      }
      return this.json(200, { disputeId: dispute.disputeId, txId: "tx2" });
    }
    const comment = path.match(/^\/disputes\/(D\d+)\/comments$/);
    if (method === "POST" && comment) {
      const dispute = this.disputes.find((d) => d.disputeId === comment[1])!;
      const body = JSON.parse(String(init?.body));
      dispute.comments.push({
        author: "u2", org, timestamp: 1, text: body.text,
        attachmentDigest: body.attachmentDigest ?? null,
      });
      return this.json(200, { disputeId: dispute.disputeId, txId: "tx3" });
    }
    if (method === "POST" && path === "/payment-advices/PA-PO1-L1-supplier1/finalize") {
      if (this.finalizeError) {
        return this.json(409, { error: this.finalizeError });
      }
      this.paState = "MA";
      return this.json(200, { paId: "PA-PO1-L1-supplier1", txId: "tx4" });
    }
    return this.json(404, { error: `unknown route ${method} ${path}` });
  };

  private claimView(): ClaimAdviceView {
    const claims: ClaimAdviceView["claims"] = {};
    for (const [category, state] of Object.entries(this.claimStates)) {
      claims[category] = {
        state,
        amount: { amount: this.amounts[category], currency: "USD" },
        quantityDelta: 0,
        issuedAt: 0,
        disputes: this.disputes.filter((d) => d.target.category === category),
      };
    }
    claims["TRANSPORT_DAMAGE"] = { state: "CIP" };
    return {
      status: "OK",
      poId: "PO1",
      lineItemId: "L1",
      caId: "CA-PO1-L1",
      scenario: "SHORT",
      pass: "PASS1_DONE",
      aggregateState: Object.values(this.claimStates).includes("AR") ? "AR" : "OPEN",
      claims,
      matchingReport: ["CI.P <= PO.P"],
    };
  }

  private paView(): PaymentAdvicesView {
    return {
      status: "OK",
      poId: "PO1",
      lineItemId: "L1",
      paymentAdvices: [
        {
          paId: "PA-PO1-L1-supplier1",
          poId: "PO1",
          lineItemId: "L1",
          payeeId: "supplier1",
          payeeRole: "SUPPLIER",
          grossAmount: { amount: 108000, currency: "USD" },
          deductions: [],
          netAmount: { amount: 80000, currency: "USD" },
          state: this.paState,
          warning: null,
          disputes: [],
        },
      ],
    };
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), { status });
  }
}

function makeController(gateway: FakeGateway, key: string, session: Session): AdviceController {
  const client = new GatewayClient({ baseUrl: "http://gw", apiKey: key, fetchFn: gateway.fetchFn });
  return new AdviceController(client, session);
}

const SUPPLIER: Session = { role: "SUPPLIER_AR", org: "supplier1" };
const SHIPPER: Session = { role: "SHIPPER_AP", org: "shipper1" };

describe("dispute round trip", () => {
  it("supplier raises on a pass-1 claim and the shipper resolves it to MA", async () => {
    const gateway = new FakeGateway();
    const supplier = makeController(gateway, "key-supp", SUPPLIER);
    await supplier.open("PO1", "L1");

    // Pre-delivery view: three computed categories OPEN, damage pending.
    const rows = claimRows(supplier.claimView!, SUPPLIER);
    expect(rows.map((r) => [r.category, r.stateChip, r.amountLabel])).toEqual([
      ["SHORT_DELIVERY", "OPEN", "0.00 USD"],
      ["PRICE_DISCREPANCY", "OPEN", "180.00 USD"],
      ["GOODS_NOT_DELIVERED", "OPEN", "50.00 USD"],
      ["TRANSPORT_DAMAGE", "CIP", "pending"],
    ]);
    expect(rows.find((r) => r.category === "TRANSPORT_DAMAGE")!.canDispute).toBe(false);
    expect(rows.find((r) => r.category === "PRICE_DISCREPANCY")!.canDispute).toBe(true);
    expect(totalLabel(supplier.claimView!)).toBe("pending");

    // Raise a dispute; the refreshed view comes from the fake server.
    const disputeId = await supplier.raiseDispute(
      { caId: "CA-PO1-L1", category: "PRICE_DISCREPANCY" },
      "price looks wrong",
    );
    expect(disputeId).toBe("D000001");
    expect(supplier.error).toBeNull();
    const raised = claimRows(supplier.claimView!, SUPPLIER)
      .find((r) => r.category === "PRICE_DISCREPANCY")!;
    expect(raised.stateChip).toBe("AR");
    expect(raised.canDispute).toBe(false);
    expect(raised.disputes[0].status).toBe("OPEN");

    // The raiser is not the reviewer: no resolve affordance, and a forced
    // attempt surfaces the server's refusal verbatim without changing state.
    expect(canResolve(SUPPLIER, raised.disputes[0])).toBe(false);
    await supplier.resolveDispute(disputeId!, "ACCEPT");
    expect(supplier.error).toBe("org 'supplier1' is not the reviewer of this dispute");
    expect(
      claimRows(supplier.claimView!, SUPPLIER)
        .find((r) => r.category === "PRICE_DISCREPANCY")!.stateChip,
    ).toBe("AR");

    // The shipper (reviewer) comments, then resolves.
    const shipper = makeController(gateway, "key-ship-ap", SHIPPER);
    await shipper.open("PO1", "L1");
    const thread = claimRows(shipper.claimView!, SHIPPER)
      .find((r) => r.category === "PRICE_DISCREPANCY")!.disputes[0];
    expect(canResolve(SHIPPER, thread)).toBe(true);
    await shipper.addComment(disputeId!, "agreed after checking rates", "sha256:abc");
    await shipper.resolveDispute(disputeId!, "ACCEPT");
    expect(shipper.error).toBeNull();

    // The claim lands in MA for every viewer, with the full thread intact.
    await supplier.refresh();
    const final = claimRows(supplier.claimView!, SUPPLIER)
      .find((r) => r.category === "PRICE_DISCREPANCY")!;
    expect(final.stateChip).toBe("MA");
    expect(final.disputes[0].status).toBe("ACCEPTED");
    expect(final.disputes[0].comments.map((c) => c.text)).toEqual([
      "price looks wrong",
      "agreed after checking rates",
    ]);
    expect(final.disputes[0].comments[1].attachmentDigest).toBe("sha256:abc");
  });

  it("finalize refusal is surfaced verbatim and the state stays AR", async () => {
    const gateway = new FakeGateway();
    gateway.finalizeError = "a payment advice with an open dispute cannot be finalized";
    const shipper = makeController(gateway, "key-ship-ap", SHIPPER);
    await shipper.open("PO1", "L1");
    const before = paRows(shipper.paView!, SHIPPER)[0];
    expect(before.canFinalize).toBe(true);

    await shipper.finalizePa(before.paId);
    expect(shipper.error).toBe("a payment advice with an open dispute cannot be finalized");
    expect(paRows(shipper.paView!, SHIPPER)[0].stateChip).toBe("AR");
  });

  it("successful finalize moves the advice to MA and removes actions", async () => {
    const gateway = new FakeGateway();
    const shipper = makeController(gateway, "key-ship-ap", SHIPPER);
    await shipper.open("PO1", "L1");
    await shipper.finalizePa("PA-PO1-L1-supplier1");
    expect(shipper.error).toBeNull();
    const row = paRows(shipper.paView!, SHIPPER)[0];
    expect(row.stateChip).toBe("MA");
    expect(row.canFinalize).toBe(false);
    expect(row.canDispute).toBe(false);
    expect(row.netLabel).toBe("800.00 USD");
  });
});
