import { ApiError, GatewayClient } from "./api.js";
import type {
  ClaimAdviceView,
  PaymentAdvicesView,
  Session,
  TargetRefView,
} from "./types.js";

// Holds the state for one <PO, line item> detail screen. Every action is a
// gateway call followed by a reload, so the screen always shows server truth.
export class AdviceController {
  claimView: ClaimAdviceView | null = null;
  paView: PaymentAdvicesView | null = null;
  error: string | null = null;

  private poId = "";
  private lineItemId = "";

  constructor(
    private readonly client: GatewayClient,
    readonly session: Session,
  ) {}

  async open(poId: string, lineItemId: string): Promise<void> {
    this.poId = poId;
    this.lineItemId = lineItemId;
    await this.refresh();
  }

  async refresh(): Promise<void> {
    this.error = null;
    try {
      this.claimView = await this.client.getClaimAdvice(this.poId, this.lineItemId);
    } catch (err) {
      this.claimView = null;
      this.surface(err);
      return;
    }
    try {
      this.paView = await this.client.getPaymentAdvices(this.poId, this.lineItemId);
    } catch (err) {
      this.paView = null;
      this.surface(err);
    }
  }

  async raiseDispute(target: TargetRefView, text: string): Promise<string | null> {
    return this.act(async () => (await this.client.raiseDispute(target, text)).disputeId);
  }

  async addComment(disputeId: string, text: string, attachmentDigest?: string): Promise<string | null> {
    return this.act(async () => {
      await this.client.addComment(disputeId, text, attachmentDigest);
      return disputeId;
    });
  }

  async resolveDispute(disputeId: string, verdict: "ACCEPT" | "REJECT"): Promise<string | null> {
    return this.act(async () => {
      await this.client.resolveDispute(disputeId, verdict);
      return disputeId;
    });
  }

  async finalizePa(paId: string): Promise<string | null> {
    return this.act(async () => {
      await this.client.finalizePa(paId);
      return paId;
    });
  }

  private async act(fn: () => Promise<string>): Promise<string | null> {
    this.error = null;
    let result: string | null = null;
    try {
      result = await fn();
    } catch (err) {
      this.surface(err);
    }
    // Refresh even after a failure: the screen must show the server's state.
    await this.reload();
    return result;
  }

  private async reload(): Promise<void> {
    const keep = this.error;
    await this.refresh();
    if (keep !== null) {
      this.error = keep;
    }
  }

  private surface(err: unknown): void {
    // API errors are rendered verbatim; anything else is stringified.
    this.error = err instanceof ApiError ? err.message : String(err);
  }
}
