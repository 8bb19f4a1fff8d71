import type {
  ClaimAdviceView,
  PaymentAdvicesView,
  ShipmentView,
  TargetRefView,
  TrackingEventView,
} from "./types.js";

// Server errors are surfaced verbatim; the UI renders `message` as-is.
export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchFn = (input: string, init?: RequestInit) => Promise<Response>;

export interface ClientConfig {
  baseUrl: string;
  apiKey: string;
  fetchFn?: FetchFn;
}

export class GatewayClient {
  private readonly baseUrl: string;
  private readonly apiKey: string;
  private readonly fetchFn: FetchFn;

  constructor(config: ClientConfig) {
    this.baseUrl = config.baseUrl.replace(/\/$/, "");
    this.apiKey = config.apiKey;
    this.fetchFn = config.fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const headers: Record<string, string> = { "X-API-Key": this.apiKey };
    const init: RequestInit = { method, headers };
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    const text = await response.text();
    const data = text ? JSON.parse(text) : null;
    if (!response.ok) {
      const message =
        data && typeof data.error === "string" ? data.error : text || response.statusText;
      throw new ApiError(response.status, message);
    }
    return data as T;
  }

  listShipments(): Promise<ShipmentView[]> {
    return this.request("GET", "/shipments");
  }

  shipmentEvents(bol: string, container: string): Promise<TrackingEventView[]> {
    return this.request("GET", `/shipments/${bol}/${container}/events`);
  }

  getClaimAdvice(poId: string, lineItemId: string): Promise<ClaimAdviceView> {
    return this.request("GET", `/pos/${poId}/line-items/${lineItemId}/claim-advice`);
  }

  getPaymentAdvices(poId: string, lineItemId: string): Promise<PaymentAdvicesView> {
    return this.request("GET", `/pos/${poId}/line-items/${lineItemId}/payment-advices`);
  }

  raiseDispute(target: TargetRefView, text: string): Promise<{ disputeId: string; txId: string }> {
    return this.request("POST", "/disputes", { target, text });
  }

  addComment(
    disputeId: string,
    text: string,
    attachmentDigest?: string,
  ): Promise<{ disputeId: string; txId: string }> {
    return this.request("POST", `/disputes/${disputeId}/comments`, { text, attachmentDigest });
  }

  resolveDispute(
    disputeId: string,
    verdict: "ACCEPT" | "REJECT",
  ): Promise<{ disputeId: string; txId: string }> {
    return this.request("POST", `/disputes/${disputeId}/resolve`, { verdict });
  }

  finalizePa(paId: string): Promise<{ paId: string; txId: string }> {
    return this.request("POST", `/payment-advices/${paId}/finalize`);
  }
}
