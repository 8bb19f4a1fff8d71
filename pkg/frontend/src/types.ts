// Shapes of the gateway REST API responses. The UI never recomputes any of
// these values; it renders what the server returns.

export type AdviceState = "CIP" | "OPEN" | "AR" | "MA" | "AA";

export type Role =
  | "SHIPPER_AP"
  | "SHIPPER_RECEIVING"
  | "SUPPLIER_AR"
  | "CARRIER_AR"
  | "ADMIN";

export type ClaimCategory =
  | "SHORT_DELIVERY"
  | "EXCESS_DELIVERY"
  | "PRICE_DISCREPANCY"
  | "GOODS_NOT_DELIVERED"
  | "TRANSPORT_DAMAGE";

export type DisputeStatus = "OPEN" | "ACCEPTED" | "REJECTED";

export interface MoneyValue {
  amount: number; // integer minor units
  currency: string;
}

export interface CommentView {
  author: string;
  org: string;
  timestamp: number;
  text: string;
  attachmentDigest: string | null;
}

export interface TargetRefView {
  caId?: string | null;
  category?: string | null;
  paId?: string | null;
}

export interface DisputeView {
  disputeId: string;
  target: TargetRefView;
  raisedByUser: string;
  raisedByOrg: string;
  reviewerOrg: string;
  status: DisputeStatus;
  comments: CommentView[];
}

export interface ClaimEntry {
  state: AdviceState;
  amount?: MoneyValue;
  quantityDelta?: number;
  issuedAt?: number | null;
  disputes?: DisputeView[];
}

export interface ClaimAdviceView {
  status: "OK" | "PASS1_PENDING";
  poId: string;
  lineItemId: string;
  caId?: string;
  scenario?: string;
  pass?: "PASS1_DONE" | "COMPLETE";
  aggregateState?: AdviceState;
  claims?: Record<string, ClaimEntry>;
  matchingReport?: string[];
  totalClaim?: MoneyValue;
}

export interface PaymentAdviceEntry {
  paId: string;
  poId: string;
  lineItemId: string;
  payeeId: string;
  payeeRole: string;
  grossAmount: MoneyValue;
  deductions: [string, MoneyValue][];
  netAmount: MoneyValue;
  state: AdviceState;
  warning: string | null;
  disputes?: DisputeView[];
}

export interface PaymentAdvicesView {
  status: "OK" | "NOT_GENERATED";
  poId: string;
  lineItemId: string;
  paymentAdvices: PaymentAdviceEntry[];
}

export interface ShipmentView {
  bol: string;
  containerNo: string;
  status: string;
  poRefs: [string, string][];
}

export interface TrackingEventView {
  eventId: string;
  bol: string;
  containerNo: string;
  eventType: string;
  occurredAt: number;
  payload: Record<string, unknown>;
}

export interface Session {
  role: Role;
  org: string;
}
