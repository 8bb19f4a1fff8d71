import { formatMinorUnits } from "./format.js";
import { canFinalize, canRaiseClaimDispute, canRaisePaDispute } from "./permissions.js";
import type {
  AdviceState,
  ClaimAdviceView,
  DisputeView,
  PaymentAdviceEntry,
  PaymentAdvicesView,
  Session,
} from "./types.js";

const CATEGORY_ORDER = [
  "SHORT_DELIVERY",
  "EXCESS_DELIVERY",
  "PRICE_DISCREPANCY",
  "GOODS_NOT_DELIVERED",
  "TRANSPORT_DAMAGE",
];

export interface ClaimRow {
  category: string;
  stateChip: AdviceState;
  amountLabel: string; // "pending" until the claim has been computed
  pending: boolean;
  canDispute: boolean;
  disputes: DisputeView[];
}

export interface PaRow {
  paId: string;
  payeeId: string;
  payeeRole: string;
  grossLabel: string;
  netLabel: string;
  stateChip: AdviceState;
  warning: string | null;
  canDispute: boolean;
  canFinalize: boolean;
  disputes: DisputeView[];
}

export function claimRows(view: ClaimAdviceView, session: Session): ClaimRow[] {
  const claims = view.claims ?? {};
  const rows: ClaimRow[] = [];
  for (const category of CATEGORY_ORDER) {
    const entry = claims[category];
    if (!entry) {
      continue;
    }
    const pending = entry.amount === undefined;
    rows.push({
      category,
      stateChip: entry.state,
      amountLabel: pending ? "pending" : formatMinorUnits(entry.amount!),
      pending,
      canDispute: !pending && canRaiseClaimDispute(session, entry),
      disputes: entry.disputes ?? [],
    });
  }
  return rows;
}

export function paRows(view: PaymentAdvicesView, session: Session): PaRow[] {
  return view.paymentAdvices.map((pa: PaymentAdviceEntry) => ({
    paId: pa.paId,
    payeeId: pa.payeeId,
    payeeRole: pa.payeeRole,
    grossLabel: formatMinorUnits(pa.grossAmount),
    netLabel: formatMinorUnits(pa.netAmount),
    stateChip: pa.state,
    warning: pa.warning,
    canDispute: canRaisePaDispute(session, pa),
    canFinalize: canFinalize(session, pa),
    disputes: pa.disputes ?? [],
  }));
}

export function totalLabel(view: ClaimAdviceView): string {
  return view.totalClaim ? formatMinorUnits(view.totalClaim) : "pending";
}
