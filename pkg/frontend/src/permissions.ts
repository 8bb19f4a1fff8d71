import type {
  AdviceState,
  ClaimEntry,
  DisputeView,
  PaymentAdviceEntry,
  Session,
} from "./types.js";

// Advice lifecycle transition tables, mirrored from the server. Buttons are
// shown only for (role, state) pairs that can possibly succeed; the server
// remains the final authority.
export const CA_TRANSITIONS: Record<string, AdviceState> = {
  "CIP:issue": "OPEN",
  "OPEN:raise_dispute": "AR",
  "AR:resolve_dispute": "MA",
  "OPEN:auto_approve": "AA",
};

export const PA_TRANSITIONS: Record<string, AdviceState> = {
  "CIP:issue": "AR",
  "AR:finalize": "MA",
  "AR:raise_dispute": "AR",
  "AR:resolve_dispute": "AR",
};

const DISPUTE_ROLES = new Set(["SHIPPER_AP", "SUPPLIER_AR", "CARRIER_AR"]);
const FINALIZE_ROLES = new Set(["SHIPPER_AP", "ADMIN"]);

export function canRaiseClaimDispute(session: Session, claim: ClaimEntry): boolean {
  return "OPEN:raise_dispute" in CA_TRANSITIONS
    && claim.state === "OPEN"
    && DISPUTE_ROLES.has(session.role);
}

export function canRaisePaDispute(session: Session, pa: PaymentAdviceEntry): boolean {
  return "AR:raise_dispute" in PA_TRANSITIONS
    && pa.state === "AR"
    && DISPUTE_ROLES.has(session.role);
}

export function canComment(session: Session, dispute: DisputeView): boolean {
  return dispute.status === "OPEN";
}

export function canResolve(session: Session, dispute: DisputeView): boolean {
  return dispute.status === "OPEN" && dispute.reviewerOrg === session.org;
}

export function canFinalize(session: Session, pa: PaymentAdviceEntry): boolean {
  const hasOpenDispute = (pa.disputes ?? []).some((d) => d.status === "OPEN");
  return FINALIZE_ROLES.has(session.role) && pa.state === "AR" && !hasOpenDispute;
}
