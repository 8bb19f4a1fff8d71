"""Claim and payment advice state machines, disputes, and approval sweeps.

Claims move CIP -> OPEN (issue) -> AR (dispute raised) -> MA (dispute
resolved), or OPEN -> AA when the auto-approval sweep finds no dispute
within the waiting period. Payment advices move CIP -> AR (issue) -> MA
(explicit finalization by the shipper); disputes on a PA keep it in AR and
there is no auto-approval for PAs. MA and AA are terminal.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional

from .errors import (
    AccessError,
    ConflictError,
    DocValidationError,
    InvalidTransitionError,
    PreconditionError,
)


class AdviceState(str, Enum):
    CIP = "CIP"  # computation in progress
    OPEN = "OPEN"
    AR = "AR"  # awaiting resolution
    MA = "MA"  # manually approved
    AA = "AA"  # auto approved


class DisputeStatus(str, Enum):
    OPEN = "OPEN"
    ACCEPTED = "ACCEPTED"
    REJECTED = "REJECTED"


class Trigger(str, Enum):
    CA_ISSUED = "CA_ISSUED"
    PA_ISSUED = "PA_ISSUED"
    DISPUTE_RAISED = "DISPUTE_RAISED"
    DISPUTE_RESOLVED = "DISPUTE_RESOLVED"
    AUTO_APPROVED = "AUTO_APPROVED"
    FINALIZED = "FINALIZED"


# Allowed (state, action) -> next state, exactly the advice FSMs.
CA_TRANSITIONS: dict[tuple[AdviceState, str], AdviceState] = {
    (AdviceState.CIP, "issue"): AdviceState.OPEN,
    (AdviceState.OPEN, "raise_dispute"): AdviceState.AR,
    (AdviceState.AR, "resolve_dispute"): AdviceState.MA,
    (AdviceState.OPEN, "auto_approve"): AdviceState.AA,
}

PA_TRANSITIONS: dict[tuple[AdviceState, str], AdviceState] = {
    (AdviceState.CIP, "issue"): AdviceState.AR,
    (AdviceState.AR, "finalize"): AdviceState.MA,
    # Disputes on a PA do not move it; resolution returns it to AR and the
    # shipper must finalize explicitly.
    (AdviceState.AR, "raise_dispute"): AdviceState.AR,
    (AdviceState.AR, "resolve_dispute"): AdviceState.AR,
}

PA_STATES = (AdviceState.CIP, AdviceState.AR, AdviceState.MA)

CA_ACTIONS = ("issue", "raise_dispute", "resolve_dispute", "auto_approve")
PA_ACTIONS = ("issue", "raise_dispute", "resolve_dispute", "finalize")


def ca_transition(state: AdviceState, action: str) -> AdviceState:
    try:
        return CA_TRANSITIONS[(state, action)]
    except KeyError:
        raise InvalidTransitionError(f"claim: no transition {state.value} --{action}-->")


def pa_transition(state: AdviceState, action: str) -> AdviceState:
    if state not in PA_STATES:
        raise InvalidTransitionError(f"payment advice: invalid state {state.value}")
    try:
        return PA_TRANSITIONS[(state, action)]
    except KeyError:
        raise InvalidTransitionError(f"payment advice: no transition {state.value} --{action}-->")


@dataclass(frozen=True)
class LifecycleConfig:
    auto_approve_waiting_period: float = 7 * 86400.0  # seconds

    def __post_init__(self):
        if self.auto_approve_waiting_period <= 0:
            raise DocValidationError("autoApproveWaitingPeriod", "must be > 0")


@dataclass(frozen=True)
class TargetRef:
    """Either one claim category of a CA, or one PA."""

    ca_id: Optional[str] = None
    category: Optional[str] = None
    pa_id: Optional[str] = None

    def __post_init__(self):
        if (self.pa_id is None) == (self.ca_id is None):
            raise DocValidationError("target", "exactly one of caId or paId required")
        if self.ca_id is not None and self.category is None:
            raise DocValidationError("target", "claim disputes require a category")

    @property
    def key(self) -> str:
        if self.pa_id is not None:
            return f"pa:{self.pa_id}"
        return f"ca:{self.ca_id}:{self.category}"

    def to_dict(self) -> dict:
        return {"caId": self.ca_id, "category": self.category, "paId": self.pa_id}

    @classmethod
    def from_dict(cls, data: dict) -> "TargetRef":
        return cls(data.get("caId"), data.get("category"), data.get("paId"))


@dataclass(frozen=True)
class Comment:
    author: str
    org: str
    timestamp: float
    text: str
    attachment_digest: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "author": self.author,
            "org": self.org,
            "timestamp": self.timestamp,
            "text": self.text,
            "attachmentDigest": self.attachment_digest,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Comment":
        return cls(
            data["author"], data["org"], data["timestamp"], data["text"], data["attachmentDigest"]
        )


@dataclass
class Dispute:
    dispute_id: str
    target: TargetRef
    raised_by_user: str
    raised_by_org: str
    reviewer_org: str
    status: DisputeStatus = DisputeStatus.OPEN
    comments: list[Comment] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "disputeId": self.dispute_id,
            "target": self.target.to_dict(),
            "raisedByUser": self.raised_by_user,
            "raisedByOrg": self.raised_by_org,
            "reviewerOrg": self.reviewer_org,
            "status": self.status.value,
            "comments": [c.to_dict() for c in self.comments],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Dispute":
        return cls(
            dispute_id=data["disputeId"],
            target=TargetRef.from_dict(data["target"]),
            raised_by_user=data["raisedByUser"],
            raised_by_org=data["raisedByOrg"],
            reviewer_org=data["reviewerOrg"],
            status=DisputeStatus(data["status"]),
            comments=[Comment.from_dict(c) for c in data["comments"]],
        )


def issue_claim(claim, now: float) -> Trigger:
    """CIP -> OPEN once the claim's computation is complete."""
    claim.state = ca_transition(claim.state, "issue")
    claim.issued_at = now
    return Trigger.CA_ISSUED


def issue_pa(pa) -> Trigger:
    """CIP -> AR as the payment advice gets issued."""
    pa.state = pa_transition(pa.state, "issue")
    return Trigger.PA_ISSUED


def raise_dispute_on_claim(claim, dispute: Dispute) -> Trigger:
    if dispute.status is not DisputeStatus.OPEN:
        raise PreconditionError("new dispute must be OPEN")
    claim.state = ca_transition(claim.state, "raise_dispute")
    return Trigger.DISPUTE_RAISED


def raise_dispute_on_pa(pa, dispute: Dispute) -> Trigger:
    if pa.state is AdviceState.MA:
        raise PreconditionError("disputes cannot be allowed on a finalized payment advice")
    pa.state = pa_transition(pa.state, "raise_dispute")
    return Trigger.DISPUTE_RAISED


def add_comment(
    dispute: Dispute,
    author: str,
    org: str,
    text: str,
    now: float,
    attachment_digest: Optional[str] = None,
) -> Comment:
    if dispute.status is not DisputeStatus.OPEN:
        raise PreconditionError("cannot comment on a resolved dispute")
    comment = Comment(author, org, now, text, attachment_digest)
    dispute.comments.append(comment)
    return comment


def resolve_dispute(dispute: Dispute, reviewer_org: str, verdict: str, target) -> Trigger:
    """Reviewer accepts/rejects; a disputed claim moves AR -> MA, a PA stays AR."""
    if dispute.status is not DisputeStatus.OPEN:
        raise PreconditionError("dispute already resolved")
    if reviewer_org != dispute.reviewer_org:
        raise AccessError(f"only {dispute.reviewer_org} may resolve this dispute")
    if verdict not in ("ACCEPT", "REJECT"):
        raise DocValidationError("verdict", "must be ACCEPT or REJECT")
    dispute.status = DisputeStatus.ACCEPTED if verdict == "ACCEPT" else DisputeStatus.REJECTED
    if dispute.target.pa_id is not None:
        target.state = pa_transition(target.state, "resolve_dispute")
    else:
        target.state = ca_transition(target.state, "resolve_dispute")
    return Trigger.DISPUTE_RESOLVED


def auto_approve(claims: Iterable, now: float, config: LifecycleConfig) -> list:
    """Sweep: every OPEN claim past the waiting period moves to AA. Idempotent."""
    changed = []
    for claim in claims:
        if claim.state is AdviceState.OPEN and claim.issued_at is not None:
            if now - claim.issued_at >= config.auto_approve_waiting_period:
                claim.state = ca_transition(claim.state, "auto_approve")
                changed.append(claim)
    return changed


def finalize_pa(pa, actor_org: str, shipper_org: str, has_open_dispute: bool) -> Trigger:
    if actor_org != shipper_org:
        raise AccessError("only the shipper may finalize a payment advice")
    if has_open_dispute:
        raise PreconditionError("cannot finalize while a dispute is open")
    pa.state = pa_transition(pa.state, "finalize")
    return Trigger.FINALIZED


_STATE_RANK = {
    AdviceState.CIP: 0,
    AdviceState.AR: 1,
    AdviceState.OPEN: 2,
    AdviceState.MA: 3,
    AdviceState.AA: 3,
}


def aggregate_ca_state(states: Iterable[AdviceState]) -> AdviceState:
    """Least-advanced state across categories, CIP < AR < OPEN < (MA = AA).

    When the least-advanced rank is terminal, MA wins over AA so that any
    manual review remains visible in the summary.
    """
    states = list(states)
    if not states:
        raise DocValidationError("states", "must be non-empty")
    rank = min(_STATE_RANK[s] for s in states)
    lowest = [s for s in states if _STATE_RANK[s] == rank]
    if AdviceState.MA in lowest:
        return AdviceState.MA
    return lowest[0]


_dispute_seq = itertools.count(1)


def new_dispute(
    target: TargetRef,
    raised_by_user: str,
    raised_by_org: str,
    reviewer_org: str,
    text: str,
    now: float,
    dispute_id: Optional[str] = None,
) -> Dispute:
    if raised_by_org == reviewer_org:
        raise ConflictError("raiser and reviewer must be different organizations")
    dispute = Dispute(
        dispute_id=dispute_id or f"D{next(_dispute_seq):06d}",
        target=target,
        raised_by_user=raised_by_user,
        raised_by_org=raised_by_org,
        reviewer_org=reviewer_org,
    )
    dispute.comments.append(Comment(raised_by_user, raised_by_org, now, text))
    return dispute
