"""Exception hierarchy shared across the platform."""


class TradeApError(Exception):
    """Base class for all platform errors."""


class ParseError(TradeApError):
    """Malformed interchange bytes; carries the byte offset of the failure."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class DocValidationError(TradeApError):
    """A document or argument violates an invariant; names the offending field."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class CurrencyMismatchError(TradeApError):
    """Arithmetic attempted across different currencies."""


class InvalidTransitionError(TradeApError):
    """State machine action not allowed from the current state."""


class ConflictError(TradeApError):
    """Concurrent or repeated mutation that contradicts committed data."""


class AccessError(TradeApError):
    """Caller is outside the scope or role required for the operation."""


class PreconditionError(TradeApError):
    """Operation invoked before its preconditions hold."""


class RoutingError(TradeApError):
    """Damage deduction cannot be routed to the designated payee."""


class NotFoundError(TradeApError):
    """Referenced entity does not exist."""


class ContractError(TradeApError):
    """Contract function rejected the transaction during endorsement."""


class IntegrityError(TradeApError):
    """Block log hash chain or replay divergence."""
