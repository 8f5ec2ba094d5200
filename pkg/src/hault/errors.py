"""Exception hierarchy.

Every error carries a stable machine-readable ``code`` and the CLI exit
status it maps to (2 validation, 3 proof, 4 state conflict, 5 io).
"""


class HaultError(Exception):
    code = "ERROR"
    exit_code = 2


class ValidationError(HaultError):
    code = "VALIDATION"
    exit_code = 2


class ProofError(HaultError):
    code = "PROOF"
    exit_code = 3


class StateConflict(HaultError):
    code = "STATE_CONFLICT"
    exit_code = 4


class StorageError(HaultError):
    code = "IO"
    exit_code = 5


# group / encoding
class IdentityPoint(ValidationError):
    code = "IDENTITY_POINT"


class InvalidPoint(ValidationError):
    code = "INVALID_POINT"


class InvalidEncoding(ValidationError):
    code = "INVALID_ENCODING"


class InvalidProfile(ValidationError):
    code = "INVALID_PROFILE"


class InvalidKey(ValidationError):
    code = "INVALID_KEY"


# mapping / notes
class OutOfRange(ValidationError):
    code = "OUT_OF_RANGE"


class SearchExhausted(HaultError):
    code = "SEARCH_EXHAUSTED"


class EmptyNoteSet(ValidationError):
    code = "EMPTY_NOTE_SET"


class InconsistentNotes(StateConflict):
    code = "INCONSISTENT_NOTES"


class OverflowedBalance(StateConflict):
    code = "OVERFLOWED_BALANCE"


# statement
class ProverRejected(ProofError):
    code = "PROVER_REJECTED"

    def __init__(self, failed):
        self.failed = list(failed)
        super().__init__("unsatisfied constraints: " + ", ".join(self.failed))


# ledger
class NotOwner(ValidationError):
    code = "NOT_OWNER"


class NotAuditor(ValidationError):
    code = "NOT_AUDITOR"


class NotAllowed(ValidationError):
    code = "NOT_ALLOWED"


class DuplicateUser(ValidationError):
    code = "DUPLICATE_USER"


class UnknownUser(ValidationError):
    code = "UNKNOWN_USER"


class KeyMismatch(ValidationError):
    code = "KEY_MISMATCH"


class StaleAggregate(StateConflict):
    code = "STALE_AGGREGATE"


class InvalidProof(ProofError):
    code = "INVALID_PROOF"


class EmptyWallet(ValidationError):
    code = "EMPTY_WALLET"


class NotTransparent(ValidationError):
    code = "NOT_TRANSPARENT"


class SupplyOverflow(ValidationError):
    code = "SUPPLY_OVERFLOW"


class NonZeroResidual(ValidationError):
    code = "NON_ZERO_RESIDUAL"


class AmountMismatch(ValidationError):
    code = "AMOUNT_MISMATCH"


class InsufficientNativeFunds(ValidationError):
    code = "INSUFFICIENT_NATIVE_FUNDS"


class VaultInsolvent(ValidationError):
    code = "VAULT_INSOLVENT"


class MalformedTransaction(ValidationError):
    code = "MALFORMED_TRANSACTION"


class ReplayMismatch(StateConflict):
    code = "REPLAY_MISMATCH"


# wallet
class InsufficientBalance(ValidationError):
    code = "INSUFFICIENT_BALANCE"
