"""Contract-side state machine.

``Ledger.apply`` is the only mutation path.  Each transaction runs against a
copy of the state and is swapped in only if every check passes, so a rejected
transaction leaves the state untouched.  Native signatures are replaced by
the ``caller`` field of the transaction; proofs are bound to that caller
through the proof context tag.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum

from . import errors
from .elgamal import Ciphertext
from .errors import (
    AmountMismatch, DuplicateUser, EmptyWallet, InsufficientNativeFunds, InvalidKey,
    InvalidProof, KeyMismatch, MalformedTransaction, NonZeroResidual, NotAllowed,
    NotAuditor, NotOwner, NotTransparent, ReplayMismatch, StaleAggregate,
    SupplyOverflow, UnknownUser, VaultInsolvent,
)
from .group import Curve, Point, load_profile
from .notes import Note, aggregate_notes, decrypt_balance
from .statement import ProofBackend, TransferProof, TransferStatement, TransparentBackend

STATE_VERSION = 1


class TxKind(str, Enum):
    TRANSFER = "transfer"
    MINT = "mint"
    FORCE_TRANSFER = "force_transfer"
    DEPOSIT = "deposit"
    WITHDRAW = "withdraw"
    ADD_USER = "add_user"
    REMOVE_USER = "remove_user"


PROOF_KINDS = {TxKind.TRANSFER, TxKind.MINT, TxKind.FORCE_TRANSFER, TxKind.DEPOSIT, TxKind.WITHDRAW}

# kind -> auxiliary fields that must be set (all others must be None)
_REQUIRED = {
    TxKind.TRANSFER: {"recipient"},
    TxKind.MINT: {"recipient"},
    TxKind.FORCE_TRANSFER: {"source", "recipient"},
    TxKind.DEPOSIT: {"recipient", "amount"},
    TxKind.WITHDRAW: {"payout"},
    TxKind.ADD_USER: {"native_id", "pk"},
    TxKind.REMOVE_USER: {"native_id"},
}
_AUX = ("recipient", "source", "payout", "amount", "native_id", "pk")


def proof_context(kind, caller: str) -> bytes:
    """Tag binding a proof to the transaction kind and the calling account."""
    return f"{TxKind(kind).value}:{caller}".encode()


@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    caller: str
    statement: TransferStatement | None = None
    proof: TransferProof | None = None
    recipient: str | None = None
    source: str | None = None
    payout: str | None = None
    amount: int | None = None
    native_id: str | None = None
    pk: Point | None = None

    def validate_shape(self) -> None:
        kind = TxKind(self.kind)
        needs_proof = kind in PROOF_KINDS
        if needs_proof != (self.statement is not None):
            raise MalformedTransaction(f"{kind.value}: statement {'missing' if needs_proof else 'not allowed'}")
        required = _REQUIRED[kind]
        for name in _AUX:
            present = getattr(self, name) is not None
            if present != (name in required):
                raise MalformedTransaction(f"{kind.value}: field {name!r} {'missing' if not present else 'not allowed'}")

    def to_dict(self, include_proof: bool = True) -> dict:
        doc = {"kind": TxKind(self.kind).value, "caller": self.caller}
        if self.statement is not None:
            doc["statement"] = self.statement.to_dict()
        if include_proof and self.proof is not None:
            doc["proof"] = self.proof.to_dict()
        for name in _AUX:
            value = getattr(self, name)
            if value is not None:
                doc[name] = value.hex() if name == "pk" else value
        return doc

    @classmethod
    def from_dict(cls, curve: Curve, doc: dict) -> "Transaction":
        kwargs = {"kind": TxKind(doc["kind"]), "caller": doc["caller"]}
        if "statement" in doc:
            kwargs["statement"] = TransferStatement.from_dict(curve, doc["statement"])
        if "proof" in doc:
            kwargs["proof"] = TransferProof.from_dict(doc["proof"])
        for name in _AUX:
            if name in doc:
                kwargs[name] = curve.decode(bytes.fromhex(doc[name])) if name == "pk" else doc[name]
        return cls(**kwargs)


@dataclass
class UserRecord:
    native_id: str
    hault_pk: Point
    enabled: bool = True
    notes: list[Note] = field(default_factory=list)
    audit_notes: list[Note] = field(default_factory=list)

    def copy(self) -> "UserRecord":
        return UserRecord(self.native_id, self.hault_pk, self.enabled, list(self.notes), list(self.audit_notes))


@dataclass
class LedgerState:
    profile: Curve
    b: int
    owner: str
    auditor_native: str
    auditor_pk: Point
    users: dict[str, UserRecord] = field(default_factory=dict)
    total_supply: int = 0
    native_accounts: dict[str, int] = field(default_factory=dict)
    vault_native_balance: int = 0
    seq: int = 0

    def copy(self) -> "LedgerState":
        new = copy.copy(self)
        new.users = {k: u.copy() for k, u in self.users.items()}
        new.native_accounts = dict(self.native_accounts)
        return new

    def to_dict(self) -> dict:
        return {
            "version": STATE_VERSION,
            "profile": self.profile.name,
            "profile_params": self.profile.to_dict(),
            "b": self.b,
            "owner": self.owner,
            "auditor": {"native_id": self.auditor_native, "pk": self.auditor_pk.hex()},
            "total_supply": self.total_supply,
            "vault_native_balance": self.vault_native_balance,
            "native_accounts": dict(sorted(self.native_accounts.items())),
            "seq": self.seq,
            "users": {
                uid: {
                    "pk": u.hault_pk.hex(),
                    "enabled": u.enabled,
                    "notes": [n.hex() for n in u.notes],
                    "audit_notes": [n.hex() for n in u.audit_notes],
                }
                for uid, u in sorted(self.users.items())
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "LedgerState":
        if doc.get("version") != STATE_VERSION:
            raise errors.StorageError(f"unsupported state version {doc.get('version')!r}")
        if "profile_params" in doc:
            curve = Curve.from_dict(doc["profile_params"])
        else:
            curve = load_profile(doc["profile"])
        users = {}
        for uid, u in doc["users"].items():
            users[uid] = UserRecord(
                uid,
                curve.decode(bytes.fromhex(u["pk"])),
                bool(u["enabled"]),
                [Note.fromhex(curve, h) for h in u["notes"]],
                [Note.fromhex(curve, h) for h in u["audit_notes"]],
            )
        return cls(
            profile=curve,
            b=int(doc["b"]),
            owner=doc["owner"],
            auditor_native=doc["auditor"]["native_id"],
            auditor_pk=curve.decode(bytes.fromhex(doc["auditor"]["pk"])),
            users=users,
            total_supply=int(doc["total_supply"]),
            native_accounts={k: int(v) for k, v in doc["native_accounts"].items()},
            vault_native_balance=int(doc["vault_native_balance"]),
            seq=int(doc.get("seq", 0)),
        )

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()


class Ledger:
    """Single-writer ledger.  ``log`` holds a genesis record followed by one
    record per applied transaction (proofs are never persisted)."""

    def __init__(self, state: LedgerState, backend: ProofBackend | None = None, log: list[dict] | None = None):
        self._state = state
        self.backend = backend or TransparentBackend(state.b)
        self.log = log if log is not None else []

    @classmethod
    def create(cls, profile: Curve, b: int, owner: str, owner_pk: Point,
               auditor_native: str, auditor_pk: Point, native_accounts: dict[str, int] | None = None,
               backend: ProofBackend | None = None) -> "Ledger":
        profile.check_value_bits(b)
        for pk in (owner_pk, auditor_pk):
            if not profile.check_point(pk):
                raise InvalidKey("owner and auditor keys must be valid subgroup points")
        if any(v < 0 for v in (native_accounts or {}).values()):
            raise errors.ValidationError("native balances must be non-negative")
        state = LedgerState(profile, b, owner, auditor_native, auditor_pk,
                            native_accounts=dict(native_accounts or {}))
        state.users[owner] = UserRecord(owner, owner_pk)
        genesis = {
            "kind": "genesis",
            "profile_params": profile.to_dict(),
            "b": b,
            "owner": owner,
            "owner_pk": owner_pk.hex(),
            "auditor": auditor_native,
            "auditor_pk": auditor_pk.hex(),
            "native_accounts": dict(sorted(state.native_accounts.items())),
        }
        return cls(state, backend, [genesis])

    @classmethod
    def from_genesis(cls, record: dict, backend: ProofBackend | None = None) -> "Ledger":
        if record.get("kind") != "genesis":
            raise ReplayMismatch("log does not start with a genesis record")
        curve = Curve.from_dict(record["profile_params"])
        return cls.create(
            curve, int(record["b"]), record["owner"], curve.decode(bytes.fromhex(record["owner_pk"])),
            record["auditor"], curve.decode(bytes.fromhex(record["auditor_pk"])),
            {k: int(v) for k, v in record["native_accounts"].items()}, backend,
        )

    @classmethod
    def replay(cls, records: list[dict], backend: ProofBackend | None = None) -> "Ledger":
        """Rebuild a ledger from its log.  Proofs are not logged, so replay
        re-runs every contract check except proof verification, and checks
        each statement against its recorded digest."""
        if not records:
            raise ReplayMismatch("empty log")
        ledger = cls.from_genesis(records[0], backend)
        curve = ledger.curve
        for rec in records[1:]:
            tx = Transaction.from_dict(curve, rec["tx"])
            if tx.statement is not None and tx.statement.digest().hex() != rec.get("statement_digest"):
                raise ReplayMismatch(f"statement digest mismatch at seq {rec.get('seq')}")
            ledger.apply(tx, replay=True)
            if ledger.state.seq != rec.get("seq"):
                raise ReplayMismatch(f"sequence mismatch at seq {rec.get('seq')}")
        return ledger

    # -- views --------------------------------------------------------------

    @property
    def state(self) -> LedgerState:
        return self._state

    @property
    def curve(self) -> Curve:
        return self._state.profile

    @property
    def b(self) -> int:
        return self._state.b

    def user(self, native_id: str) -> UserRecord:
        try:
            return self._state.users[native_id]
        except KeyError:
            raise UnknownUser(f"unknown user {native_id!r}") from None

    def notes_of(self, native_id: str) -> list[Note]:
        return list(self.user(native_id).notes)

    def audit_notes_of(self, native_id: str) -> list[Note]:
        return list(self.user(native_id).audit_notes)

    def audit_decrypt(self, sk_D: int, native_id: str) -> int:
        notes = self.user(native_id).audit_notes
        if not notes:
            return 0
        return decrypt_balance(sk_D, notes, self.b).value

    def snapshot(self) -> LedgerState:
        return self._state.copy()

    def restore(self, state: LedgerState) -> None:
        self._state = state.copy()

    # -- application --------------------------------------------------------

    def apply(self, tx: Transaction, *, replay: bool = False) -> dict:
        """Apply one transaction atomically and return its log record."""
        tx.validate_shape()
        work = self._state.copy()
        handler = getattr(self, f"_apply_{TxKind(tx.kind).value}")
        handler(work, tx, replay)
        work.seq += 1
        record = {
            "seq": work.seq,
            "kind": TxKind(tx.kind).value,
            "caller": tx.caller,
            "statement_digest": tx.statement.digest().hex() if tx.statement is not None else None,
            "tx": tx.to_dict(include_proof=False),
        }
        self._state = work
        self.log.append(record)
        return record

    def _verify(self, tx: Transaction, replay: bool) -> None:
        if replay:
            return
        if tx.proof is None or not self.backend.verify(tx.statement, tx.proof, proof_context(tx.kind, tx.caller)):
            raise InvalidProof(f"{TxKind(tx.kind).value}: proof does not verify")

    @staticmethod
    def _enabled(s: LedgerState, native_id: str) -> UserRecord:
        u = s.users.get(native_id)
        if u is None or not u.enabled:
            raise NotAllowed(f"{native_id!r} is not allowed to transact")
        return u

    @staticmethod
    def _expect_key(actual: Point, expected: Point, what: str) -> None:
        if actual != expected:
            raise KeyMismatch(f"statement {what} does not match the registered key")

    @staticmethod
    def _check_aggregate(notes: list[Note], claimed: Ciphertext) -> None:
        if not notes:
            raise EmptyWallet("sender holds no notes")
        if aggregate_notes(notes) != claimed:
            raise StaleAggregate("old-balance ciphertext does not match the current note set")

    def _transparent_amount(self, ct: Ciphertext) -> int:
        if not ct.C1.is_identity or ct.C2.is_identity:
            raise NotTransparent("recipient amount ciphertext is not transparently encrypted")
        return self.curve.lsb(ct.C2, self.b)

    def _apply_add_user(self, s: LedgerState, tx: Transaction, replay: bool) -> None:
        if tx.caller != s.owner:
            raise NotOwner("only the owner can add users")
        if tx.native_id in s.users:
            raise DuplicateUser(f"{tx.native_id!r} is already on the allowlist")
        if not s.profile.check_point(tx.pk):
            raise InvalidKey("hault public key is not a valid subgroup point")
        s.users[tx.native_id] = UserRecord(tx.native_id, tx.pk)

    def _apply_remove_user(self, s: LedgerState, tx: Transaction, replay: bool) -> None:
        if tx.caller != s.owner:
            raise NotOwner("only the owner can remove users")
        if tx.native_id not in s.users:
            raise UnknownUser(f"unknown user {tx.native_id!r}")
        s.users[tx.native_id].enabled = False

    def _apply_transfer(self, s: LedgerState, tx: Transaction, replay: bool) -> None:
        st = tx.statement
        sender = self._enabled(s, tx.caller)
        recipient = self._enabled(s, tx.recipient)
        self._expect_key(st.pk_A, sender.hault_pk, "pk_A")
        self._expect_key(st.pk_B, recipient.hault_pk, "pk_B")
        self._expect_key(st.pk_D, s.auditor_pk, "pk_D")
        self._check_aggregate(sender.notes, st.V_encA_old)
        self._verify(tx, replay)
        sender.notes = [Note(st.v_encA_new, st.V_encA_new)]
        sender.audit_notes = [Note(st.v_encD_new, st.V_encD_new)]
        recipient.notes.append(Note(st.w_encB, st.W_encB))
        recipient.audit_notes.append(Note(st.w_encD, st.W_encD))

    def _mint_checks(self, s: LedgerState, tx: Transaction, replay: bool) -> tuple[UserRecord, int]:
        st = tx.statement
        if tx.caller != s.owner:
            raise NotOwner(f"only the owner can {TxKind(tx.kind).value}")
        self._expect_key(st.pk_A, s.users[s.owner].hault_pk, "pk_A")
        recipient = self._enabled(s, tx.recipient)
        self._expect_key(st.pk_B, recipient.hault_pk, "pk_B")
        self._expect_key(st.pk_D, s.auditor_pk, "pk_D")
        if not st.w_encB.C1.is_identity:
            raise NotTransparent("minted note must be transparently encrypted (C1 = O)")
        self._verify(tx, replay)
        w = self._transparent_amount(st.w_encB)
        if s.total_supply + w >= (1 << s.b):
            raise SupplyOverflow(f"supply {s.total_supply} + {w} would reach 2^{s.b}")
        return recipient, w

    def _apply_mint(self, s: LedgerState, tx: Transaction, replay: bool) -> None:
        recipient, w = self._mint_checks(s, tx, replay)
        st = tx.statement
        recipient.notes.append(Note(st.w_encB, st.W_encB))
        recipient.audit_notes.append(Note(st.w_encD, st.W_encD))
        s.total_supply += w

    def _apply_deposit(self, s: LedgerState, tx: Transaction, replay: bool) -> None:
        if tx.amount < 0:
            raise AmountMismatch("attached amount must be non-negative")
        recipient, w = self._mint_checks(s, tx, replay)
        if w != tx.amount:
            raise AmountMismatch(f"attached {tx.amount} but note encodes {w}")
        if s.native_accounts.get(tx.caller, 0) < tx.amount:
            raise InsufficientNativeFunds(f"{tx.caller!r} cannot attach {tx.amount}")
        st = tx.statement
        recipient.notes.append(Note(st.w_encB, st.W_encB))
        recipient.audit_notes.append(Note(st.w_encD, st.W_encD))
        s.total_supply += w
        s.native_accounts[tx.caller] -= tx.amount
        s.vault_native_balance += tx.amount

    def _apply_withdraw(self, s: LedgerState, tx: Transaction, replay: bool) -> None:
        st = tx.statement
        if tx.caller != s.owner:
            raise NotOwner("only the owner can withdraw")
        owner = s.users[s.owner]
        self._expect_key(st.pk_A, owner.hault_pk, "pk_A")
        self._expect_key(st.pk_D, s.auditor_pk, "pk_D")
        self._check_aggregate(owner.notes, st.V_encA_old)
        if not st.w_encB.C1.is_identity:
            raise NotTransparent("withdrawn amount must be transparently encrypted (C1 = O)")
        self._verify(tx, replay)
        amount = self._transparent_amount(st.w_encB)
        if s.vault_native_balance < amount:
            raise VaultInsolvent(f"vault holds {s.vault_native_balance}, cannot pay {amount}")
        owner.notes = [Note(st.v_encA_new, st.V_encA_new)]
        owner.audit_notes = [Note(st.v_encD_new, st.V_encD_new)]
        s.native_accounts[tx.payout] = s.native_accounts.get(tx.payout, 0) + amount
        s.vault_native_balance -= amount
        s.total_supply -= amount

    def _apply_force_transfer(self, s: LedgerState, tx: Transaction, replay: bool) -> None:
        st = tx.statement
        if tx.caller != s.auditor_native:
            raise NotAuditor("only the auditor can force transfers")
        if tx.source not in s.users:
            raise UnknownUser(f"unknown user {tx.source!r}")
        source = s.users[tx.source]
        target = self._enabled(s, tx.recipient)
        self._expect_key(st.pk_A, s.auditor_pk, "pk_A")
        self._expect_key(st.pk_D, s.auditor_pk, "pk_D")
        self._expect_key(st.pk_B, target.hault_pk, "pk_B")
        self._check_aggregate(source.audit_notes, st.V_encA_old)
        self._verify(tx, replay)
        residual = st.v_encD_new
        if not residual.C1.is_identity or residual.C2.is_identity or self.curve.lsb(residual.C2, s.b) != 0:
            raise NonZeroResidual("force transfer must move the whole balance")
        source.notes = []
        source.audit_notes = []
        target.notes.append(Note(st.w_encB, st.W_encB))
        target.audit_notes.append(Note(st.w_encD, st.W_encD))

    # -- convenience wrappers -------------------------------------------------

    def add_user(self, caller: str, native_id: str, pk: Point) -> dict:
        return self.apply(Transaction(TxKind.ADD_USER, caller, native_id=native_id, pk=pk))

    def remove_user(self, caller: str, native_id: str) -> dict:
        return self.apply(Transaction(TxKind.REMOVE_USER, caller, native_id=native_id))

    def apply_transfer(self, caller, recipient, st, proof) -> dict:
        return self.apply(Transaction(TxKind.TRANSFER, caller, st, proof, recipient=recipient))

    def apply_mint(self, caller, recipient, st, proof) -> dict:
        return self.apply(Transaction(TxKind.MINT, caller, st, proof, recipient=recipient))

    def apply_force_transfer(self, caller, source, target, st, proof) -> dict:
        return self.apply(Transaction(TxKind.FORCE_TRANSFER, caller, st, proof, recipient=target, source=source))

    def apply_deposit(self, caller, recipient, st, proof, attached_amount: int) -> dict:
        return self.apply(Transaction(TxKind.DEPOSIT, caller, st, proof, recipient=recipient, amount=attached_amount))

    def apply_withdraw(self, caller, payout, st, proof) -> dict:
        return self.apply(Transaction(TxKind.WITHDRAW, caller, st, proof, payout=payout))
