"""Client-side construction of statements, witnesses and transactions.

All builders share one core: map the amount both ways, derive the new
balance, and encrypt every public ciphertext with randomness recorded in the
witness.  Mint and deposit use k = 0 for the recipient's recoverable
ciphertext; force transfers use k = 0 for the auditor's new-balance
ciphertext so the ledger can check the residual is zero.

Wallet files store the secret key in plain hex.  This is a research artifact:
do not put real funds behind these keys.
"""

from __future__ import annotations

import json
import secrets
from dataclasses import dataclass, field
from pathlib import Path

from .elgamal import Ciphertext, Keypair, encrypt
from .errors import EmptyWallet, InsufficientBalance, InvalidKey, OutOfRange, StorageError
from .group import Curve, Point, load_profile
from .ledger import Ledger, Transaction, TxKind, proof_context
from .mapping import map_homomorphic, map_recoverable
from .notes import Note, aggregate_notes, decrypt_balance
from .statement import ProofBackend, Randomness, TransferProof, TransferStatement, TransferWitness, TransparentBackend


@dataclass
class WalletContext:
    keypair: Keypair
    native_id: str
    b: int
    auditor_pk: Point
    notes: list[Note] = field(default_factory=list)
    rng: object = field(default_factory=secrets.SystemRandom, repr=False)

    def __post_init__(self):
        self.keypair.check()

    @property
    def curve(self) -> Curve:
        return self.keypair.curve

    @property
    def pk(self) -> Point:
        return self.keypair.pk

    @classmethod
    def for_ledger(cls, keypair: Keypair, native_id: str, ledger: Ledger, rng=None) -> "WalletContext":
        ctx = cls(keypair, native_id, ledger.b, ledger.state.auditor_pk, rng=rng or secrets.SystemRandom())
        ctx.refresh(ledger)
        return ctx

    def refresh(self, ledger: Ledger) -> None:
        """Pull this account's current notes from the ledger."""
        self.notes = ledger.notes_of(self.native_id) if self.native_id in ledger.state.users else []

    def balance(self) -> int:
        if not self.notes:
            return 0
        return decrypt_balance(self.keypair.sk, self.notes, self.b).value

    def prove(self, kind, st: TransferStatement, wit: TransferWitness,
              backend: ProofBackend | None = None) -> TransferProof:
        backend = backend or TransparentBackend(self.b)
        return backend.prove(st, wit, proof_context(kind, self.native_id))


def _check_amount(w: int, b: int) -> None:
    if not isinstance(w, int) or not 0 <= w < (1 << b):
        raise OutOfRange(f"amount {w} outside [0, 2^{b})")


def _build(curve: Curve, b: int, sk_A: int, pk_A: Point, pk_B: Point, pk_D: Point,
           v_old: int, w: int, V_encA_old: Ciphertext, rng,
           transparent_w: bool = False, transparent_residual: bool = False):
    def k():
        return curve.random_scalar(rng)

    rnd = Randomness(
        k_vA=k(), k_WA=k(),
        k_wB=0 if transparent_w else k(), k_WB=k(),
        k_wD=k(), k_WD=k(),
        k_vD=0 if transparent_residual else k(), k_VD=k(),
    )
    v_new = v_old - w
    w_recov = map_recoverable(curve, w, b)
    w_hom = map_homomorphic(curve, w)
    v_recov_new = map_recoverable(curve, v_new, b)
    st = TransferStatement(
        pk_A=pk_A,
        pk_B=pk_B,
        pk_D=pk_D,
        v_encA_new=encrypt(pk_A, v_recov_new, rnd.k_vA),
        V_encA_new=V_encA_old - encrypt(pk_A, w_hom, rnd.k_WA),
        w_encB=encrypt(pk_B, w_recov, rnd.k_wB),
        W_encB=encrypt(pk_B, w_hom, rnd.k_WB),
        w_encD=encrypt(pk_D, w_recov, rnd.k_wD),
        W_encD=encrypt(pk_D, w_hom, rnd.k_WD),
        v_encD_new=encrypt(pk_D, v_recov_new, rnd.k_vD),
        V_encD_new=encrypt(pk_D, map_homomorphic(curve, v_new), rnd.k_VD),
        V_encA_old=V_encA_old,
    )
    wit = TransferWitness(sk_A, w_recov, v_recov_new, v_old, rnd)
    return st, wit


def _spend(ctx: WalletContext, recipient_pk: Point, w: int, rng, transparent_w: bool):
    _check_amount(w, ctx.b)
    if not ctx.notes:
        raise EmptyWallet("wallet holds no notes")
    if not ctx.curve.check_point(recipient_pk):
        raise InvalidKey("recipient key is not a valid subgroup point")
    v_old = decrypt_balance(ctx.keypair.sk, ctx.notes, ctx.b).value
    if w > v_old:
        raise InsufficientBalance(f"balance {v_old} < amount {w}")
    return _build(ctx.curve, ctx.b, ctx.keypair.sk, ctx.pk, recipient_pk, ctx.auditor_pk,
                  v_old, w, aggregate_notes(ctx.notes), rng or ctx.rng, transparent_w=transparent_w)


def build_transfer(ctx: WalletContext, recipient_pk: Point, w: int, rng=None):
    """Sender side of a transfer: returns (statement, witness)."""
    return _spend(ctx, recipient_pk, w, rng, transparent_w=False)


def build_mint(owner_ctx: WalletContext, recipient_pk: Point, w: int, rng=None):
    """Mint ``w`` to ``recipient_pk`` against a synthetic old balance of exactly ``w``."""
    _check_amount(w, owner_ctx.b)
    if not owner_ctx.curve.check_point(recipient_pk):
        raise InvalidKey("recipient key is not a valid subgroup point")
    rng = rng or owner_ctx.rng
    curve = owner_ctx.curve
    V_old = encrypt(owner_ctx.pk, map_homomorphic(curve, w), curve.random_scalar(rng))
    return _build(curve, owner_ctx.b, owner_ctx.keypair.sk, owner_ctx.pk, recipient_pk, owner_ctx.auditor_pk,
                  w, w, V_old, rng, transparent_w=True)


def build_force_transfer(auditor_ctx: WalletContext, from_audit_notes, to_pk: Point, rng=None):
    """Sweep a user's whole balance, read from their audit mirror, to ``to_pk``."""
    notes = list(from_audit_notes)
    if not notes:
        raise EmptyWallet("source account has no audit notes")
    if not auditor_ctx.curve.check_point(to_pk):
        raise InvalidKey("target key is not a valid subgroup point")
    sk_D = auditor_ctx.keypair.sk
    if auditor_ctx.pk != auditor_ctx.auditor_pk:
        raise InvalidKey("force transfers must be built with the auditor keypair")
    v_old = decrypt_balance(sk_D, notes, auditor_ctx.b).value
    return _build(auditor_ctx.curve, auditor_ctx.b, sk_D, auditor_ctx.pk, to_pk, auditor_ctx.pk,
                  v_old, v_old, aggregate_notes(notes), rng or auditor_ctx.rng, transparent_residual=True)


def build_deposit(owner_ctx: WalletContext, recipient_pk: Point, amount: int, rng=None):
    st, wit = build_mint(owner_ctx, recipient_pk, amount, rng)
    return st, wit, amount


def build_withdraw(owner_ctx: WalletContext, amount: int, rng=None):
    """Spend ``amount`` from the owner's notes into a transparent payout ciphertext."""
    st, wit = _spend(owner_ctx, owner_ctx.pk, amount, rng, transparent_w=True)
    return st, wit, amount


# -- transaction helpers -----------------------------------------------------


def transfer_tx(ctx: WalletContext, recipient: str, recipient_pk: Point, w: int, rng=None) -> Transaction:
    st, wit = build_transfer(ctx, recipient_pk, w, rng)
    proof = ctx.prove(TxKind.TRANSFER, st, wit)
    return Transaction(TxKind.TRANSFER, ctx.native_id, st, proof, recipient=recipient)


def mint_tx(owner_ctx: WalletContext, recipient: str, recipient_pk: Point, w: int, rng=None) -> Transaction:
    st, wit = build_mint(owner_ctx, recipient_pk, w, rng)
    proof = owner_ctx.prove(TxKind.MINT, st, wit)
    return Transaction(TxKind.MINT, owner_ctx.native_id, st, proof, recipient=recipient)


def deposit_tx(owner_ctx: WalletContext, recipient: str, recipient_pk: Point, amount: int, rng=None) -> Transaction:
    st, wit, amount = build_deposit(owner_ctx, recipient_pk, amount, rng)
    proof = owner_ctx.prove(TxKind.DEPOSIT, st, wit)
    return Transaction(TxKind.DEPOSIT, owner_ctx.native_id, st, proof, recipient=recipient, amount=amount)


def withdraw_tx(owner_ctx: WalletContext, payout: str, amount: int, rng=None) -> Transaction:
    st, wit, _ = build_withdraw(owner_ctx, amount, rng)
    proof = owner_ctx.prove(TxKind.WITHDRAW, st, wit)
    return Transaction(TxKind.WITHDRAW, owner_ctx.native_id, st, proof, payout=payout)


def force_transfer_tx(auditor_ctx: WalletContext, source: str, source_audit_notes, target: str,
                      target_pk: Point, rng=None) -> Transaction:
    st, wit = build_force_transfer(auditor_ctx, source_audit_notes, target_pk, rng)
    proof = auditor_ctx.prove(TxKind.FORCE_TRANSFER, st, wit)
    return Transaction(TxKind.FORCE_TRANSFER, auditor_ctx.native_id, st, proof, recipient=target, source=source)


# -- wallet files --------------------------------------------------------------


def save_wallet(path, keypair: Keypair, native_id: str, note_cache: list[Note] | None = None) -> None:
    """Write a wallet file.  The secret key is stored UNENCRYPTED."""
    doc = {
        "warning": "plaintext secret key; research use only",
        "profile": keypair.curve.name,
        "native_id": native_id,
        "sk": hex(keypair.sk),
        "pk": keypair.pk.hex(),
    }
    if note_cache is not None:
        doc["note_cache"] = [n.hex() for n in note_cache]
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(doc, indent=2) + "\n")
    tmp.replace(path)


def load_wallet(path, curve: Curve | None = None) -> tuple[Keypair, str, list[Note] | None]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise StorageError(f"cannot read wallet {path}: {exc}") from exc
    curve = curve or load_profile(doc["profile"])
    if doc["profile"] != curve.name:
        raise InvalidKey(f"wallet is for profile {doc['profile']!r}, ledger uses {curve.name!r}")
    keypair = Keypair(int(doc["sk"], 16), curve.decode(bytes.fromhex(doc["pk"])))
    keypair.check()
    cache = doc.get("note_cache")
    notes = [Note.fromhex(curve, h) for h in cache] if cache is not None else None
    return keypair, doc["native_id"], notes
