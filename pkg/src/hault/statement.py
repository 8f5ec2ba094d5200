"""Transfer statement, witness and the constraint system they must satisfy.

The constraint list mirrors the transfer circuit one check at a time, in
circuit order.  ``TransparentBackend`` is a stand-in prover: its "proof"
carries the witness in the clear together with a digest binding it to the
statement and to a caller tag, and verification simply re-evaluates every
constraint.  It is sound but NOT zero-knowledge; a SNARK backend would
implement the same ``ProofBackend`` protocol.
"""

from __future__ import annotations

import dataclasses
import hashlib
import hmac
import json
from dataclasses import dataclass
from typing import Protocol

from .elgamal import Ciphertext, decrypt, encrypt
from .errors import HaultError, ProverRejected
from .group import Curve, Point

# (group, name) in circuit order; derivations that introduce private
# intermediates (w_hom, W_encA, v_new) are not checks and have no id.
CONSTRAINTS = (
    ("new_note", "w_recov_in_subgroup"),
    ("new_note", "w_in_range"),
    ("new_note", "w_encB"),
    ("new_note", "W_encB"),
    ("old_balance", "v_old_in_range"),
    ("old_balance", "pk_A_from_sk"),
    ("old_balance", "V_old_opens_to_v_old"),
    ("new_balance", "v_recov_new_in_subgroup"),
    ("new_balance", "v_new_in_range"),
    ("new_balance", "v_new_matches_recov"),
    ("new_balance", "V_encA_new"),
    ("new_balance", "v_encA_new"),
    ("auditor", "v_encD_new"),
    ("auditor", "V_encD_new"),
    ("auditor", "w_encD"),
    ("auditor", "W_encD"),
)
CONSTRAINT_IDS = tuple(f"{g}.{n}" for g, n in CONSTRAINTS)

STATEMENT_FIELDS = (
    "pk_A", "pk_B", "pk_D",
    "v_encA_new", "V_encA_new",
    "w_encB", "W_encB",
    "w_encD", "W_encD",
    "v_encD_new", "V_encD_new",
    "V_encA_old",
)
_POINT_FIELDS = ("pk_A", "pk_B", "pk_D")

_DOMAIN = b"hault/transfer-statement/v1"


@dataclass(frozen=True)
class TransferStatement:
    """Public inputs of a transfer (also used by mint, force transfer, deposit, withdraw)."""

    pk_A: Point
    pk_B: Point
    pk_D: Point
    v_encA_new: Ciphertext
    V_encA_new: Ciphertext
    w_encB: Ciphertext
    W_encB: Ciphertext
    w_encD: Ciphertext
    W_encD: Ciphertext
    v_encD_new: Ciphertext
    V_encD_new: Ciphertext
    V_encA_old: Ciphertext

    @property
    def curve(self) -> Curve:
        return self.pk_A.curve

    def to_bytes(self) -> bytes:
        return b"".join(getattr(self, f).to_bytes() for f in STATEMENT_FIELDS)

    def digest(self) -> bytes:
        return hashlib.sha256(_DOMAIN + self.to_bytes()).digest()

    def replace(self, **changes) -> "TransferStatement":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return {f: getattr(self, f).hex() for f in STATEMENT_FIELDS}

    @classmethod
    def from_dict(cls, curve: Curve, doc: dict) -> "TransferStatement":
        values = {}
        for f in STATEMENT_FIELDS:
            raw = bytes.fromhex(doc[f])
            values[f] = curve.decode(raw) if f in _POINT_FIELDS else Ciphertext.from_bytes(curve, raw)
        return cls(**values)

    def is_well_formed(self) -> bool:
        curve = self.curve
        return all(curve.check_point(getattr(self, f)) for f in _POINT_FIELDS)


@dataclass(frozen=True)
class Randomness:
    """Encryption randomness, one scalar per ciphertext the circuit re-derives."""

    k_vA: int  # v_encA_new
    k_WA: int  # Enc_pkA(w_hom), subtracted from the old balance
    k_wB: int
    k_WB: int
    k_wD: int
    k_WD: int
    k_vD: int  # v_encD_new
    k_VD: int  # V_encD_new


@dataclass(frozen=True)
class TransferWitness:
    sk_A: int
    w_recov: Point
    v_recov_new: Point
    v_old: int
    randomness: Randomness

    def to_dict(self) -> dict:
        return {
            "sk_A": hex(self.sk_A),
            "w_recov": self.w_recov.hex(),
            "v_recov_new": self.v_recov_new.hex(),
            "v_old": self.v_old,
            "randomness": {k: hex(v) for k, v in dataclasses.asdict(self.randomness).items()},
        }

    @classmethod
    def from_dict(cls, curve: Curve, doc: dict) -> "TransferWitness":
        return cls(
            sk_A=int(doc["sk_A"], 16),
            w_recov=curve.decode(bytes.fromhex(doc["w_recov"])),
            v_recov_new=curve.decode(bytes.fromhex(doc["v_recov_new"])),
            v_old=int(doc["v_old"]),
            randomness=Randomness(**{k: int(v, 16) for k, v in doc["randomness"].items()}),
        )


@dataclass(frozen=True)
class TransferProof:
    backend: str
    payload: bytes

    def to_dict(self) -> dict:
        return {"backend": self.backend, "payload": self.payload.hex()}

    @classmethod
    def from_dict(cls, doc: dict) -> "TransferProof":
        return cls(doc["backend"], bytes.fromhex(doc["payload"]))


def evaluate_constraints(st: TransferStatement, wit: TransferWitness, b: int) -> list[tuple[str, bool]]:
    """Evaluate every circuit constraint; never raises."""
    curve = st.curve
    bound = 1 << b

    def enc(pk, M, k):
        if M is None:
            return None
        try:
            return encrypt(pk, M, k)
        except HaultError:
            return None

    def lsb(P):
        if not isinstance(P, Point) or P.is_identity:
            return None
        return curve.lsb(P, b)

    def in_range(v):
        return isinstance(v, int) and 0 <= v < bound

    rnd = wit.randomness
    out = []

    # new note for the recipient
    w = lsb(wit.w_recov)
    w_hom = curve.mul_base(w) if w is not None else None
    out.append(curve.check_point(wit.w_recov))
    out.append(in_range(w))
    out.append(st.w_encB == enc(st.pk_B, wit.w_recov, rnd.k_wB))
    out.append(st.W_encB == enc(st.pk_B, w_hom, rnd.k_WB))

    # old balance
    sk_ok = isinstance(wit.sk_A, int) and 0 < wit.sk_A < curve.r
    out.append(in_range(wit.v_old))
    out.append(sk_ok and curve.mul_base(wit.sk_A) == st.pk_A)
    out.append(
        sk_ok and isinstance(wit.v_old, int)
        and curve.mul_base(wit.v_old) == decrypt(wit.sk_A, st.V_encA_old)
    )

    # new balance; integer subtraction so overdrafts show up as range failures
    v_new = wit.v_old - w if w is not None and isinstance(wit.v_old, int) else None
    out.append(curve.check_point(wit.v_recov_new))
    out.append(in_range(v_new))
    out.append(v_new is not None and lsb(wit.v_recov_new) == v_new)
    W_encA = enc(st.pk_A, w_hom, rnd.k_WA)
    out.append(W_encA is not None and st.V_encA_new == st.V_encA_old - W_encA)
    out.append(st.v_encA_new == enc(st.pk_A, wit.v_recov_new, rnd.k_vA))

    # auditor copies
    v_new_hom = curve.mul_base(v_new) if v_new is not None else None
    out.append(st.v_encD_new == enc(st.pk_D, wit.v_recov_new, rnd.k_vD))
    out.append(st.V_encD_new == enc(st.pk_D, v_new_hom, rnd.k_VD))
    out.append(st.w_encD == enc(st.pk_D, wit.w_recov, rnd.k_wD))
    out.append(st.W_encD == enc(st.pk_D, w_hom, rnd.k_WD))

    return list(zip(CONSTRAINT_IDS, (bool(x) for x in out)))


def failed_constraints(st: TransferStatement, wit: TransferWitness, b: int) -> list[str]:
    return [cid for cid, ok in evaluate_constraints(st, wit, b) if not ok]


def binding_digest(st: TransferStatement, context: bytes = b"") -> bytes:
    """Digest of the serialized statement and the caller tag the proof is bound to."""
    h = hashlib.sha256(st.digest())
    h.update(len(context).to_bytes(4, "big"))
    h.update(context)
    return h.digest()


class ProofBackend(Protocol):
    name: str

    def prove(self, st: TransferStatement, wit: TransferWitness, context: bytes = b"") -> TransferProof: ...

    def verify(self, st: TransferStatement, proof: TransferProof, context: bytes = b"") -> bool: ...


class TransparentBackend:
    """Re-evaluating backend.  Proofs embed the witness: not zero-knowledge."""

    name = "transparent"

    def __init__(self, b: int):
        self.b = b

    def prove(self, st: TransferStatement, wit: TransferWitness, context: bytes = b"") -> TransferProof:
        failed = failed_constraints(st, wit, self.b)
        if failed:
            raise ProverRejected(failed)
        body = {"digest": binding_digest(st, context).hex(), "witness": wit.to_dict()}
        return TransferProof(self.name, json.dumps(body, sort_keys=True).encode())

    def verify(self, st: TransferStatement, proof: TransferProof, context: bytes = b"") -> bool:
        if not isinstance(proof, TransferProof) or proof.backend != self.name:
            return False
        try:
            body = json.loads(proof.payload)
            digest = bytes.fromhex(body["digest"])
            wit = TransferWitness.from_dict(st.curve, body["witness"])
        except (ValueError, KeyError, TypeError, AttributeError, HaultError):
            return False
        if not hmac.compare_digest(digest, binding_digest(st, context)):
            return False
        if not st.is_well_formed():
            return False
        return all(ok for _, ok in evaluate_constraints(st, wit, self.b))


def prove_transparent(st: TransferStatement, wit: TransferWitness, b: int, context: bytes = b"") -> TransferProof:
    return TransparentBackend(b).prove(st, wit, context)


def verify(st: TransferStatement, proof: TransferProof, b: int, context: bytes = b"") -> bool:
    return TransparentBackend(b).verify(st, proof, context)
