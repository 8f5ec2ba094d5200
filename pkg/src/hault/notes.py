"""Notes and balance recovery.

A note encrypts one value twice under the same key: ``v_enc`` via the
recoverable mapping (so the owner can read it) and ``V_enc`` via the
homomorphic mapping (so the ledger can sum it).  Ownership is positional;
notes carry no owner field.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

from .elgamal import Ciphertext, decrypt, encrypt
from .errors import EmptyNoteSet, IdentityPoint, InconsistentNotes, OutOfRange, OverflowedBalance
from .group import Curve, Point
from .mapping import decode_value, map_homomorphic, map_recoverable


@dataclass(frozen=True)
class Note:
    v_enc: Ciphertext
    V_enc: Ciphertext

    def to_bytes(self) -> bytes:
        return self.v_enc.to_bytes() + self.V_enc.to_bytes()

    @classmethod
    def from_bytes(cls, curve: Curve, data: bytes) -> "Note":
        half = len(data) // 2
        return cls(Ciphertext.from_bytes(curve, data[:half]), Ciphertext.from_bytes(curve, data[half:]))

    def hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def fromhex(cls, curve: Curve, text: str) -> "Note":
        return cls.from_bytes(curve, bytes.fromhex(text))


@dataclass(frozen=True)
class Balance:
    value: int
    aggregate_ct: Ciphertext


def make_note(pk: Point, v: int, k1: int, k2: int, b: int) -> Note:
    if not 0 <= v < (1 << b):
        raise OutOfRange(f"note value {v} outside [0, 2^{b})")
    curve = pk.curve
    return Note(
        encrypt(pk, map_recoverable(curve, v, b), k1),
        encrypt(pk, map_homomorphic(curve, v), k2),
    )


def aggregate_notes(notes) -> Ciphertext:
    notes = list(notes)
    if not notes:
        raise EmptyNoteSet("cannot aggregate an empty note set")
    return reduce(lambda acc, n: acc + n.V_enc, notes[1:], notes[0].V_enc)


def decrypt_note_value(sk: int, note: Note, b: int) -> int:
    try:
        return decode_value(decrypt(sk, note.v_enc), b)
    except IdentityPoint:
        raise InconsistentNotes("recoverable ciphertext decrypts to the identity") from None


def decrypt_balance(sk: int, notes, b: int) -> Balance:
    """Sum of per-note decoded values, cross-checked against the aggregate.

    Raises OverflowedBalance if the sum leaves [0, 2^b) and InconsistentNotes
    if the aggregate homomorphic ciphertext disagrees (corruption or a note
    under another key).
    """
    notes = list(notes)
    aggregate = aggregate_notes(notes)
    value = sum(decrypt_note_value(sk, n, b) for n in notes)
    if value >= (1 << b):
        raise OverflowedBalance(f"balance {value} does not fit in {b} bits")
    curve = aggregate.curve
    if map_homomorphic(curve, value) != decrypt(sk, aggregate):
        raise InconsistentNotes("decoded values disagree with the aggregate homomorphic ciphertext")
    return Balance(value, aggregate)
