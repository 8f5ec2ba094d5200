"""EC-ElGamal over the prime-order subgroup.

Randomness is an explicit argument everywhere so that ciphertexts can be
re-derived from a witness.  ``encrypt_random`` is the only sampling entry
point and never draws k = 0; ``encrypt_transparent`` is the only sanctioned
way to produce the plaintext-revealing (O, M) form.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidEncoding, InvalidKey, OutOfRange
from .group import Curve, Point


@dataclass(frozen=True)
class Keypair:
    sk: int
    pk: Point

    @classmethod
    def generate(cls, curve: Curve, rng=None) -> "Keypair":
        sk = curve.random_scalar(rng)
        return cls(sk, curve.mul_base(sk))

    @classmethod
    def from_secret(cls, curve: Curve, sk: int) -> "Keypair":
        if not 0 < sk < curve.r:
            raise InvalidKey("secret key must lie in [1, r)")
        return cls(sk, curve.mul_base(sk))

    @property
    def curve(self) -> Curve:
        return self.pk.curve

    def check(self) -> None:
        if not 0 < self.sk < self.curve.r or self.curve.mul_base(self.sk) != self.pk:
            raise InvalidKey("public key does not match secret key")


@dataclass(frozen=True)
class Ciphertext:
    C1: Point
    C2: Point

    @classmethod
    def zero(cls, curve: Curve) -> "Ciphertext":
        return cls(curve.identity, curve.identity)

    @property
    def curve(self) -> Curve:
        return self.C1.curve

    @property
    def is_transparent(self) -> bool:
        return self.C1.is_identity

    def __add__(self, other: "Ciphertext") -> "Ciphertext":
        return Ciphertext(self.C1 + other.C1, self.C2 + other.C2)

    def __sub__(self, other: "Ciphertext") -> "Ciphertext":
        return Ciphertext(self.C1 - other.C1, self.C2 - other.C2)

    def to_bytes(self) -> bytes:
        return self.C1.to_bytes() + self.C2.to_bytes()

    @classmethod
    def from_bytes(cls, curve: Curve, data: bytes) -> "Ciphertext":
        n = curve.point_bytes
        if len(data) != 2 * n:
            raise InvalidEncoding(f"ciphertext must be {2 * n} bytes, got {len(data)}")
        return cls(curve.decode(data[:n]), curve.decode(data[n:]))

    def hex(self) -> str:
        return self.to_bytes().hex()


def encrypt(pk: Point, M: Point, k: int) -> Ciphertext:
    """(k*G, k*pk + M).  k = 0 yields the transparent form (O, M)."""
    curve = pk.curve
    if not curve.check_point(pk):
        raise InvalidKey("public key is not a valid subgroup point")
    if not 0 <= k < curve.r:
        raise OutOfRange("encryption randomness must lie in [0, r)")
    return Ciphertext(curve.mul_base(k), curve.mul(k, pk) + M)


def encrypt_random(pk: Point, M: Point, rng=None) -> Ciphertext:
    return encrypt(pk, M, pk.curve.random_scalar(rng))


def encrypt_transparent(pk: Point, M: Point) -> Ciphertext:
    return encrypt(pk, M, 0)


def decrypt(sk: int, ct: Ciphertext) -> Point:
    return ct.C2 - ct.curve.mul(sk, ct.C1)


def ct_add(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    return a + b


def ct_sub(a: Ciphertext, b: Ciphertext) -> Ciphertext:
    return a - b
