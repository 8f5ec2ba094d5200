"""Prime-order subgroup of a twisted Edwards curve.

Curves have the form ``a*x^2 + y^2 = 1 + d*x^2*y^2`` over F_q with ``a`` a
square and ``d`` a non-square, so the addition law is complete and the
neutral element is the affine point (0, 1).  Scalars are plain ints; all
scalar arithmetic is mod ``r``.

Two profiles ship with the package: ``babyjubjub`` (production, r ~ 2^251)
and ``toy`` (q ~ 2^22, r < 2^20), the latter small enough that discrete logs
and subgroup membership can be brute-forced in tests.
"""

from __future__ import annotations

import functools
import json
import secrets
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from sympy import isprime
from sympy.ntheory import sqrt_mod

from .errors import IdentityPoint, InvalidEncoding, InvalidPoint, InvalidProfile

# headroom above the value bits used by the recoverable-mapping counter
COUNTER_BITS = 16


@dataclass(frozen=True)
class Curve:
    """Curve parameters plus the group law.  Doubles as the group profile."""

    name: str
    q: int
    a: int
    d: int
    r: int
    cofactor: int
    gx: int
    gy: int
    default_b: int = 32
    _base_table: list = field(default_factory=list, init=False, repr=False, compare=False, hash=False)

    # -- construction -----------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "Curve":
        try:
            curve = cls(
                name=str(doc["name"]),
                q=int(doc["q"]),
                a=int(doc["a"]),
                d=int(doc["d"]),
                r=int(doc["r"]),
                cofactor=int(doc["cofactor"]),
                gx=int(doc["G"]["x"]),
                gy=int(doc["G"]["y"]),
                default_b=int(doc.get("default_b", 32)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidProfile(f"malformed profile document: {exc}") from exc
        curve.validate()
        return curve

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "q": str(self.q),
            "a": str(self.a),
            "d": str(self.d),
            "r": str(self.r),
            "cofactor": str(self.cofactor),
            "G": {"x": str(self.gx), "y": str(self.gy)},
            "default_b": self.default_b,
        }

    def validate(self) -> None:
        q = self.q
        if not isprime(q) or q < 5:
            raise InvalidProfile(f"{self.name}: q is not an odd prime")
        if not isprime(self.r):
            raise InvalidProfile(f"{self.name}: subgroup order r is not prime")
        if self.a % q == 0 or self.d % q == 0 or (self.a - self.d) % q == 0:
            raise InvalidProfile(f"{self.name}: degenerate curve coefficients")
        if pow(self.a, (q - 1) // 2, q) != 1 or pow(self.d, (q - 1) // 2, q) != q - 1:
            raise InvalidProfile(f"{self.name}: addition law is not complete (need a square, d non-square)")
        if not self.is_on_curve(self.gx, self.gy):
            raise InvalidProfile(f"{self.name}: generator not on curve")
        g = self.generator
        if g.is_identity or not self._mul(self.r, g).is_identity:
            raise InvalidProfile(f"{self.name}: generator does not have order r")
        self.check_value_bits(self.default_b)

    def check_value_bits(self, b: int) -> None:
        """Reject value bit-lengths that leave no room for the mapping counter."""
        if not 0 < b or b + COUNTER_BITS >= self.q.bit_length():
            raise InvalidProfile(
                f"b={b} unsupported on {self.name}: need 0 < b and b + {COUNTER_BITS} < {self.q.bit_length()}"
            )

    # -- points -----------------------------------------------------------

    @property
    def identity(self) -> "Point":
        return Point(self, 0, 1)

    @property
    def generator(self) -> "Point":
        return Point(self, self.gx, self.gy)

    def is_on_curve(self, x: int, y: int) -> bool:
        q = self.q
        if not (0 <= x < q and 0 <= y < q):
            return False
        xx, yy = x * x, y * y
        return (self.a * xx + yy - 1 - self.d * xx * yy) % q == 0

    def point(self, x: int, y: int) -> "Point":
        """Validated constructor: the coordinates must satisfy the curve equation."""
        if not self.is_on_curve(x, y):
            raise InvalidPoint(f"({x}, {y}) is not on {self.name}")
        return Point(self, x, y)

    def solve_x(self, y: int) -> int | None:
        """Smaller root x of the curve equation for a given y, or None."""
        q = self.q
        yy = y * y % q
        den = (self.a - self.d * yy) % q
        if den == 0:
            return None
        xx = (1 - yy) * pow(den, -1, q) % q
        if xx == 0:
            return 0
        if pow(xx, (q - 1) // 2, q) != 1:
            return None
        x = sqrt_mod(xx, q)
        return min(x, q - x)

    def check_point(self, P) -> bool:
        """True iff P is not the identity, is on the curve and has order r.

        Accepts a Point, a raw ``(x, y)`` pair or anything else (-> False).
        """
        if isinstance(P, Point):
            if P.curve != self:
                return False
            x, y = P.x, P.y
        elif isinstance(P, tuple) and len(P) == 2 and all(isinstance(c, int) for c in P):
            x, y = P
        else:
            return False
        if (x, y) == (0, 1) or not self.is_on_curve(x, y):
            return False
        return self._in_subgroup(x, y)

    @functools.lru_cache(maxsize=8192)
    def _in_subgroup(self, x: int, y: int) -> bool:
        return self._mul(self.r, Point(self, x, y)).is_identity

    def lsb(self, P: "Point", b: int) -> int:
        """Low ``b`` bits of the y-coordinate."""
        if P.is_identity:
            raise IdentityPoint("lsb of the identity point is undefined")
        if not 0 < b < self.q.bit_length():
            raise ValueError(f"bit-length {b} out of range for {self.name}")
        return P.y & ((1 << b) - 1)

    # -- scalars ----------------------------------------------------------

    def scalar(self, v: int) -> int:
        return v % self.r

    def random_scalar(self, rng=None) -> int:
        """Uniform scalar in [1, r)."""
        rng = rng or secrets.SystemRandom()
        return rng.randrange(1, self.r)

    # -- group law (extended coordinates X:Y:Z:T, x=X/Z, y=Y/Z, xy=T/Z) -----

    def _ext(self, P: "Point") -> tuple:
        return (P.x, P.y, 1, P.x * P.y % self.q)

    def _affine(self, E: tuple) -> "Point":
        X, Y, Z, _ = E
        q = self.q
        zi = pow(Z, -1, q)
        return Point(self, X * zi % q, Y * zi % q)

    def _ext_add(self, P: tuple, Q: tuple) -> tuple:
        q = self.q
        X1, Y1, Z1, T1 = P
        X2, Y2, Z2, T2 = Q
        A = X1 * X2 % q
        B = Y1 * Y2 % q
        C = self.d * T1 % q * T2 % q
        D = Z1 * Z2 % q
        E = ((X1 + Y1) * (X2 + Y2) - A - B) % q
        F = D - C
        G = D + C
        H = B - self.a * A
        return (E * F % q, G * H % q, F * G % q, E * H % q)

    def _ext_double(self, P: tuple) -> tuple:
        q = self.q
        X1, Y1, Z1, _ = P
        A = X1 * X1 % q
        B = Y1 * Y1 % q
        C = 2 * Z1 * Z1 % q
        D = self.a * A % q
        E = ((X1 + Y1) * (X1 + Y1) - A - B) % q
        G = D + B
        F = G - C
        H = D - B
        return (E * F % q, G * H % q, F * G % q, E * H % q)

    def add(self, P: "Point", Q: "Point") -> "Point":
        q = self.q
        t = self.d * P.x * Q.x * P.y * Q.y % q
        x = (P.x * Q.y + P.y * Q.x) * pow(1 + t, -1, q) % q
        y = (P.y * Q.y - self.a * P.x * Q.x) * pow(1 - t, -1, q) % q
        return Point(self, x, y)

    def neg(self, P: "Point") -> "Point":
        return Point(self, (-P.x) % self.q, P.y)

    def _mul(self, k: int, P: "Point") -> "Point":
        if k < 0:
            return self._mul(-k, self.neg(P))
        if k == 0 or P.is_identity:
            return self.identity
        base = self._ext(P)
        acc = base
        for bit in bin(k)[3:]:
            acc = self._ext_double(acc)
            if bit == "1":
                acc = self._ext_add(acc, base)
        return self._affine(acc)

    def _mul_base(self, k: int) -> "Point":
        k %= self.r
        if k == 0:
            return self.identity
        table = self._base_table
        if not table:
            E = self._ext(self.generator)
            for _ in range(self.r.bit_length()):
                table.append(E)
                E = self._ext_double(E)
        acc = None
        i = 0
        while k:
            if k & 1:
                acc = table[i] if acc is None else self._ext_add(acc, table[i])
            k >>= 1
            i += 1
        return self._affine(acc)

    def mul(self, k: int, P: "Point") -> "Point":
        """k*P.  Multiples of the generator use a precomputed doubling table."""
        if P.x == self.gx and P.y == self.gy:
            return self._mul_base(k)
        return self._mul(k, P)

    def mul_base(self, k: int) -> "Point":
        return self._mul_base(k)

    # -- encoding ---------------------------------------------------------

    @property
    def coord_bytes(self) -> int:
        return (self.q.bit_length() + 7) // 8

    @property
    def point_bytes(self) -> int:
        return 1 + 2 * self.coord_bytes

    def encode(self, P: "Point") -> bytes:
        """Identity flag byte, then x and y little-endian fixed width."""
        w = self.coord_bytes
        if P.is_identity:
            return b"\x01" + bytes(2 * w)
        return b"\x00" + P.x.to_bytes(w, "little") + P.y.to_bytes(w, "little")

    def decode(self, data: bytes) -> "Point":
        w = self.coord_bytes
        if len(data) != 1 + 2 * w:
            raise InvalidEncoding(f"expected {1 + 2 * w} bytes, got {len(data)}")
        flag = data[0]
        if flag == 1:
            if any(data[1:]):
                raise InvalidEncoding("identity encoding must have zero coordinates")
            return self.identity
        if flag != 0:
            raise InvalidEncoding(f"bad identity flag {flag}")
        x = int.from_bytes(data[1:1 + w], "little")
        y = int.from_bytes(data[1 + w:], "little")
        if (x, y) == (0, 1):
            raise InvalidEncoding("identity must use the identity flag")
        if not self.is_on_curve(x, y):
            raise InvalidEncoding("decoded coordinates are not on the curve")
        return Point(self, x, y)


class Point:
    """Affine curve point.  Immutable; the identity is (0, 1).

    The bare constructor does not validate; use ``Curve.point`` for untrusted
    coordinates.
    """

    __slots__ = ("curve", "x", "y")

    def __init__(self, curve: Curve, x: int, y: int):
        object.__setattr__(self, "curve", curve)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    def __setattr__(self, name, value):
        raise AttributeError("Point is immutable")

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.y == 1

    def __add__(self, other: "Point") -> "Point":
        if not isinstance(other, Point):
            return NotImplemented
        return self.curve.add(self, other)

    def __neg__(self) -> "Point":
        return self.curve.neg(self)

    def __sub__(self, other: "Point") -> "Point":
        if not isinstance(other, Point):
            return NotImplemented
        return self.curve.add(self, self.curve.neg(other))

    def __rmul__(self, k: int) -> "Point":
        if not isinstance(k, int):
            return NotImplemented
        return self.curve.mul(k, self)

    __mul__ = __rmul__

    def __eq__(self, other) -> bool:
        if not isinstance(other, Point):
            return NotImplemented
        return self.x == other.x and self.y == other.y and self.curve.name == other.curve.name

    def __hash__(self) -> int:
        return hash((self.curve.name, self.x, self.y))

    def __repr__(self) -> str:
        if self.is_identity:
            return f"Point({self.curve.name}, O)"
        return f"Point({self.curve.name}, {self.x}, {self.y})"

    def to_bytes(self) -> bytes:
        return self.curve.encode(self)

    def hex(self) -> str:
        return self.to_bytes().hex()


# -- module-level API -------------------------------------------------------


def point_add(P: Point, Q: Point) -> Point:
    return P.curve.add(P, Q)


def scalar_mul(s: int, P: Point) -> Point:
    return P.curve.mul(s, P)


def check_point(curve: Curve, P) -> bool:
    return curve.check_point(P)


def lsb_b(P: Point, b: int) -> int:
    return P.curve.lsb(P, b)


PROFILES = ("toy", "babyjubjub")


@functools.lru_cache(maxsize=None)
def _load_named(name: str) -> Curve:
    try:
        text = resources.files("hault.profiles").joinpath(f"{name}.json").read_text()
    except FileNotFoundError:
        raise InvalidProfile(f"unknown profile {name!r}; known: {', '.join(PROFILES)}") from None
    return Curve.from_dict(json.loads(text))


def load_profile(name_or_path: str | Path) -> Curve:
    """Load a bundled profile by name, or a JSON parameter file by path."""
    if isinstance(name_or_path, str) and name_or_path in PROFILES:
        return _load_named(name_or_path)
    path = Path(name_or_path)
    if not path.exists():
        raise InvalidProfile(f"unknown profile {str(name_or_path)!r}; known: {', '.join(PROFILES)}")
    return Curve.from_dict(json.loads(path.read_text()))
