"""Value-to-point mappings.

``map_homomorphic`` puts the value in the exponent (v*G): additive but only
invertible by a discrete log.  ``map_recoverable`` finds a subgroup point whose
y-coordinate carries the value in its low ``b`` bits, so decryption yields the
value directly.
"""

from __future__ import annotations

import functools

from .errors import OutOfRange, SearchExhausted
from .group import COUNTER_BITS, Curve, Point


def map_homomorphic(curve: Curve, v: int) -> Point:
    if not 0 <= v < curve.r:
        raise OutOfRange(f"value {v} outside [0, r)")
    return curve.mul_base(v)


@functools.lru_cache(maxsize=4096)
def map_recoverable(curve: Curve, v: int, b: int) -> Point:
    """Deterministic subgroup point M with lsb_b(M) == v.

    Candidates are y = v + t*2^b for t = 0, 1, ..., 2^16 - 1.  A candidate on
    the curve is first cofactor-cleared; the cleared point is taken if it kept
    the low bits, otherwise the raw point is taken if it is already in the
    subgroup.
    """
    if not 0 <= v < (1 << b):
        raise OutOfRange(f"value {v} outside [0, 2^{b})")
    curve.check_value_bits(b)
    mask = (1 << b) - 1
    for t in range(1 << COUNTER_BITS):
        y = v + (t << b)
        if y >= curve.q:
            break
        x = curve.solve_x(y)
        if x is None:
            continue
        P = Point(curve, x, y)
        cleared = curve.mul(curve.cofactor, P)
        if not cleared.is_identity and cleared.y & mask == v:
            return cleared
        if curve.check_point(P):
            return P
    raise SearchExhausted(f"no recoverable point for v={v}, b={b} within 2^{COUNTER_BITS} candidates")


def decode_value(M: Point, b: int) -> int:
    """Value carried by a recoverable point (alias of lsb_b for decrypted notes)."""
    return M.curve.lsb(M, b)
