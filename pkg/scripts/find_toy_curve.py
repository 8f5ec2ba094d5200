"""Search for a small twisted Edwards curve usable as the toy profile.

Constraints: prime q in [2^22, 2^23), a square, d non-square (complete
addition law), #E = 8 * r with r prime and r < 2^20.

Usage: python scripts/find_toy_curve.py [start_q]
"""
import json
import sys

import numpy as np
from sympy import isprime, nextprime


def count_points(q, a, d, is_sq):
    ys = np.arange(q, dtype=np.int64)
    y2 = ys * ys % q
    num = (1 - y2) % q
    den = (a - d * y2) % q
    prod = num * den % q
    chi = np.where(prod == 0, 0, np.where(is_sq[prod], 1, -1))
    return int(np.sum(1 + chi))


def find(start):
    q = nextprime(start)
    while True:
        xs = np.arange(q, dtype=np.int64)
        is_sq = np.zeros(q, dtype=bool)
        is_sq[xs * xs % q] = True
        a = 1
        for d in range(2, 400):
            if is_sq[d]:
                continue
            n = count_points(q, a, d, is_sq)
            if n % 8 == 0 and isprime(n // 8) and n // 8 < 2**20:
                return q, a, d, n // 8
        q = nextprime(q)


def generator(q, a, d, r):
    from sympy.ntheory import sqrt_mod

    def add(p1, p2):
        x1, y1 = p1
        x2, y2 = p2
        t = d * x1 * x2 * y1 * y2 % q
        x3 = (x1 * y2 + y1 * x2) * pow(1 + t, -1, q) % q
        y3 = (y1 * y2 - a * x1 * x2) * pow(1 - t, -1, q) % q
        return x3, y3

    def mul(k, p):
        acc = (0, 1)
        while k:
            if k & 1:
                acc = add(acc, p)
            p = add(p, p)
            k >>= 1
        return acc

    for y in range(2, q):
        x2 = (1 - y * y) * pow(a - d * y * y, -1, q) % q
        x = sqrt_mod(x2, q)
        if x is None:
            continue
        g = mul(8, (x, y))
        if g != (0, 1) and mul(r, g) == (0, 1):
            return g


if __name__ == "__main__":
    start = int(sys.argv[1]) if len(sys.argv) > 1 else 5_000_000
    q, a, d, r = find(start)
    gx, gy = generator(q, a, d, r)
    print(json.dumps({
        "name": "toy",
        "q": str(q), "a": str(a), "d": str(d),
        "r": str(r), "cofactor": "8",
        "G": {"x": str(gx), "y": str(gy)},
        "default_b": 6,
    }, indent=2))
