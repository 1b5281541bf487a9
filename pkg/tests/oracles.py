"""Independent oracles used to compute and freeze expected test values.

Every function here reaches a quantity by a route different from the
library's implementation, so a test can require that two unrelated methods
agree.  Nothing in this module imports the package under test.
"""

from __future__ import annotations

import math
from fractions import Fraction


def vp_int(p: int, n: int) -> int:
    """p-adic valuation of a nonzero integer (local copy, no library use)."""
    if n == 0:
        raise ValueError("vp of 0")
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def hensel_unit_root(p: int, precision: int, z: int) -> int:
    """The (p-1)-th root of unity congruent to z mod p, by Newton lifting.

    Solves y^(p-1) = 1 with y = z (mod p); the derivative (p-1)y^(p-2) is a
    unit at any unit y, so the simple Newton step doubles precision.
    """
    if z % p == 0:
        raise ValueError("no unit root over residue 0")
    y = z % p
    k = 1
    while k < precision:
        k = min(2 * k, precision)
        mod = p**k
        fy = (pow(y, p - 1, mod) - 1) % mod
        dfy = ((p - 1) * pow(y, p - 2, mod)) % mod
        y = (y - fy * pow(dfy, -1, mod)) % mod
    return y % p**precision


def log_series_residue(p: int, precision: int, u: int) -> int:
    """log(u) mod p^precision by exact rational partial sums.

    u must be an integer with u = 1 mod p.  Terms (-1)^(k+1) (u-1)^k / k are
    accumulated as exact Fractions; every term with k - vp(k) >= precision
    vanishes mod p^precision, and the loop bound n + a0 (with a0 minimal such
    that p^a0 - a0 >= n) covers all terms below that threshold.
    """
    n = precision
    w = u - 1
    if w % p != 0:
        raise ValueError("u must be 1 mod p")
    if w == 0:
        return 0
    a0 = 0
    while p**a0 - a0 < n:
        a0 += 1
    total = Fraction(0)
    for k in range(1, n + a0 + 1):
        total += Fraction((-1) ** (k + 1) * w**k, k)
    num, den = total.numerator, total.denominator
    if den % p == 0:
        raise ValueError("partial sum unexpectedly non-integral")
    return num * pow(den, -1, p**n) % p**n


def binomial_of_integer(m: int, n: int) -> int:
    """C(m, n) for any integer m and n >= 0, exactly."""
    if n < 0:
        raise ValueError("lower index must be >= 0")
    num = 1
    for i in range(n):
        num *= m - i
    return num // math.factorial(n)


def lower_hull(points):
    """Lower convex hull by gift wrapping: O(n^2), exact Fractions.

    ``points`` is an iterable of (x, y) with x integer and y a number or
    Fraction.  Returns the hull vertices left to right.  Independent of any
    monotone-chain implementation.
    """
    best = {}
    for x, y in points:
        y = Fraction(y)
        if x not in best or y < best[x]:
            best[x] = y
    if not best:
        return []
    xs = sorted(best)
    cur = xs[0]
    hull = [(cur, best[cur])]
    while cur != xs[-1]:
        cx, cy = cur, best[cur]
        pick = None
        for x in xs:
            if x <= cx:
                continue
            s = Fraction(best[x] - cy, x - cx)
            if pick is None or s < pick[0] or (s == pick[0] and x > pick[1]):
                pick = (s, x)
        cur = pick[1]
        hull.append((cur, best[cur]))
    return hull


def hull_slopes(points):
    """Slope multiset [(slope, multiplicity)] of the lower hull, exact."""
    hull = lower_hull(points)
    out = []
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        out.append((Fraction(y1 - y0, x1 - x0), x1 - x0))
    return out


def poly_mul(u, v, cap=None):
    """Product of two integer coefficient lists, optionally truncated."""
    size = len(u) + len(v) - 1
    if cap is not None:
        size = min(size, cap + 1)
    out = [0] * size
    for i, a in enumerate(u):
        if a == 0 or i >= size:
            continue
        for j, b in enumerate(v):
            if i + j >= size:
                break
            out[i + j] += a * b
    return out


def product_expansion(factors, cap):
    """Expand a product of integer polynomials, truncated at degree cap."""
    out = [1]
    for f in factors:
        out = poly_mul(out, f, cap)
    return out


def char_series_minors(a, cap=None):
    """Coefficients of det(1 - T * a) for a square integer matrix.

    Computed by cofactor expansion of the polynomial matrix I - T*a with
    memoization over column masks: exact, division-free, and structurally
    unrelated to any Samuelson/Toeplitz recurrence.  Feasible for sizes up
    to ~14.
    """
    n = len(a)
    if cap is None:
        cap = n
    full = (1 << n) - 1
    memo = {full: [1]}

    def det(mask):
        if mask in memo:
            return memo[mask]
        row = bin(mask).count("1")  # rows 0..row-1 already consumed
        # expanding along row `row` over the free columns in ~mask
        acc = [0]
        sign = 1
        for col in range(n):
            if mask & (1 << col):
                continue
            entry = [1 if row == col else 0, -a[row][col]]
            sub = det(mask | (1 << col))
            term = poly_mul(entry, sub, cap)
            if sign > 0:
                acc = [x + y for x, y in zip(acc + [0] * len(term), term + [0] * len(acc))]
            else:
                acc = [x - y for x, y in zip(acc + [0] * len(term), term + [0] * len(acc))]
            sign = -sign
        acc = acc[: cap + 1]
        while len(acc) > 1 and acc[-1] == 0:
            acc.pop()
        memo[mask] = acc
        return acc

    out = det(0)
    out = out + [0] * (cap + 1 - len(out))
    return out[: cap + 1]


def hensel_polynomial_root(p: int, precision: int, coeffs, r0: int) -> int:
    """Lift a simple root r0 mod p of an integer polynomial to mod p^precision."""
    r = r0 % p
    df0 = sum(i * c * pow(r, i - 1, p) for i, c in enumerate(coeffs) if i) % p
    if df0 == 0:
        raise ValueError("root is not simple mod p")
    k = 1
    while k < precision:
        k = min(2 * k, precision)
        mod = p**k
        f = sum(c * pow(r, i, mod) for i, c in enumerate(coeffs)) % mod
        df = sum(i * c * pow(r, i - 1, mod) for i, c in enumerate(coeffs) if i) % mod
        r = (r - f * pow(df, -1, mod)) % mod
    return r % p**precision
