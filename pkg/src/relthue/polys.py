"""Exact integer polynomial and matrix helpers.

Polynomials are coefficient lists in ascending order (``p[k]`` is the
coefficient of ``x**k``).  Everything here is exact: Python integers or
``fractions.Fraction``.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Sequence

import mpmath


def trim(p: Sequence) -> list:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return p


def degree(p: Sequence) -> int:
    p = trim(p)
    if len(p) == 1 and p[0] == 0:
        return -1
    return len(p) - 1


def padd(a: Sequence, b: Sequence) -> list:
    n = max(len(a), len(b))
    return trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def psub(a: Sequence, b: Sequence) -> list:
    return padd(a, [-c for c in b])


def pmul(a: Sequence, b: Sequence) -> list:
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    return trim(out)


def pderiv(p: Sequence) -> list:
    return trim([k * p[k] for k in range(1, len(p))] or [0])


def peval(p: Sequence, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def content(p: Sequence[int]) -> int:
    g = 0
    for c in p:
        g = gcd(g, int(c))
    return g


def bareiss_det(m: Sequence[Sequence[int]]) -> int:
    """Determinant of a square integer matrix by fraction-free elimination."""
    a = [list(map(int, row)) for row in m]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for r in range(k + 1, n):
                if a[r][k] != 0:
                    a[k], a[r] = a[r], a[k]
                    sign = -sign
                    break
            else:
                return 0
        akk = a[k][k]
        for i in range(k + 1, n):
            aik = a[i][k]
            row_i = a[i]
            row_k = a[k]
            for j in range(k + 1, n):
                row_i[j] = (row_i[j] * akk - aik * row_k[j]) // prev
            row_i[k] = 0
        prev = akk
    return sign * a[n - 1][n - 1]


def sylvester(f: Sequence[int], g: Sequence[int]) -> list[list[int]]:
    f = trim(f)
    g = trim(g)
    n, m = len(f) - 1, len(g) - 1
    size = n + m
    rows = []
    fd = list(reversed(f))
    gd = list(reversed(g))
    for i in range(m):
        rows.append([0] * i + fd + [0] * (size - i - len(fd)))
    for i in range(n):
        rows.append([0] * i + gd + [0] * (size - i - len(gd)))
    return rows


def resultant(f: Sequence[int], g: Sequence[int]) -> int:
    """Res(f, g) = lc(f)^deg(g) * prod g(roots of f)."""
    f = trim(f)
    g = trim(g)
    if degree(f) < 0 or degree(g) < 0:
        return 0
    n, m = degree(f), degree(g)
    if m == 0:
        return g[0] ** n
    if n == 0:
        return f[0] ** m
    return bareiss_det(sylvester(f, g))


def discriminant(f: Sequence[int]) -> int:
    f = trim(f)
    n = degree(f)
    if n < 1:
        raise ValueError("discriminant of a constant")
    r = resultant(f, pderiv(f))
    lc = f[-1]
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    q, rem = divmod(sign * r, lc)
    assert rem == 0
    return q


def solve_rational(m: Sequence[Sequence], b: Sequence) -> list[Fraction] | None:
    """Solve ``m x = b`` exactly over Q.  Returns None if ``m`` is singular."""
    n = len(m)
    a = [[Fraction(v) for v in row] + [Fraction(b[i])] for i, row in enumerate(m)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        pv = a[col][col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col] / pv
                row_r, row_c = a[r], a[col]
                for j in range(col, n + 1):
                    row_r[j] -= factor * row_c[j]
    return [a[i][n] / a[i][i] for i in range(n)]


def interpolate_integer(xs: Sequence[int], ys: Sequence[int]) -> list[Fraction]:
    """Lagrange interpolation returning ascending coefficients over Q."""
    n = len(xs)
    coeffs = [Fraction(0)] * n
    for i in range(n):
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j in range(n):
            if j == i:
                continue
            basis = [Fraction(0)] + basis
            for k in range(len(basis) - 1):
                basis[k] -= xs[j] * basis[k + 1]
            denom *= xs[i] - xs[j]
        scale = Fraction(ys[i]) / denom
        for k in range(n):
            coeffs[k] += scale * basis[k]
    return coeffs


def hnf_columns(mat: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[list[int]], int]:
    """Column-style echelon form by unimodular column operations.

    Returns ``(H, W, rank)`` with ``mat @ W == H``, ``W`` unimodular, the first
    ``rank`` columns of ``H`` independent and the remaining columns zero.  The
    last ``ncols - rank`` columns of ``W`` therefore span the integer kernel.
    """
    rows = len(mat)
    cols = len(mat[0]) if rows else 0
    h = [list(map(int, r)) for r in mat]
    w = [[int(i == j) for j in range(cols)] for i in range(cols)]

    def colop(dst, src, q):
        # column dst -= q * column src
        for r in range(rows):
            h[r][dst] -= q * h[r][src]
        for r in range(cols):
            w[r][dst] -= q * w[r][src]

    def swap(c1, c2):
        for r in range(rows):
            h[r][c1], h[r][c2] = h[r][c2], h[r][c1]
        for r in range(cols):
            w[r][c1], w[r][c2] = w[r][c2], w[r][c1]

    rank = 0
    for r in range(rows):
        if rank >= cols:
            break
        # euclid on row r across columns rank..cols-1
        while True:
            nz = [c for c in range(rank, cols) if h[r][c] != 0]
            if not nz:
                break
            piv = min(nz, key=lambda c: abs(h[r][c]))
            if piv != rank:
                swap(piv, rank)
            done = True
            for c in range(rank + 1, cols):
                if h[r][c] != 0:
                    colop(c, rank, h[r][c] // h[r][rank])
                    if h[r][c] != 0:
                        done = False
            if done:
                break
        if any(h[r][c] != 0 for c in range(rank, cols)):
            if h[r][rank] < 0:
                for rr in range(rows):
                    h[rr][rank] = -h[rr][rank]
                for rr in range(cols):
                    w[rr][rank] = -w[rr][rank]
            rank += 1
    return h, w, rank


def complex_roots(desc: Sequence, prec: int, maxsteps: int = 200) -> list:
    """All complex roots of a polynomial given by descending coefficients.

    Repeated roots only converge to about half the working precision, so the
    extra precision is raised until mpmath's iteration settles.
    """
    last = None
    for extra in (2 * prec, 10 * prec, 40 * prec):
        try:
            return list(mpmath.polyroots(desc, maxsteps=maxsteps, extraprec=extra))
        except mpmath.libmp.NoConvergence as exc:
            last = exc
    raise last

