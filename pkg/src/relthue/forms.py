"""Binary and ternary forms with coefficients in an order.

A binary form of degree k is a list of k+1 OrderElements, entry ``t`` being
the coefficient of ``P^(k-t) Q^t``.  A ternary quadratic form is a list of
six coefficients for ``X^2, XY, Y^2, XZ, YZ, Z^2`` (in that order).
"""

from __future__ import annotations

from typing import Sequence

import mpmath

from . import polys
from .order import OrderContext, OrderElement

TERNARY_MONOMIALS = ((2, 0, 0), (1, 1, 0), (0, 2, 0), (1, 0, 1), (0, 1, 1), (0, 0, 2))


def bf_zero(ctx: OrderContext, k: int) -> list[OrderElement]:
    return [ctx.zero for _ in range(k + 1)]


def bf_add(f: Sequence[OrderElement], g: Sequence[OrderElement]) -> list[OrderElement]:
    if len(f) != len(g):
        raise ValueError("binary forms of different degree")
    return [a + b for a, b in zip(f, g)]


def bf_scale(f: Sequence[OrderElement], c: OrderElement) -> list[OrderElement]:
    return [c * a for a in f]


def bf_mul(f: Sequence[OrderElement], g: Sequence[OrderElement]) -> list[OrderElement]:
    ctx = f[0].ctx
    out = bf_zero(ctx, len(f) + len(g) - 2)
    for i, a in enumerate(f):
        if a.is_zero():
            continue
        for j, b in enumerate(g):
            if not b.is_zero():
                out[i + j] = out[i + j] + a * b
    return out


def bf_eval(f: Sequence[OrderElement], P: OrderElement, Q: OrderElement) -> OrderElement:
    k = len(f) - 1
    ctx = f[0].ctx
    acc = ctx.zero
    Pp = [ctx.one]
    Qp = [ctx.one]
    for _ in range(k):
        Pp.append(Pp[-1] * P)
        Qp.append(Qp[-1] * Q)
    for t, c in enumerate(f):
        if not c.is_zero():
            acc = acc + c * Pp[k - t] * Qp[t]
    return acc


def bf_is_zero(f: Sequence[OrderElement]) -> bool:
    return all(c.is_zero() for c in f)


def bf_conjugate_roots(f: Sequence[OrderElement], emb_index: int, prec: int) -> list:
    """Roots of f(x, 1) at one embedding of the coefficient field."""
    ctx = f[0].ctx.at_precision(prec)
    with mpmath.workdps(prec):
        r = ctx.embeddings[emb_index]
        coeffs = [polys.peval(c.coords, r) for c in f]  # descending in x
        while coeffs and coeffs[0] == 0:
            coeffs = coeffs[1:]
        if len(coeffs) <= 1:
            return []
        return polys.complex_roots(coeffs, prec)


def tq_eval(q: Sequence[OrderElement], x: OrderElement, y: OrderElement, z: OrderElement) -> OrderElement:
    vals = (x * x, x * y, y * y, x * z, y * z, z * z)
    acc = x.ctx.zero
    for c, v in zip(q, vals):
        if not c.is_zero():
            acc = acc + c * v
    return acc


def tq_bilinear(q, v: Sequence[OrderElement], w: Sequence[OrderElement]) -> OrderElement:
    """B(v, w) = q(v + w) - q(v) - q(w)."""
    s = [a + b for a, b in zip(v, w)]
    return tq_eval(q, *s) - tq_eval(q, *v) - tq_eval(q, *w)


def tq_combine(a: OrderElement, q1, b: OrderElement, q2) -> list[OrderElement]:
    """a*q1 + b*q2 coefficientwise."""
    return [a * c1 + b * c2 for c1, c2 in zip(q1, q2)]


def tq_substitute(q, fX, fY, fZ) -> list[OrderElement]:
    """q(fX, fY, fZ) for binary forms fX, fY, fZ of a common degree."""
    parts = (bf_mul(fX, fX), bf_mul(fX, fY), bf_mul(fY, fY), bf_mul(fX, fZ), bf_mul(fY, fZ), bf_mul(fZ, fZ))
    ctx = fX[0].ctx
    out = bf_zero(ctx, 2 * (len(fX) - 1))
    for c, part in zip(q, parts):
        if not c.is_zero():
            out = bf_add(out, bf_scale(part, c))
    return out


def bf_linear_combination(coeffs: Sequence[OrderElement], forms: Sequence[Sequence[OrderElement]]) -> list[OrderElement]:
    out = bf_zero(forms[0][0].ctx, len(forms[0]) - 1)
    for c, f in zip(coeffs, forms):
        out = bf_add(out, bf_scale(f, c))
    return out


def format_binary(f: Sequence[OrderElement]) -> str:
    k = len(f) - 1
    terms = []
    for t, c in enumerate(f):
        if c.is_zero():
            continue
        mono = "*".join(x for x in ((f"P^{k - t}" if k - t > 1 else "P" if k - t == 1 else ""), (f"Q^{t}" if t > 1 else "Q" if t == 1 else "")) if x)
        terms.append(f"{list(c.coords)}{'*' + mono if mono else ''}")
    return " + ".join(terms) if terms else "0"
