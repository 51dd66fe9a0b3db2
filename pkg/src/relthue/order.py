"""Monogenic orders Z[theta] with exact arithmetic and numeric embeddings."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Sequence

import mpmath
import numpy as np

from . import polys
from .errors import CardinalityCapError, PrecisionError

DEFAULT_PRECISION = 60
DEFAULT_ENUM_CAP = 20_000_000


def parse_polynomial(poly) -> list[int]:
    """Return ascending integer coefficients.

    Accepts a string such as ``"x^3 - 8*x^2 + 15*x - 7"`` or a sequence of
    coefficients in *descending* order (the way polynomials are written).
    """
    if isinstance(poly, str):
        import sympy

        x = sympy.Symbol("x")
        p = sympy.Poly(sympy.sympify(poly.replace("^", "**")), x)
        desc = [c for c in p.all_coeffs()]
        for c in desc:
            if not c.is_integer:
                raise ValueError(f"non-integer coefficient {c} in {poly!r}")
        return [int(c) for c in reversed(desc)]
    desc = list(poly)
    for c in desc:
        if int(c) != c:
            raise ValueError(f"non-integer coefficient {c!r}")
    return [int(c) for c in reversed(desc)]


def format_polynomial(coeffs: Sequence[int], var: str = "x") -> str:
    terms = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = coeffs[k]
        if c == 0:
            continue
        mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
        if mono and abs(c) == 1:
            s = mono
        elif mono:
            s = f"{abs(c)}*{mono}"
        else:
            s = str(abs(c))
        terms.append(("-" if c < 0 else "+", s))
    if not terms:
        return "0"
    out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sgn, s in terms[1:]:
        out += f" {sgn} {s}"
    return out


def _sort_roots(roots, tol):
    real, cplx = [], []
    for r in roots:
        if abs(mpmath.im(r)) < tol:
            real.append(mpmath.mpf(mpmath.re(r)))
        else:
            cplx.append(mpmath.mpc(r))
    real.sort()
    cplx.sort(key=lambda z: (mpmath.re(z), mpmath.im(z)))
    return real, cplx


class OrderContext:
    """The order Z[theta] for a monic irreducible integer polynomial.

    ``coeffs`` are ascending.  Embeddings are the complex roots of the
    polynomial, real roots first in ascending order, then non-real roots by
    (Re, Im).  Numerics are computed at ``precision`` decimal digits and only
    the first half of them is trusted.
    """

    def __init__(self, coeffs: Sequence[int], precision: int = DEFAULT_PRECISION, name: str = "theta"):
        coeffs = polys.trim([int(c) for c in coeffs])
        if len(coeffs) < 2:
            raise ValueError("defining polynomial must have degree >= 1")
        if coeffs[-1] != 1:
            raise ValueError("defining polynomial must be monic")
        self.coeffs = coeffs
        self.degree = len(coeffs) - 1
        self.precision = int(precision)
        self.name = name
        n = self.degree
        # theta^k reduced to the power basis, k < 2n - 1
        red = []
        for k in range(2 * n - 1):
            if k < n:
                red.append(tuple(int(i == k) for i in range(n)))
            else:
                prev = red[k - 1]
                top = prev[n - 1]
                shifted = [0] + list(prev[: n - 1])
                red.append(tuple(shifted[i] - top * coeffs[i] for i in range(n)))
        self._red = red
        self.embeddings, self.signature = self._compute_roots(self.precision)
        self._higher: dict[int, OrderContext] = {}

    # -- construction helpers -------------------------------------------------

    def _compute_roots(self, prec):
        n = self.degree
        if n == 1:
            return [mpmath.mpf(-self.coeffs[0])], (1, 0)
        with mpmath.workdps(prec + 20):
            desc = list(reversed(self.coeffs))
            try:
                roots = mpmath.polyroots(desc, maxsteps=400 + 20 * n, extraprec=4 * prec + 200)
            except mpmath.libmp.NoConvergence as exc:  # pragma: no cover - defensive
                raise PrecisionError(f"root finder did not converge: {exc}") from exc
            tol = mpmath.mpf(10) ** (-(prec // 2))
            for r in roots:
                if abs(polys.peval(self.coeffs, r)) > tol * (1 + abs(r)) ** n:
                    raise PrecisionError("root finder failed to certify roots at requested precision")
            real, cplx = _sort_roots(roots, tol)
        with mpmath.workdps(prec):
            real = [+r for r in real]
            cplx = [+z for z in cplx]
        return real + cplx, (len(real), len(cplx) // 2)

    def at_precision(self, prec: int) -> "OrderContext":
        """Same order with embeddings recomputed at ``prec`` digits."""
        if prec == self.precision:
            return self
        if prec not in self._higher:
            self._higher[prec] = OrderContext(self.coeffs, prec, self.name)
        return self._higher[prec]

    @cached_property
    def multiplication_table(self) -> list[list[tuple[int, ...]]]:
        n = self.degree
        return [[self._red[i + j] for j in range(n)] for i in range(n)]

    @cached_property
    def embeddings_np(self) -> np.ndarray:
        return np.array([complex(r) for r in self.embeddings], dtype=np.complex128)

    @cached_property
    def vandermonde_np(self) -> np.ndarray:
        """Rows are embeddings, columns powers: ``conj = V @ coords``."""
        return np.vander(self.embeddings_np, self.degree, increasing=True)

    @property
    def is_totally_real(self) -> bool:
        return self.signature[1] == 0

    @cached_property
    def discriminant(self) -> int:
        return polys.discriminant(self.coeffs)

    def __repr__(self):
        return f"OrderContext({format_polynomial(self.coeffs)}, prec={self.precision})"

    def __eq__(self, other):
        return isinstance(other, OrderContext) and other.coeffs == self.coeffs

    def __hash__(self):
        return hash(tuple(self.coeffs))

    # -- element construction --------------------------------------------------

    def element(self, coords: Sequence[int]) -> "OrderElement":
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.degree:
            raise ValueError(f"expected {self.degree} coordinates, got {len(coords)}")
        return OrderElement(self, coords)

    def from_int(self, c: int) -> "OrderElement":
        return OrderElement(self, (int(c),) + (0,) * (self.degree - 1))

    @property
    def one(self) -> "OrderElement":
        return self.from_int(1)

    @property
    def zero(self) -> "OrderElement":
        return self.from_int(0)

    @property
    def theta(self) -> "OrderElement":
        if self.degree == 1:
            return self.from_int(-self.coeffs[0])
        return self.element([int(i == 1) for i in range(self.degree)])

    def reduce_poly(self, p: Sequence[int]) -> tuple[int, ...]:
        """Coordinates of p(theta) for an arbitrary integer polynomial p."""
        n = self.degree
        out = [0] * n
        p = list(p)
        # long division by the monic defining polynomial
        while len(p) > n:
            top = p.pop()
            if top:
                shift = len(p) - n
                for i in range(n):
                    p[shift + i] -= top * self.coeffs[i]
        for i, c in enumerate(p):
            out[i] += c
        return tuple(out)


@dataclass(frozen=True)
class OrderElement:
    ctx: OrderContext = field(repr=False, compare=False, hash=False)
    coords: tuple[int, ...]

    def __post_init__(self):
        if len(self.coords) != self.ctx.degree:
            raise ValueError("coordinate length does not match context degree")

    def __eq__(self, other):
        if isinstance(other, int):
            return self.coords == self.ctx.from_int(other).coords
        return isinstance(other, OrderElement) and self.ctx == other.ctx and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def _coerce(self, other) -> "OrderElement":
        if isinstance(other, OrderElement):
            if other.ctx != self.ctx:
                raise ValueError("elements from different orders")
            return other
        if isinstance(other, int):
            return self.ctx.from_int(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return OrderElement(self.ctx, tuple(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return OrderElement(self.ctx, tuple(-a for a in self.coords))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return OrderElement(self.ctx, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other, self.ctx)

    __rmul__ = __mul__

    def __pow__(self, e: int):
        if e < 0:
            inv = divide_exact(self.ctx.one, self, self.ctx)
            if inv is None:
                raise ValueError("negative power of a non-unit")
            return inv ** (-e)
        result = self.ctx.one
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def is_zero(self) -> bool:
        return not any(self.coords)

    def conjugates(self, prec: int | None = None) -> list:
        ctx = self.ctx if prec is None else self.ctx.at_precision(prec)
        with mpmath.workdps(ctx.precision):
            return [polys.peval(self.coords, r) for r in ctx.embeddings]

    def conjugates_np(self) -> np.ndarray:
        return self.ctx.vandermonde_np @ np.array(self.coords, dtype=float)

    def norm(self) -> int:
        return norm(self, self.ctx)

    def size(self):
        return size(self, self.ctx)

    def trace(self) -> int:
        return trace(self, self.ctx)

    def __repr__(self):
        return f"{self.ctx.name}{list(self.coords)}"


def make_context(poly, precision: int = DEFAULT_PRECISION, name: str = "theta") -> OrderContext:
    coeffs = parse_polynomial(poly) if not isinstance(poly, OrderContext) else poly.coeffs
    if coeffs and coeffs[-1] != 1:
        raise ValueError("defining polynomial must be monic")
    n = len(coeffs) - 1
    if n >= 2:
        # cheap irreducibility sanity check: no rational (hence integer) roots
        c0 = coeffs[0]
        if c0 == 0:
            raise ValueError("defining polynomial is divisible by x")
        divs = _small_divisors(abs(c0))
        if divs is not None:
            for d in divs:
                for r in (d, -d):
                    if polys.peval(coeffs, r) == 0:
                        raise ValueError(f"defining polynomial has rational root {r}")
    return OrderContext(coeffs, precision, name)


def _small_divisors(n: int):
    if n > 10**12:
        return None
    out = []
    d = 1
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            out.append(n // d)
        d += 1
    return sorted(set(out))


def mul(a: OrderElement, b: OrderElement, ctx: OrderContext | None = None) -> OrderElement:
    ctx = ctx or a.ctx
    n = ctx.degree
    if len(a.coords) != n or len(b.coords) != n:
        raise ValueError("dimension mismatch")
    conv = [0] * (2 * n - 1)
    for i, x in enumerate(a.coords):
        if x:
            for j, y in enumerate(b.coords):
                if y:
                    conv[i + j] += x * y
    out = list(conv[:n])
    red = ctx._red
    for k in range(n, 2 * n - 1):
        c = conv[k]
        if c:
            rk = red[k]
            for i in range(n):
                out[i] += c * rk[i]
    return OrderElement(ctx, tuple(out))


def multiplication_matrix(a: OrderElement) -> list[list[int]]:
    """Integer matrix of x -> a*x in the power basis (columns = images)."""
    ctx = a.ctx
    n = ctx.degree
    cols = [mul(a, ctx.element([int(i == k) for i in range(n)]), ctx).coords for k in range(n)]
    return [[cols[k][i] for k in range(n)] for i in range(n)]


def norm(a: OrderElement, ctx: OrderContext | None = None) -> int:
    ctx = ctx or a.ctx
    if a.is_zero():
        return 0
    return polys.resultant(ctx.coeffs, list(a.coords))


def trace(a: OrderElement, ctx: OrderContext | None = None) -> int:
    ctx = ctx or a.ctx
    m = multiplication_matrix(a)
    return sum(m[i][i] for i in range(ctx.degree))


def size(a: OrderElement, ctx: OrderContext | None = None):
    """House of ``a``: the largest absolute value of its conjugates, rounded up."""
    ctx = ctx or a.ctx
    with mpmath.workdps(ctx.precision):
        conj = a.conjugates()
        v = max(abs(c) for c in conj)
        guard = mpmath.mpf(10) ** (-(ctx.precision // 2))
        return v * (1 + guard) + guard


def divide_exact(a: OrderElement, b: OrderElement, ctx: OrderContext | None = None) -> OrderElement | None:
    """Return q with q*b == a when q lies in the order, else None."""
    ctx = ctx or a.ctx
    if b.is_zero():
        raise ZeroDivisionError("division by zero element")
    m = multiplication_matrix(b)
    sol = polys.solve_rational(m, a.coords)
    if sol is None:  # pragma: no cover - b nonzero in a domain
        raise ZeroDivisionError("singular multiplication matrix")
    if any(x.denominator != 1 for x in sol):
        return None
    q = OrderElement(ctx, tuple(int(x) for x in sol))
    assert mul(q, b, ctx) == a
    return q


def divide_rational(a: OrderElement, b: OrderElement) -> list[Fraction]:
    """Coordinates of a/b in the power basis over Q."""
    m = multiplication_matrix(b)
    sol = polys.solve_rational(m, a.coords)
    if sol is None:
        raise ZeroDivisionError("division by zero element")
    return sol


def coordinate_box(ctx: OrderContext, bounds) -> list[int]:
    """Half-widths of a coordinate box containing every element whose
    conjugates satisfy ``|x^(i)| <= bounds[i]``."""
    n = ctx.degree
    bounds = [bounds] * n if np.isscalar(bounds) or isinstance(bounds, mpmath.mpf) else list(bounds)
    with mpmath.workdps(ctx.precision):
        V = mpmath.matrix([[r**k for k in range(n)] for r in ctx.embeddings])
        Vi = mpmath.inverse(V)
        half = []
        for k in range(n):
            s = sum(abs(Vi[k, i]) * mpmath.mpf(bounds[i]) for i in range(n))
            half.append(int(mpmath.floor(s * (1 + mpmath.mpf(10) ** -20) + mpmath.mpf(10) ** -20)))
    return half


def enumerate_bounded(
    ctx: OrderContext,
    bound,
    per_conjugate: Sequence | None = None,
    cap: int = DEFAULT_ENUM_CAP,
) -> Iterator[OrderElement]:
    """Yield every element of size <= ``bound`` (or with ``|x^(i)| <= per_conjugate[i]``).

    Deterministic order: lexicographic in the coordinates.
    """
    n = ctx.degree
    if per_conjugate is None:
        per_conjugate = [bound] * n
    per = [float(b) for b in per_conjugate]
    half = coordinate_box(ctx, per_conjugate)
    total = 1
    for h in half:
        total *= 2 * h + 1
    if total > cap:
        raise CardinalityCapError(f"coordinate box has {total} points (cap {cap})")
    V = ctx.vandermonde_np
    lim = np.array(per)
    ranges = [np.arange(-h, h + 1) for h in half]
    # iterate over the first coordinate, vectorize the rest
    if n > 1:
        rest = np.array(list(itertools.product(*ranges[1:]))).reshape(-1, n - 1)
    else:
        rest = np.zeros((1, 0), dtype=int)
    base_rest = rest @ V[:, 1:].T if n > 1 else np.zeros((1, len(lim)))
    tight = 1e-9
    for c0 in ranges[0]:
        vals = base_rest + c0 * V[:, 0]
        absv = np.abs(vals)
        sure = np.all(absv <= lim * (1 - tight) - tight, axis=1)
        maybe = np.all(absv <= lim * (1 + tight) + tight, axis=1)
        for idx in np.nonzero(maybe)[0]:
            coords = (int(c0),) + tuple(int(v) for v in rest[idx])
            el = OrderElement(ctx, coords)
            if not sure[idx]:
                with mpmath.workdps(ctx.precision):
                    conj = el.conjugates()
                    if any(abs(c) > mpmath.mpf(per_conjugate[i]) for i, c in enumerate(conj)):
                        continue
            yield el


def solve_coordinates(ctx: OrderContext, values: Sequence, check: bool = True) -> OrderElement | None:
    """Round the power-basis coordinates of the element whose conjugates are
    ``values`` (one per embedding).  Returns None if the rounding is not
    trustworthy at the context precision."""
    n = ctx.degree
    with mpmath.workdps(ctx.precision):
        V = mpmath.matrix([[r**k for k in range(n)] for r in ctx.embeddings])
        x = mpmath.lu_solve(V, mpmath.matrix([mpmath.mpc(v) for v in values]))
        coords = []
        tol = mpmath.mpf(10) ** (-(ctx.precision // 4))
        for k in range(n):
            re, im = mpmath.re(x[k]), mpmath.im(x[k])
            c = int(mpmath.nint(re))
            if check and (abs(re - c) > tol or abs(im) > tol):
                return None
            coords.append(c)
    return OrderElement(ctx, tuple(coords))
