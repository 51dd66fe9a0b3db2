"""Initial exponent bound for a two-term unit equation.

Pieces: the constant c1 with ``min log|X^{(ij)}| <= -c1 * E`` for every unit
X of exponent height E; absolute logarithmic heights; and a linear-forms
lower bound (Baker-Wustholz constant) turned into the crossover bound E_B.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from . import polys
from .errors import PrecisionError, VerificationError
from .order import OrderElement, norm


# ---------------------------------------------------------------------------
# c1


@dataclass
class C1Result:
    c1: float
    rows: tuple[int, ...]
    inverse_norm: float
    candidates: int


def compute_c1(L: Sequence[Sequence], max_subsets: int = 5000, prec: int = 50) -> C1Result:
    """Certified c1 for a log matrix ``L`` (rows = embeddings, columns = units)
    whose rows sum to zero column-wise (units of norm +-1).

    For any square submatrix R on rows S, ``E <= |R^-1|_inf * max_S |v|``
    with v = L a.  Because the entries of v sum to zero, the smallest
    entry is at most ``-max|v| / (rows - 1)``.  The best subset among the
    candidates is kept.
    """
    nrows = len(L)
    ncols = len(L[0])
    if ncols == 0:
        raise VerificationError("empty unit system")
    if ncols > nrows:
        raise VerificationError("more units than embeddings")
    combos = itertools.combinations(range(nrows), ncols)
    total = math.comb(nrows, ncols)
    if total > max_subsets:
        # heuristic candidate set: drop contiguous blocks of rows
        drop = nrows - ncols
        combos = (tuple(r for r in range(nrows) if not (s <= r < s + drop)) for s in range(nrows - drop + 1))
    best = None
    count = 0
    with mpmath.workdps(prec):
        Lm = [[mpmath.mpf(v) for v in row] for row in L]
        for rows in combos:
            count += 1
            R = mpmath.matrix([Lm[r] for r in rows])
            try:
                if abs(mpmath.det(R)) < mpmath.mpf(10) ** (-(prec // 3)):
                    continue
                Ri = mpmath.inverse(R)
            except (ZeroDivisionError, TypeError):
                # mpmath's LU raises TypeError on an all-zero pivot column
                continue
            nrm = max(mpmath.fsum(abs(Ri[a, b]) for b in range(ncols)) for a in range(ncols))
            c1 = 1 / ((nrows - 1) * nrm)
            if best is None or c1 > best.c1:
                best = C1Result(float(c1), tuple(rows), float(nrm), 0)
    if best is None:
        raise VerificationError("log matrix is rank deficient")
    best.candidates = count
    # round down slightly so the float is a valid lower bound
    best.c1 = best.c1 * (1 - 1e-12)
    return best


# ---------------------------------------------------------------------------
# heights


def height_unit(u: OrderElement, prec: int = 50) -> float:
    """Absolute logarithmic height of a unit: mean of log+ of |conjugates|."""
    with mpmath.workdps(prec):
        conj = u.conjugates(prec)
        s = mpmath.fsum(max(mpmath.mpf(0), mpmath.log(abs(c))) for c in conj)
        return float(s / len(conj)) * (1 + 1e-12) + 1e-15


def char_poly_quotient(A: OrderElement, D: OrderElement | int) -> list[int]:
    """Integer polynomial Q(x) = N(D*x - A) (ascending), whose roots are the
    conjugates of A/D.  Obtained by exact interpolation of norms."""
    ctx = A.ctx
    n = ctx.degree
    Dn = D if isinstance(D, OrderElement) else ctx.from_int(int(D))
    xs = list(range(n + 1))
    ys = [norm(Dn * ctx.from_int(x) - A) for x in xs]
    coeffs = polys.interpolate_integer(xs, ys)
    if any(c.denominator != 1 for c in coeffs):
        raise VerificationError("norm interpolation is not integral")
    return polys.trim([int(c) for c in coeffs])


def height_quotient(A: OrderElement, D: OrderElement | int = 1, prec: int = 50) -> float:
    """Absolute logarithmic height of A/D for A, D in an order."""
    if A.is_zero():
        raise ValueError("height of zero")
    Q = char_poly_quotient(A, D)
    n = len(Q) - 1
    g = polys.content(Q)
    lc = abs(Q[-1]) // g
    with mpmath.workdps(prec):
        ca = A.conjugates(prec)
        if isinstance(D, OrderElement):
            cd = D.conjugates(prec)
        else:
            cd = [mpmath.mpf(int(D))] * len(ca)
        s = mpmath.fsum(max(mpmath.mpf(0), mpmath.log(abs(a / d))) for a, d in zip(ca, cd))
        h = (mpmath.log(lc) + s) / n
        return float(h) * (1 + 1e-12) + 1e-15


def height_rational(q: Fraction) -> float:
    q = Fraction(q)
    if q == 0:
        raise ValueError("height of zero")
    return math.log(max(abs(q.numerator), abs(q.denominator)))


# ---------------------------------------------------------------------------
# Baker-Wustholz bound


@dataclass
class LinearFormSpec:
    """``Lambda = constant_term + sum a_k * coefficients[k]`` with integer a_k.

    ``algebraic_heights`` lists h(beta) followed by h(u_k).  ``scale`` is the
    factor c in ``|Lambda| < c * exp(-c1 * E)`` (2|alpha| at the small slot).
    ``threshold_abs`` is the |alpha| whose product with exp(-c1 E) must drop
    below 0.795 before the log estimate applies.
    """

    constant_term: float
    coefficients: list[float]
    algebraic_heights: list[float]
    degree: int
    scale: float = 2.0
    threshold_abs: float = 1.0
    label: str = ""

    @property
    def n_logs(self) -> int:
        return len(self.coefficients) + 1


class BakerWustholzBackend:
    """Lower bound ``log|Lambda| > -C(n,d) * prod h'(alpha_i) * max(log E, 1/d)``
    with ``C(n,d) = 18 (n+1)! n^(n+1) (32 d)^(n+2) log(2 n d)`` and modified
    heights ``h'(x) = max(h(x), |log x| / d, 1/d)``."""

    name = "baker-wustholz-1993"

    @staticmethod
    def cnd(n: int, d: int) -> float:
        return 18 * math.factorial(n + 1) * n ** (n + 1) * (32 * d) ** (n + 2) * math.log(2 * n * d)

    def modified_heights(self, spec: LinearFormSpec) -> list[float]:
        d = spec.degree
        logs = [abs(spec.constant_term)] + [abs(c) for c in spec.coefficients]
        return [max(h, lg / d, 1 / d) for h, lg in zip(spec.algebraic_heights, logs)]

    def constant(self, spec: LinearFormSpec) -> float:
        return self.cnd(spec.n_logs, spec.degree) * math.prod(self.modified_heights(spec))


class ConstantBackend:
    """A fixed constant C, for tests and for bounds supplied from elsewhere."""

    name = "constant"

    def __init__(self, C: float):
        self.C = float(C)

    def modified_heights(self, spec: LinearFormSpec) -> list[float]:
        return list(spec.algebraic_heights)

    def constant(self, spec: LinearFormSpec) -> float:
        return self.C


@dataclass
class BakerData:
    c1: float
    C: float
    E_B: int
    per_conjugate: list[dict] = field(default_factory=list)
    backend: str = BakerWustholzBackend.name
    c1_rows: tuple[int, ...] = ()


def baker_bound(spec: LinearFormSpec, c1: float, backend: BakerWustholzBackend | ConstantBackend | None = None) -> tuple[int, float, dict]:
    """Smallest integer E_B with ``c1*E > C*max(log E, 1/d) + log(scale)`` for
    all real E > E_B (the floor of the last crossover); also never below the 0.795 threshold.  Returns
    ``(E_B, C, certificate)``."""
    backend = backend or BakerWustholzBackend()
    C = backend.constant(spec)
    d = spec.degree
    with mpmath.workdps(40):
        c1m = mpmath.mpf(c1)
        Cm = mpmath.mpf(C)
        cc = mpmath.log(mpmath.mpf(spec.scale))

        def f(E):
            E = mpmath.mpf(E)
            return c1m * E - Cm * max(mpmath.log(E), mpmath.mpf(1) / d) - cc

        lo = max(mpmath.mpf(1), Cm / c1m)
        if f(lo) > 0:
            root = mpmath.mpf(1)
            # f is increasing past C/c1; check for a root below
            lo2 = mpmath.mpf(1)
            if f(lo2) <= 0:
                a, b = lo2, lo
                for _ in range(300):
                    mid = (a + b) / 2
                    if f(mid) > 0:
                        b = mid
                    else:
                        a = mid
                root = b
        else:
            hi = lo * 2
            while f(hi) <= 0:
                hi *= 2
            a, b = lo, hi
            for _ in range(400):
                mid = (a + b) / 2
                if f(mid) > 0:
                    b = mid
                else:
                    a = mid
            root = b
        E_cross = max(1, int(mpmath.floor(root)))
        E_thr = 0
        if spec.threshold_abs > 0.795:
            E_thr = int(mpmath.ceil(mpmath.log(mpmath.mpf(spec.threshold_abs) / mpmath.mpf("0.795")) / c1m))
        E_B = max(E_cross, E_thr)
        cert = {
            "C": C,
            "f_at_EB": float(f(E_B)),
            "f_at_EB_plus_1": float(f(E_B + 1)),
            "threshold": E_thr,
            "modified_heights": backend.modified_heights(spec),
        }
        if E_B == E_cross and E_B > 1 and not f(E_B + 1) > 0:  # pragma: no cover - defensive
            raise PrecisionError("crossover certificate failed")
    return E_B, C, cert
