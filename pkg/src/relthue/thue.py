"""Cubic resolvent equations and quartic relative Thue equations.

The resolvent ``F(U, V) = U^3 + f2 U^2 V + f1 U V^2 + f0 V^3`` over Z_M is
classified by how many of its roots lie in M.  One root (Case C) reduces to a
unit equation in the quadratic extension G; three roots (Case A) to a unit
equation over M.  Quartic relative Thue equations with totally complex
generator are solved by enumerating the bounded box that every solution must
lie in.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from . import forms as bf
from . import polys
from .errors import CaseBDataRequired, PrecisionError, VerificationError
from .order import OrderContext, OrderElement, divide_exact, enumerate_bounded, norm, solve_coordinates
from .units import UnitSystem, embed_base, exponent_vector_to_element
from .unitsolve import (
    UnitSolveReport,
    build_case_a_equation,
    build_case_c_equation,
    solve_unit_equation,
)


# ---------------------------------------------------------------------------
# roots in an order


def roots_in_order(coeffs: Sequence[OrderElement], ctx: OrderContext, target: OrderContext | None = None,
                   base_image: OrderElement | None = None, pairing=None) -> list[OrderElement]:
    """Roots lying in ``target`` (default ``ctx``) of the monic polynomial with
    ascending coefficients ``coeffs`` over ``ctx``.

    Numeric roots at every embedding are combined, rounded to coordinates and
    verified exactly.  When ``target`` is a quadratic extension G of ctx the
    embeddings of G are matched through ``pairing``.
    """
    target = target or ctx
    prec = target.precision
    deg = len(coeffs) - 1
    if deg < 1:
        return []
    if not (coeffs[-1] - ctx.one).is_zero():
        raise ValueError("polynomial must be monic")
    lifted = coeffs if target is ctx else [embed_base(ctx, target, base_image, c) for c in coeffs]
    found: list[OrderElement] = []
    with mpmath.workdps(prec):
        # roots at each embedding of the target
        per_emb = []
        for r in target.embeddings:
            cs = [polys.peval(c.coords, r) for c in reversed(lifted)]
            per_emb.append(polys.complex_roots(cs, prec))
        n = target.degree
        if deg ** n > 50000:
            raise PrecisionError("too many root combinations to test")
        for choice in itertools.product(range(deg), repeat=n):
            vals = [per_emb[k][choice[k]] for k in range(n)]
            el = solve_coordinates(target, vals)
            if el is None:
                continue
            # exact verification
            acc = target.zero
            for c in reversed(lifted):
                acc = acc * el + c
            if acc.is_zero() and el not in found:
                found.append(el)
            if len(found) == deg:
                break
    return found


def restrict_to_base(us: UnitSystem, x: OrderElement) -> OrderElement | None:
    """The element of Z_M whose image in G is ``x``, or None."""
    if us.sigma(x) != x:
        return None
    with mpmath.workdps(us.G.precision):
        conj = x.conjugates()
        vals = [conj[us.pairing[i][0]] for i in range(us.m)]
    y = solve_coordinates(us.M, vals)
    if y is None or embed_base(us.M, us.G, us.base_image, y) != x:
        return None
    return y


# ---------------------------------------------------------------------------
# resolvent


@dataclass
class ResolventEquation:
    """``F(U, V) = eps * nu`` with N_{M/Q}(nu) = +-rhs_norm."""

    M: OrderContext
    F: list[OrderElement]  # coefficients of U^3, U^2 V, U V^2, V^3
    rhs_norm: int
    nu_reps: list[OrderElement]
    case: str
    roots: list[OrderElement] = field(default_factory=list)
    quadratic: list[OrderElement] | None = None  # ascending (b0, b1, 1)

    def evaluate(self, U: OrderElement, V: OrderElement) -> OrderElement:
        return bf.bf_eval(self.F, U, V)

    def factor_product(self) -> list[OrderElement]:
        """Product of the factors as a binary cubic (for the re-expansion check)."""
        one = self.M.one
        parts = [[one, -lam] for lam in self.roots]
        if self.quadratic is not None:
            b0, b1, _ = self.quadratic
            parts.append([one, b1, b0])
        if not parts:
            return list(self.F)
        out = parts[0]
        for p in parts[1:]:
            out = bf.bf_mul(out, p)
        return out


def classify_resolvent(F: Sequence[OrderElement], M: OrderContext, rhs_norm: int = 1,
                       nu_reps: Sequence[OrderElement] | None = None) -> ResolventEquation:
    """Locate the roots of F(x, 1) in Z_M and tag the case (3 -> A, 1 -> C, 0 -> B)."""
    F = list(F)
    if len(F) != 4 or F[0] != M.one:
        raise VerificationError("resolvent must be a monic binary cubic")
    asc = [F[3], F[2], F[1], F[0]]
    roots = roots_in_order(asc, M)
    if len(roots) == 2:  # the third root is forced by the trace
        roots.append(-F[1] - roots[0] - roots[1])
    quad = None
    if len(roots) == 3:
        case = "A"
    elif len(roots) == 1:
        case = "C"
        lam = roots[0]
        b1 = F[1] + lam
        b0 = F[2] + lam * b1
        if not (F[3] + lam * b0).is_zero():
            raise VerificationError("linear factor does not divide the resolvent")
        quad = [b0, b1, M.one]
    else:
        case = "B"
    reps = list(nu_reps) if nu_reps is not None else ([M.one] if abs(rhs_norm) == 1 else [])
    res = ResolventEquation(M, F, rhs_norm, reps, case, roots, quad)
    if res.factor_product() != F:
        raise VerificationError("factorization does not re-expand to the resolvent")
    return res


@dataclass
class CaseCData:
    lam: OrderElement  # lambda_1 in M
    rho: OrderElement  # root of the quadratic factor, in G
    delta_M: OrderElement
    delta_G: OrderElement
    us: UnitSystem

    @property
    def lam_G(self) -> OrderElement:
        return embed_base(self.us.M, self.us.G, self.us.base_image, self.lam)

    def coefficients(self) -> tuple[OrderElement, OrderElement]:
        """(A, D) of the equation (A/D) X + sigma((A/D) X) = 1."""
        us = self.us
        dM = embed_base(us.M, us.G, us.base_image, self.delta_M)
        A = (self.lam_G - self.rho) * us.sigma(self.delta_G)
        D = (us.sigma(self.rho) - self.rho) * dM
        return A, D

    def recover(self, X: OrderElement) -> tuple[OrderElement, OrderElement] | None:
        """(U, V) in Z_M from a unit solution X (normalized so nu_M = 1)."""
        us = self.us
        dM = embed_base(us.M, us.G, us.base_image, self.delta_M)
        num = dM - self.delta_G * us.sigma(X)
        V = divide_exact(num, self.rho - self.lam_G)
        if V is None:
            return None
        U = dM + self.lam_G * V
        Um, Vm = restrict_to_base(us, U), restrict_to_base(us, V)
        if Um is None or Vm is None:
            return None
        return Um, Vm


def build_case_C(res: ResolventEquation, us: UnitSystem,
                 delta_pairs: Sequence[tuple[OrderElement, OrderElement]] | None = None) -> list[CaseCData]:
    """Factorization data for Case C; the quadratic factor must split in G."""
    if res.case != "C":
        raise ValueError("resolvent is not in Case C")
    if us.M != res.M and us.M.coeffs != res.M.coeffs:
        raise VerificationError("unit system is over a different base field")
    rhos = roots_in_order(res.quadratic, res.M, us.G, us.base_image)
    if len(rhos) != 2:
        raise VerificationError("the extension does not split the quadratic factor")
    rho = min(rhos, key=lambda r: r.coords)
    if delta_pairs is None:
        if abs(res.rhs_norm) != 1:
            raise VerificationError("delta representatives are required when the right side is not a unit")
        delta_pairs = [(res.M.one, us.G.one)]
    return [CaseCData(res.roots[0], rho, dm, dg, us) for dm, dg in delta_pairs]


@dataclass
class CaseAData:
    lams: tuple[OrderElement, OrderElement, OrderElement]
    deltas: tuple[OrderElement, OrderElement, OrderElement]
    units: list[OrderElement]

    def coefficients(self):
        l1, l2, l3 = self.lams
        d1, d2, d3 = self.deltas
        return (l1 - l2) * d3, (l3 - l1) * d2, (l3 - l2) * d1

    def recover(self, X: OrderElement, Y: OrderElement):
        l1, l2, l3 = self.lams
        d1, d2, d3 = self.deltas
        V = divide_exact(d3 * X - d1, l1 - l3)
        if V is None:
            return None
        U = d1 + l1 * V
        if U - l2 * V != d2 * Y:
            return None
        return U, V


def build_case_A(res: ResolventEquation, units: Sequence[OrderElement],
                 delta_triples: Sequence[tuple] | None = None) -> list[CaseAData]:
    if res.case != "A":
        raise ValueError("resolvent is not in Case A")
    if delta_triples is None:
        if abs(res.rhs_norm) != 1:
            raise VerificationError("delta representatives are required when the right side is not a unit")
        one = res.M.one
        delta_triples = [(one, one, one)]
    lams = tuple(sorted(res.roots, key=lambda r: r.coords))
    return [CaseAData(lams, tuple(d), list(units)) for d in delta_triples]


# ---------------------------------------------------------------------------
# (U, V) up to units


def unit_ratio(a: Sequence[OrderElement], b: Sequence[OrderElement]) -> OrderElement | None:
    """The unit eta with a = eta * b coordinatewise, or None."""
    k = next((i for i, x in enumerate(b) if not x.is_zero()), None)
    if k is None or a[k].is_zero():
        return None
    eta = divide_exact(a[k], b[k])
    if eta is None or abs(eta.norm()) != 1:
        return None
    if all(eta * y == x for x, y in zip(a, b)):
        return eta
    return None


def dedup_up_to_units(items: Sequence[Sequence[OrderElement]]) -> list[tuple[OrderElement, ...]]:
    out: list[tuple[OrderElement, ...]] = []
    for it in items:
        if not any(unit_ratio(it, o) is not None for o in out):
            out.append(tuple(it))
    return out


@dataclass
class ResolventSolution:
    pairs: list[tuple[OrderElement, OrderElement]]
    unit_reports: list[UnitSolveReport] = field(default_factory=list)
    unit_solutions: list[tuple[int, ...]] = field(default_factory=list)
    rejected: int = 0
    equations: list = field(default_factory=list)


def solve_resolvent(res: ResolventEquation, us: UnitSystem | None = None,
                    base_units: Sequence[OrderElement] | None = None,
                    delta_data=None, **solver_opts) -> ResolventSolution:
    """All (U, V) with F(U, V) = eps * nu, up to a unit factor of M."""
    if not res.nu_reps:
        return ResolventSolution([])
    pairs = []
    reports = []
    equations = []
    unit_sols: list[tuple[int, ...]] = []
    rejected = 0
    if res.case == "B":
        raise CaseBDataRequired("Case B data required: resolvent is irreducible over the base field")
    if res.case == "C":
        if us is None:
            raise VerificationError("Case C needs the quadratic extension and its units")
        for cd in build_case_C(res, us, delta_data):
            A, D = cd.coefficients()
            ueq = build_case_c_equation(us, A, D)
            equations.append(ueq)
            rep = solve_unit_equation(ueq, **solver_opts)
            reports.append(rep)
            for sol in rep.solutions.solutions:
                if sol.exponents not in unit_sols:
                    unit_sols.append(sol.exponents)
                X = exponent_vector_to_element(us, sol.exponents, sol.signs[0])
                uv = cd.recover(X)
                if uv is None:
                    rejected += 1
                    continue
                pairs.append(uv)
    else:
        if base_units is None:
            raise VerificationError("Case A needs the fundamental units of the base field")
        r = len(base_units)
        for cd in build_case_A(res, base_units, delta_data):
            A1, A2, D = cd.coefficients()
            ueq = build_case_a_equation(res.M, base_units, A1, A2, D)
            equations.append(ueq)
            rep = solve_unit_equation(ueq, **solver_opts)
            reports.append(rep)
            for sol in rep.solutions.solutions:
                if sol.exponents not in unit_sols:
                    unit_sols.append(sol.exponents)
                X = _power_product(res.M, base_units, sol.exponents[:r], sol.signs[0])
                Y = _power_product(res.M, base_units, sol.exponents[r:], sol.signs[1])
                uv = cd.recover(X, Y)
                if uv is None:
                    rejected += 1
                    continue
                pairs.append(uv)
    good = []
    for U, V in pairs:
        if abs(norm(res.evaluate(U, V))) == abs(res.rhs_norm):
            good.append((U, V))
        else:
            rejected += 1
    uniq = [tuple(p) for p in dedup_up_to_units(good)]
    uniq.sort(key=lambda p: (p[1].coords != (0,) * len(p[1].coords), p[0].coords, p[1].coords))
    return ResolventSolution(uniq, reports, sorted(unit_sols), rejected, equations)


def _power_product(M: OrderContext, units: Sequence[OrderElement], exps: Sequence[int], sign: int = 1) -> OrderElement:
    acc = M.from_int(sign)
    for u, e in zip(units, exps):
        if e > 0:
            acc = acc * u**e
        elif e < 0:
            inv = divide_exact(M.one, u)
            if inv is None:
                raise VerificationError("supplied unit is not invertible")
            acc = acc * inv ** (-e)
    return acc


# ---------------------------------------------------------------------------
# quartic relative Thue equations


@dataclass
class QuarticThueInstance:
    """``form(X, Y) = nu`` for nu in ``rhs``, where form(x, 1) has only
    non-real roots at every (real) embedding of M."""

    M: OrderContext
    form: list[OrderElement]
    rhs: list[OrderElement]
    k: int = 4
    precision: int = 40
    _roots: list | None = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.form) != self.k + 1:
            raise ValueError("form degree does not match k")
        if not self.M.is_totally_real:
            raise VerificationError("the base field must be totally real")

    @property
    def roots(self) -> list[list]:
        """Roots xi^{(ij)} of form(x, 1) per embedding i of M."""
        if self._roots is None:
            self._roots = [bf.bf_conjugate_roots(self.form, i, self.precision) for i in range(self.M.degree)]
            if any(len(r) != self.k for r in self._roots):
                raise VerificationError("leading coefficient vanishes at an embedding")
        return self._roots

    @property
    def min_imag(self) -> float:
        return float(min(abs(mpmath.im(x)) for rs in self.roots for x in rs))

    def is_totally_complex(self) -> bool:
        return self.min_imag > 10 ** (-(self.precision // 3))

    @property
    def c0(self) -> float:
        if not self.is_totally_complex():
            raise VerificationError("form has a real root at some embedding")
        return 1.0 / self.min_imag

    @property
    def xi_bar(self) -> float:
        return float(max(abs(x) for rs in self.roots for x in rs))

    def leading_abs(self) -> list[float]:
        return [float(abs(c)) for c in self.form[0].conjugates(self.precision)]

    def coordinate_bounds(self, nu: OrderElement) -> tuple[list[float], list[float]]:
        """Per-embedding bounds on |X^{(i)}| and |Y^{(i)}| for solutions with right side nu.

        At each embedding some factor |X - xi Y| is at most B = (|nu|/|lc|)^(1/k);
        its imaginary part bounds |Y|, and then |X| <= B + |xi| |Y|.
        """
        lc = self.leading_abs()
        nv = [float(abs(c)) for c in nu.conjugates(self.precision)]
        xb, yb = [], []
        for i, rs in enumerate(self.roots):
            B = (nv[i] / lc[i]) ** (1.0 / self.k)
            mi = float(min(abs(mpmath.im(x)) for x in rs))
            ma = float(max(abs(x) for x in rs))
            y = B / mi
            xb.append((B + ma * y) * (1 + 1e-9) + 1e-9)
            yb.append(y * (1 + 1e-9) + 1e-9)
        return xb, yb


def small_solution_bound(inst: QuarticThueInstance, nu: OrderElement) -> float:
    """|nu|^(1/k) (1 + c0 |xi|) with |.| the house, for monic forms."""
    house = float(max(abs(c) for c in nu.conjugates(inst.precision)))
    return house ** (1.0 / inst.k) * (1 + inst.c0 * inst.xi_bar)


@dataclass
class ThueSolution:
    X: OrderElement
    Y: OrderElement
    nu: OrderElement


def quartic_small_solutions(inst: QuarticThueInstance, cap: int = 10**7) -> list[ThueSolution]:
    """Every (X, Y) in Z_M^2 with form(X, Y) in ``inst.rhs`` (exactly verified)."""
    if not inst.is_totally_complex():
        raise VerificationError("form has a real root at some embedding")
    if not inst.rhs:
        return []
    m = inst.M.degree
    per_rhs = [inst.coordinate_bounds(nu) for nu in inst.rhs]
    xmax = [max(b[0][i] for b in per_rhs) for i in range(m)]
    ymax = [max(b[1][i] for b in per_rhs) for i in range(m)]
    Xs = list(enumerate_bounded(inst.M, None, per_conjugate=xmax, cap=cap))
    Ys = list(enumerate_bounded(inst.M, None, per_conjugate=ymax, cap=cap))
    Vd = inst.M.vandermonde_np
    Xc = np.array([x.coords for x in Xs], dtype=float) @ Vd.T  # (nX, m)
    Yc = np.array([y.coords for y in Ys], dtype=float) @ Vd.T
    # conjugates at working precision: large coordinates can cancel to a
    # small conjugate, which double precision would get wrong
    coef = np.array([[float(v) for v in c.conjugates(inst.precision)] for c in inst.form])  # (k+1, m)
    nus = np.array([[float(v) for v in nu.conjugates(inst.precision)] for nu in inst.rhs])  # (R, m)
    xb = np.array([b[0] for b in per_rhs])
    yb = np.array([b[1] for b in per_rhs])
    k = inst.k
    out: list[ThueSolution] = []
    seen = set()
    for iy, y in enumerate(Ys):
        yv = Yc[iy]
        val = np.zeros_like(Xc)
        mag = np.zeros_like(Xc)
        for t in range(k + 1):
            term = coef[t] * Xc ** (k - t) * yv**t
            val += term
            mag += np.abs(term)
        for r in range(len(inst.rhs)):
            if np.any(np.abs(yv) > yb[r]):
                continue
            ok = np.all(np.abs(Xc) <= xb[r], axis=1)
            ok &= np.all(np.abs(val - nus[r]) <= 1e-9 * (mag + np.abs(nus[r])) + 1e-9, axis=1)
            for ix in np.nonzero(ok)[0]:
                X = Xs[ix]
                if bf.bf_eval(inst.form, X, y) == inst.rhs[r]:
                    key = (X.coords, y.coords, r)
                    if key not in seen:
                        seen.add(key)
                        out.append(ThueSolution(X, y, inst.rhs[r]))
    out.sort(key=lambda s: (s.nu.coords, s.X.coords, s.Y.coords))
    return out


def unit_normalize_rhs(nu: OrderElement, units: Sequence[OrderElement], k: int = 4) -> list[tuple[OrderElement, int, tuple[int, ...]]]:
    """Representatives ``s * nu * prod eps_i^l_i`` with l_i in [-1, k-2] and s = +-1.

    Every unit multiple of nu equals one of these times a k-th power of a unit
    (for k = 4: exponents written as 4 k' + l).
    """
    M = nu.ctx
    lo, hi = -1, k - 2
    out = []
    for s in (1, -1):
        for ell in itertools.product(range(lo, hi + 1), repeat=len(units)):
            out.append((M.from_int(s) * nu * _power_product(M, units, ell), s, tuple(ell)))
    return out
