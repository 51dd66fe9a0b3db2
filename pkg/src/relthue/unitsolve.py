"""Resolution of two-term unit equations.

Every equation handled here has the paired shape

    s1 * alpha^{(i,0)} * P^{(i,0)} + s2 * alpha^{(i,1)} * P^{(i,1)} = 1   (i = 1..m)

where ``P = prod u_k ** a_k`` evaluated at the slot (i, j) and (s1, s2) is
a sign choice.  When the two terms are relative conjugates (the quadratic
extension case) the slots are the two embeddings of G over the i-th
embedding of M; for a unit equation over M with independent unknowns X, Y
the slot (i, 0) carries X and (i, 1) carries Y.

Pipeline: c1 and a Baker bound, LLL reduction per slot, then the shrinking
window enumeration with exceptional ellipsoids, a mod-p sieve and exact
verification.
"""

from __future__ import annotations

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import mpmath
import numpy as np

from . import polys
from .baker import BakerData, LinearFormSpec, baker_bound, compute_c1, height_quotient, height_unit
from .errors import ScheduleError, VerificationError
from .lattice import (
    DEFAULT_POINT_CAP,
    EllipsoidProblem,
    EnumerationStats,
    IntegerLattice,
    ReductionResult,
    fincke_pohst,
    lll_reduce,
    reduce_to_fixpoint,
)
from .order import OrderContext, OrderElement, divide_exact
from .units import UnitSystem, exponent_vector_to_element

LOG_WINDOW = 0.795


# ---------------------------------------------------------------------------
# data


@dataclass
class PrimeCheck:
    """One ring homomorphism to F_p: the congruence
    ``s1*c1*prod u(r1)^a + s2*c2*prod u(r2)^a == rhs`` with the unit values
    stored as discrete logs."""

    c1: int
    dl1: np.ndarray
    c2: int
    dl2: np.ndarray
    rhs: int


@dataclass
class PrimeData:
    p: int
    generator: int
    powers: np.ndarray
    checks: list[PrimeCheck]
    roots: list[int]


@dataclass
class SievePlan:
    primes: list[PrimeData] = field(default_factory=list)

    @property
    def prime_list(self) -> list[int]:
        return [pd.p for pd in self.primes]


@dataclass
class UnitEquation:
    """Numeric and exact data of a paired unit equation (see module doc)."""

    m: int
    n_exp: int
    values_at: Callable[[int], tuple]
    quotient_matrix: list[list[int]]
    sign_choices: list[tuple[int, int]]
    exact_check: Callable[[tuple, tuple], bool | None]
    alpha_heights: tuple[float, float]
    unit_heights: list[float]
    field_degree: int
    sieve_builder: Callable[[int], list[PrimeCheck] | None] | None = None
    symmetric: bool = False
    label: str = ""
    _cache: dict = field(default_factory=dict, repr=False)

    def logs_at(self, prec: int):
        """(alpha_logs[m][2], slot_logs[m][2][n]) at ``prec`` digits."""
        key = ("logs", prec)
        if key not in self._cache:
            av, uv = self.values_at(prec)
            with mpmath.workdps(prec):
                al = [[mpmath.log(abs(av[i][j])) for j in range(2)] for i in range(self.m)]
                sl = [
                    [[mpmath.log(abs(uv[i][j][k])) if uv[i][j][k] != 0 else mpmath.mpf(0) for k in range(self.n_exp)] for j in range(2)]
                    for i in range(self.m)
                ]
                # columns with a structurally absent unit are stored as exact zeros
                for i in range(self.m):
                    for j in range(2):
                        for k in range(self.n_exp):
                            if uv[i][j][k] == 1:
                                sl[i][j][k] = mpmath.mpf(0)
            self._cache[key] = (al, sl)
        return self._cache[key]

    def log_matrix(self, prec: int = 60) -> list[list]:
        _, sl = self.logs_at(prec)
        return [sl[i][j] for i in range(self.m) for j in range(2)]

    def alpha_abs(self, prec: int = 60):
        av, _ = self.values_at(prec)
        return [[abs(av[i][j]) for j in range(2)] for i in range(self.m)]


@dataclass
class Solution:
    exponents: tuple[int, ...]
    signs: tuple[int, int]
    exact: bool
    source: str = ""


@dataclass
class SolutionSet:
    solutions: list[Solution] = field(default_factory=list)

    def exponent_set(self) -> set[tuple[int, ...]]:
        return {s.exponents for s in self.solutions}

    def add(self, sol: Solution):
        for s in self.solutions:
            if s.exponents == sol.exponents and s.signs == sol.signs:
                return
        self.solutions.append(sol)
        self.solutions.sort(key=lambda s: (s.exponents, s.signs))


@dataclass
class EnumerationSchedule:
    """Window schedule as natural logs: steps of (log S, log s) and the final log S."""

    steps: list[tuple[float, float]]
    final_log_S: float

    def validate(self):
        for lS, ls in self.steps:
            if not ls < lS:
                raise ScheduleError("schedule needs s < S in every step")
            if 2 * math.exp(-ls) >= LOG_WINDOW:
                raise ScheduleError("schedule violates 2/s < 0.795")
        if 2 * math.exp(-self.final_log_S) >= LOG_WINDOW:
            raise ScheduleError("final window violates 2/s < 0.795")

    @classmethod
    def from_s_values(cls, log_S0: float, s_values: Sequence[float]) -> "EnumerationSchedule":
        steps = []
        lS = log_S0
        for s in s_values:
            ls = math.log(float(s))
            if ls >= lS:
                continue
            steps.append((lS, ls))
            lS = ls
        sch = cls(steps, lS)
        sch.validate()
        return sch

    @classmethod
    def automatic(cls, log_S0: float, final: float = 100.0) -> "EnumerationSchedule":
        """s = sqrt(S) until S reaches ``final``."""
        steps = []
        lS = log_S0
        lf = math.log(final)
        while lS > lf * (1 + 1e-9):
            ls = max(lS / 2, lf)
            steps.append((lS, ls))
            lS = ls
        sch = cls(steps, lS)
        sch.validate()
        return sch

    def as_rows(self) -> list[dict]:
        rows = [{"log10_S": lS / math.log(10), "log10_s": ls / math.log(10)} for lS, ls in self.steps]
        rows.append({"log10_S": self.final_log_S / math.log(10), "log10_s": None})
        return rows


@dataclass
class StepLog:
    case: str
    step: int
    log10_S: float
    log10_s: float | None
    enumerated: int
    per_conjugate: list[int] = field(default_factory=list)
    sieve_passed: int = 0


@dataclass
class UnitSolveReport:
    baker: BakerData | None = None
    reductions: list[dict] = field(default_factory=list)
    E_R: int | None = None
    log_S0: float | None = None
    schedule: EnumerationSchedule | None = None
    steps: list[StepLog] = field(default_factory=list)
    residual_values: int = 0
    residual_values_raw: int = 0
    residual_scanned: int = 0
    sieve_stats: dict = field(default_factory=dict)
    solutions: SolutionSet = field(default_factory=SolutionSet)
    false_rejections: int = 0


# ---------------------------------------------------------------------------
# building equations


def _poly_mod(coords: Sequence[int], r: int, p: int) -> int:
    acc = 0
    for c in reversed(coords):
        acc = (acc * r + c) % p
    return acc


def _primitive_root(p: int) -> int:
    phi = p - 1
    fac = []
    n = phi
    d = 2
    while d * d <= n:
        if n % d == 0:
            fac.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        fac.append(n)
    for g in range(2, p):
        if all(pow(g, phi // q, p) != 1 for q in fac):
            return g
    raise ValueError("no primitive root")  # pragma: no cover


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def roots_mod_p(coeffs: Sequence[int], p: int) -> list[int]:
    return [r for r in range(p) if _poly_mod(coeffs, r, p) == 0]


def splitting_primes(coeffs: Sequence[int], count: int, start: int = 3, avoid: int = 0) -> list[int]:
    """The first ``count`` odd primes over which the polynomial splits into
    distinct linear factors (and which do not divide ``avoid``)."""
    disc = polys.discriminant(coeffs)
    n = len(coeffs) - 1
    out = []
    p = max(3, start)
    while len(out) < count:
        if _is_prime(p) and disc % p and (avoid == 0 or avoid % p):
            if len(roots_mod_p(coeffs, p)) == n:
                out.append(p)
        p += 1
    return out


def build_sieve_plan(ueq: UnitEquation, primes: Sequence[int]) -> SievePlan:
    plan = SievePlan()
    if ueq.sieve_builder is None:
        return plan
    for p in primes:
        g = _primitive_root(p)
        pw = np.array([pow(g, e, p) for e in range(p - 1)], dtype=np.int64)
        checks = ueq.sieve_builder(p)
        if checks is None:
            continue
        plan.primes.append(PrimeData(p, g, pw, checks, []))
    return plan


def _dlog_table(p: int, g: int) -> dict[int, int]:
    t = {}
    x = 1
    for e in range(p - 1):
        t[x] = e
        x = x * g % p
    return t


def _mp_real(x):
    return mpmath.re(x) if isinstance(x, mpmath.mpc) else x


def build_case_c_equation(
    us: UnitSystem,
    A: OrderElement,
    D: OrderElement,
    label: str = "case C",
) -> UnitEquation:
    """Equation ``(A/D) X + sigma((A/D) X) = 1`` for units X of G.

    Slot (i, j) is the G-embedding ``us.pairing[i][j]``.
    """
    G = us.G
    m = us.m
    n = us.rank
    if A.is_zero() or D.is_zero():
        raise VerificationError("vanishing coefficient in the unit equation")
    sD = us.sigma(D)
    lhs_const = D * sD
    # exact data for the check A X sigma(D) + sigma(A X) D == D sigma(D)

    def values_at(prec):
        Gp = G.at_precision(prec + 10)
        with mpmath.workdps(prec + 10):
            ca = [polys.peval(A.coords, r) for r in Gp.embeddings]
            cd = [polys.peval(D.coords, r) for r in Gp.embeddings]
            cu = [[polys.peval(u.coords, r) for r in Gp.embeddings] for u in us.units]
            av = [[_mp_real(ca[us.pairing[i][j]] / cd[us.pairing[i][j]]) for j in range(2)] for i in range(m)]
            uv = [[[_mp_real(cu[k][us.pairing[i][j]]) for k in range(n)] for j in range(2)] for i in range(m)]
        return av, uv

    C = us.conj_matrix
    Qm = [[int(l == k) - C[l][k] for k in range(n)] for l in range(n)]

    def exact_check(a, signs):
        s = signs[0]
        if signs[0] != signs[1]:
            return False
        try:
            X = exponent_vector_to_element(us, a, s)
        except OverflowError:
            return None
        AX = A * X
        return AX * sD + us.sigma(AX) * D == lhs_const

    def sieve_builder(p):
        rts = roots_mod_p(G.coeffs, p)
        if not rts:
            return None
        g = _primitive_root(p)
        dl = _dlog_table(p, g)
        checks = []
        for r in rts:
            sr = _poly_mod(us.sigma_theta.coords, r, p)
            uvals_r = [_poly_mod(u.coords, r, p) for u in us.units]
            uvals_s = [_poly_mod(u.coords, sr, p) for u in us.units]
            if 0 in uvals_r or 0 in uvals_s:
                continue
            Ar, As_ = _poly_mod(A.coords, r, p), _poly_mod(A.coords, sr, p)
            Dr, Ds = _poly_mod(D.coords, r, p), _poly_mod(D.coords, sr, p)
            checks.append(
                PrimeCheck(
                    Ar * Ds % p,
                    np.array([dl[v] for v in uvals_r], dtype=np.int64),
                    As_ * Dr % p,
                    np.array([dl[v] for v in uvals_s], dtype=np.int64),
                    Dr * Ds % p,
                )
            )
        return checks

    h_alpha = height_quotient(A, D)
    return UnitEquation(
        m=m,
        n_exp=n,
        values_at=values_at,
        quotient_matrix=Qm,
        sign_choices=[(1, 1), (-1, -1)],
        exact_check=exact_check,
        alpha_heights=(h_alpha, h_alpha),
        unit_heights=[height_unit(u) for u in us.units],
        field_degree=G.degree,
        sieve_builder=sieve_builder,
        symmetric=True,
        label=label,
    )


def build_case_a_equation(
    M: OrderContext,
    units: Sequence[OrderElement],
    A1: OrderElement,
    A2: OrderElement,
    D: OrderElement,
    label: str = "case A",
) -> UnitEquation:
    """Equation ``(A1/D) X + (A2/D) Y = 1`` with X, Y independent units of M.

    Exponent vectors are (a_1..a_r, b_1..b_r) for X and Y.
    """
    m = M.degree
    r = len(units)
    if A1.is_zero() or A2.is_zero() or D.is_zero():
        raise VerificationError("vanishing coefficient in the unit equation")
    if not M.is_totally_real:
        raise VerificationError("unit equation over M requires a totally real base field")

    def values_at(prec):
        Mp = M.at_precision(prec + 10)
        with mpmath.workdps(prec + 10):
            em = Mp.embeddings
            a1 = [polys.peval(A1.coords, e) / polys.peval(D.coords, e) for e in em]
            a2 = [polys.peval(A2.coords, e) / polys.peval(D.coords, e) for e in em]
            cu = [[polys.peval(u.coords, e) for e in em] for u in units]
            one = mpmath.mpf(1)
            av = [[a1[i], a2[i]] for i in range(m)]
            uv = [[[cu[k][i] for k in range(r)] + [one] * r, [one] * r + [cu[k][i] for k in range(r)]] for i in range(m)]
        return av, uv

    Qm = [[int(l == k) for k in range(r)] + [-int(l == k) for k in range(r)] for l in range(r)]
    inverses = {}

    def power(k, e):
        if e >= 0:
            return units[k] ** e
        if k not in inverses:
            inv = divide_exact(M.one, units[k])
            if inv is None:
                raise VerificationError("supplied unit is not invertible")
            inverses[k] = inv
        return inverses[k] ** (-e)

    def exact_check(a, signs):
        X = M.from_int(signs[0])
        Y = M.from_int(signs[1])
        for k in range(r):
            X = X * power(k, a[k])
            Y = Y * power(k, a[r + k])
        return A1 * X + A2 * Y == D

    def sieve_builder(p):
        rts = roots_mod_p(M.coeffs, p)
        if not rts:
            return None
        g = _primitive_root(p)
        dl = _dlog_table(p, g)
        checks = []
        for rt in rts:
            uv = [_poly_mod(u.coords, rt, p) for u in units]
            if 0 in uv:
                continue
            d = np.array([dl[v] for v in uv], dtype=np.int64)
            z = np.zeros(r, dtype=np.int64)
            checks.append(
                PrimeCheck(
                    _poly_mod(A1.coords, rt, p),
                    np.concatenate([d, z]),
                    _poly_mod(A2.coords, rt, p),
                    np.concatenate([z, d]),
                    _poly_mod(D.coords, rt, p),
                )
            )
        return checks

    hu = [height_unit(u) for u in units]
    return UnitEquation(
        m=m,
        n_exp=2 * r,
        values_at=values_at,
        quotient_matrix=Qm,
        sign_choices=[(1, 1), (1, -1), (-1, 1), (-1, -1)],
        exact_check=exact_check,
        alpha_heights=(height_quotient(A1, D), height_quotient(A2, D)),
        unit_heights=hu + hu,
        field_degree=M.degree,
        sieve_builder=sieve_builder,
        symmetric=False,
        label=label,
    )


# ---------------------------------------------------------------------------
# sieve and verification


def sieve_mod_p(plan: SievePlan, vectors, signs: tuple[int, int] | None = None, sign_choices=None) -> np.ndarray:
    """Boolean mask: which exponent vectors satisfy every congruence of the
    plan for at least one sign choice.  An empty plan passes everything."""
    V = np.atleast_2d(np.asarray(vectors, dtype=np.int64))
    N = V.shape[0]
    if not plan.primes:
        return np.ones(N, dtype=bool)
    choices = [signs] if signs is not None else (sign_choices or [(1, 1)])
    ok_any = np.zeros(N, dtype=bool)
    for s1, s2 in choices:
        ok = np.ones(N, dtype=bool)
        for pd in plan.primes:
            p = pd.p
            for ch in pd.checks:
                idx = np.nonzero(ok)[0]
                if idx.size == 0:
                    break
                sub = V[idx]
                e1 = (sub @ ch.dl1) % (p - 1)
                e2 = (sub @ ch.dl2) % (p - 1)
                val = (s1 * ch.c1 * pd.powers[e1] + s2 * ch.c2 * pd.powers[e2] - ch.rhs) % p
                ok[idx[val != 0]] = False
        ok_any |= ok
    return ok_any


def sieve_pass_single_prime(pd: PrimeData, vectors, sign_choices) -> np.ndarray:
    return sieve_mod_p(SievePlan([pd]), vectors, sign_choices=sign_choices)


def numeric_check(ueq: UnitEquation, a: Sequence[int], signs: tuple[int, int]) -> bool:
    """Is the equation satisfied numerically (at a precision adapted to the
    size of the terms)?"""
    al, sl = ueq.logs_at(40)
    big = 0.0
    for i in range(ueq.m):
        for j in range(2):
            v = float(al[i][j]) + sum(float(sl[i][j][k]) * a[k] for k in range(ueq.n_exp))
            big = max(big, abs(v))
    prec = 40 + int(big / math.log(10)) * 2
    av, uv = ueq.values_at(prec)
    with mpmath.workdps(prec):
        tol = mpmath.mpf(10) ** (-20)
        for i in range(ueq.m):
            terms = []
            for j in range(2):
                t = signs[j] * av[i][j]
                for k in range(ueq.n_exp):
                    if a[k]:
                        t *= uv[i][j][k] ** a[k]
                terms.append(t)
            if abs(terms[0] + terms[1] - 1) > tol * (1 + abs(terms[0]) + abs(terms[1])):
                return False
    return True


def verify_candidate(ueq: UnitEquation, a: Sequence[int], source: str = "") -> list[Solution]:
    out = []
    a = tuple(int(x) for x in a)
    for signs in ueq.sign_choices:
        if not numeric_check(ueq, a, signs):
            continue
        ex = ueq.exact_check(a, signs)
        if ex is False:
            continue
        out.append(Solution(a, signs, ex is True, source))
    return out


# ---------------------------------------------------------------------------
# Baker bound and reduction


def baker_stage(ueq: UnitEquation, prec: int = 60) -> BakerData:
    L = ueq.log_matrix(prec)
    c1r = compute_c1(L)
    al, sl = ueq.logs_at(prec)
    aabs = ueq.alpha_abs(prec)
    per = []
    best_E, best_C = 0, 0.0
    for i in range(ueq.m):
        for j in range(2):
            jp = 1 - j
            ks = [k for k in range(ueq.n_exp) if sl[i][jp][k] != 0]
            spec = LinearFormSpec(
                constant_term=float(al[i][jp]),
                coefficients=[float(sl[i][jp][k]) for k in ks],
                algebraic_heights=[ueq.alpha_heights[jp]] + [ueq.unit_heights[k] for k in ks],
                degree=ueq.field_degree,
                scale=2 * float(aabs[i][j]),
                threshold_abs=float(aabs[i][j]),
                label=f"({i + 1},{j + 1})",
            )
            E, C, cert = baker_bound(spec, c1r.c1)
            per.append({"i": i, "j": j, "c1": c1r.c1, "C": C, "E_B": E, "threshold": cert["threshold"]})
            if E > best_E:
                best_E = E
            best_C = max(best_C, C)
    return BakerData(c1r.c1, best_C, best_E, per, c1_rows=c1r.rows)


def reduction_stage(
    ueq: UnitEquation,
    baker: BakerData,
    H_schedule: Sequence[int] | None = None,
) -> tuple[int, list[dict]]:
    """Reduce the Baker bound at every slot; returns E_R and the step logs."""
    out = []
    E_R = 0
    aabs = ueq.alpha_abs(60)
    c1 = baker.c1
    for i in range(ueq.m):
        for j in range(2):
            jp = 1 - j
            _, sl40 = ueq.logs_at(40)
            ks = [k for k in range(ueq.n_exp) if sl40[i][jp][k] != 0]

            # |alpha| = 1 exactly: the form is homogeneous and the constant
            # column would only contribute a short lattice vector
            homogeneous = ueq.logs_at(40)[0][i][jp] == 0

            def zetas_at(prec, i=i, jp=jp, ks=ks, homogeneous=homogeneous):
                al, sl = ueq.logs_at(prec)
                head = [] if homogeneous else [al[i][jp]]
                return head + [sl[i][jp][k] for k in ks]

            scale = 2 * float(aabs[i][j])
            res: ReductionResult = reduce_to_fixpoint(zetas_at, scale, c1, 0.0, baker.E_B, H_schedule=H_schedule)
            thr = 0
            if float(aabs[i][j]) > LOG_WINDOW:
                thr = math.ceil(math.log(float(aabs[i][j]) / LOG_WINDOW) / c1)
            bound = max(res.bound, thr)
            out.append(
                {
                    "i": i,
                    "j": j,
                    "bound": bound,
                    "rounds": res.rounds,
                    "steps": [s.as_row() for s in res.steps],
                }
            )
            E_R = max(E_R, bound)
    return E_R, out


def initial_log_S(ueq: UnitEquation, E_R: int, prec: int = 40) -> float:
    """log S with 1/S <= |alpha X| <= S at every slot for every exponent
    vector in the box [-E_R, E_R]^n."""
    al, sl = ueq.logs_at(prec)
    best = 0.0
    for i in range(ueq.m):
        for j in range(2):
            v = abs(float(al[i][j])) + E_R * sum(abs(float(x)) for x in sl[i][j])
            best = max(best, v)
    return best * (1 + 1e-12) + 1e-9


# ---------------------------------------------------------------------------
# ellipsoids


def case1_ellipsoid(ueq: UnitEquation, log_S: float, s: float | None, ij0: tuple[int, int] | None, E_R: int, prec: int = 80) -> EllipsoidProblem:
    """Case I: every slot weighted 1/log S; the exceptional slot ``ij0``
    additionally weighted s/2.  With ``s`` None it is the closing ellipsoid."""
    al, sl = ueq.logs_at(prec)
    offset, gens, weights = [], [], []
    with mpmath.workdps(prec):
        w = 1 / mpmath.mpf(log_S)
        for i in range(ueq.m):
            for j in range(2):
                offset.append(al[i][j])
                gens.append(list(sl[i][j]))
                weights.append(w)
        radius = 2 * ueq.m
        if s is not None:
            i0, j0 = ij0
            offset.append(al[i0][j0])
            gens.append(list(sl[i0][j0]))
            weights.append(mpmath.mpf(s) / 2)
            radius += 1
    return EllipsoidProblem(offset, gens, weights, radius, box=[(-E_R, E_R)] * ueq.n_exp, label=f"I{ij0}")


@dataclass
class QuotientData:
    H: list[list[int]]
    W: list[list[int]]
    rank: int
    kernel: list[list[int]]  # columns: basis of the kernel (n_exp x kdim), LLL-reduced


def quotient_data(ueq: UnitEquation) -> QuotientData:
    key = "quotient"
    if key in ueq._cache:
        return ueq._cache[key]
    H, W, rank = polys.hnf_columns(ueq.quotient_matrix)
    n = ueq.n_exp
    kcols = [[W[r][c] for r in range(n)] for c in range(rank, n)]
    if kcols:
        red, _ = lll_reduce(IntegerLattice(kcols))
        kcols = red.basis
    qd = QuotientData(H, W, rank, kcols)
    ueq._cache[key] = qd
    return qd


def _quotient_rows(ueq: UnitEquation, prec: int):
    """Offsets and generators (in the quotient variables t) of
    log|alpha X^{(i,0)} / alpha X^{(i,1)}|."""
    al, sl = ueq.logs_at(prec)
    qd = quotient_data(ueq)
    offs, gens = [], []
    with mpmath.workdps(prec):
        for i in range(ueq.m):
            offs.append(al[i][0] - al[i][1])
            q = [sl[i][0][k] - sl[i][1][k] for k in range(ueq.n_exp)]
            gens.append([mpmath.fsum(q[k] * qd.W[k][c] for k in range(ueq.n_exp)) for c in range(qd.rank)])
    return offs, gens


def t_box(ueq: UnitEquation, E_R: int) -> list[tuple[int, int]]:
    """Bounding box of the quotient variables t over the exponent box."""
    from scipy.optimize import linprog

    qd = quotient_data(ueq)
    n = ueq.n_exp
    W1 = np.array([[qd.W[r][c] for c in range(qd.rank)] for r in range(n)], dtype=float)
    K = np.array(qd.kernel, dtype=float).T if qd.kernel else np.zeros((n, 0))
    M = np.hstack([W1, K])
    nv = M.shape[1]
    A_ub = np.vstack([M, -M])
    b_ub = np.full(2 * n, float(E_R))
    out = []
    for c in range(qd.rank):
        bounds = []
        for sgn in (1, -1):
            obj = np.zeros(nv)
            obj[c] = sgn
            res = linprog(obj, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * nv, method="highs")
            if res.status != 0:
                raise VerificationError("quotient box LP failed")
            bounds.append(sgn * res.fun)
        lo, hi = bounds[0], bounds[1]
        out.append((int(math.floor(lo - 1e-6)), int(math.ceil(hi + 1e-6))))
    return out


def case2_ellipsoid(ueq: UnitEquation, log_S: float, s: float | None, i0: int | None, E_R: int, prec: int = 80) -> EllipsoidProblem:
    """Case II: quotient rows weighted 1/(2 log S); exceptional row at i0
    weighted s/2.  Variables are the quotient coordinates t."""
    offs, gens = _quotient_rows(ueq, prec)
    with mpmath.workdps(prec):
        w = 1 / (2 * mpmath.mpf(log_S))
        offset = list(offs)
        G = [list(g) for g in gens]
        weights = [w] * ueq.m
        radius = ueq.m
        if s is not None:
            offset.append(offs[i0])
            G.append(list(gens[i0]))
            weights.append(mpmath.mpf(s) / 2)
            radius += 1
    box = ueq._cache.get(("tbox", E_R))
    if box is None:
        box = t_box(ueq, E_R)
        ueq._cache[("tbox", E_R)] = box
    return EllipsoidProblem(offset, G, weights, radius, box=box, label=f"II{i0}")


def _enumerate(problem: EllipsoidProblem, cap: int):
    st = EnumerationStats()
    pts = fincke_pohst(problem, cap=cap, stats=st)
    return pts


def _run_parallel(problems: list[EllipsoidProblem], cap: int, threads: int) -> list[list[tuple[int, ...]]]:
    if threads <= 1 or len(problems) <= 1:
        return [_enumerate(p, cap) for p in problems]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(_enumerate, problems, [cap] * len(problems)))


# ---------------------------------------------------------------------------
# residual scan


def residual_scan(
    ueq: UnitEquation,
    t: Sequence[int],
    E_R: int,
    plan: SievePlan,
    chunk: int = 2_000_000,
) -> tuple[int, list[tuple[int, ...]]]:
    """All exponent vectors with quotient coordinates ``t`` in the box that
    pass the sieve.  Returns (number scanned, survivors)."""
    from scipy.optimize import linprog

    qd = quotient_data(ueq)
    n = ueq.n_exp
    a0 = np.array([sum(qd.W[r][c] * t[c] for c in range(qd.rank)) for r in range(n)], dtype=np.int64)
    if not qd.kernel:
        if np.all(np.abs(a0) <= E_R):
            mask = sieve_mod_p(plan, a0[None, :], sign_choices=ueq.sign_choices)
            return 1, [tuple(int(x) for x in a0)] if mask[0] else []
        return 0, []
    K = np.array(qd.kernel, dtype=np.int64).T  # n x kd
    kd = K.shape[1]
    A_ub = np.vstack([K, -K]).astype(float)
    b_ub = np.concatenate([E_R - a0, E_R + a0]).astype(float)
    ranges = []
    for c in range(kd):
        lims = []
        for sgn in (1, -1):
            obj = np.zeros(kd)
            obj[c] = sgn
            res = linprog(obj, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * kd, method="highs")
            if res.status == 2:
                return 0, []
            if res.status != 0:
                raise VerificationError("residual LP failed")
            lims.append(sgn * res.fun)
        ranges.append(np.arange(int(math.floor(lims[0] - 1e-6)), int(math.ceil(lims[1] + 1e-6)) + 1))
    scanned = 0
    survivors = []
    # iterate over the first kernel coordinate in chunks to bound memory
    rest = np.array(list(itertools.product(*ranges[1:])), dtype=np.int64).reshape(-1, kd - 1) if kd > 1 else np.zeros((1, 0), dtype=np.int64)
    rest_part = rest @ K[:, 1:].T if kd > 1 else np.zeros((1, n), dtype=np.int64)
    for k0 in ranges[0]:
        V = a0[None, :] + k0 * K[:, 0][None, :] + rest_part
        inbox = np.all(np.abs(V) <= E_R, axis=1)
        V = V[inbox]
        scanned += V.shape[0]
        if V.shape[0] == 0:
            continue
        mask = sieve_mod_p(plan, V, sign_choices=ueq.sign_choices)
        for row in V[mask]:
            survivors.append(tuple(int(x) for x in row))
    return scanned, survivors


# ---------------------------------------------------------------------------
# the schedule


def run_schedule(
    ueq: UnitEquation,
    E_R: int,
    schedule: EnumerationSchedule,
    plan: SievePlan | None = None,
    cap: int = DEFAULT_POINT_CAP,
    threads: int = 1,
    case2_final: bool = True,
    report: UnitSolveReport | None = None,
    checkpoint: Callable[[str, list], None] | None = None,
) -> SolutionSet:
    """Shrinking-window enumeration; every candidate goes through the sieve
    and then exact verification."""
    plan = plan or SievePlan()
    report = report or UnitSolveReport()
    schedule.validate()
    sols = report.solutions
    candidates: set[tuple[int, ...]] = set()
    t_values: list[tuple[int, ...]] = []
    t_seen: set[tuple[int, ...]] = set()
    m = ueq.m
    prec_for = lambda s: 40 + int(2 * (math.log10(max(s, 10.0)) + 5))

    def record_case1(step, lS, ls, s, ij_list, lists):
        flat = []
        per = []
        for pts in lists:
            per.append(len(pts))
            flat.extend(pts)
        uniq = sorted(set(flat))
        mask = sieve_mod_p(plan, np.array(uniq, dtype=np.int64).reshape(-1, ueq.n_exp), sign_choices=ueq.sign_choices) if uniq else np.zeros(0, bool)
        passed = [u for u, ok in zip(uniq, mask) if ok]
        candidates.update(passed)
        report.steps.append(StepLog("I", step, lS / math.log(10), None if ls is None else ls / math.log(10), sum(per), per, len(passed)))
        if checkpoint:
            checkpoint(f"case1-step{step}", uniq)

    def record_case2(step, lS, ls, lists):
        per = []
        new = []
        for pts in lists:
            per.append(len(pts))
            for t in pts:
                if t not in t_seen:
                    t_seen.add(t)
                    t_values.append(t)
                    new.append(t)
        report.residual_values_raw += sum(per)
        report.steps.append(StepLog("II", step, lS / math.log(10), None if ls is None else ls / math.log(10), sum(per), per))
        if checkpoint:
            checkpoint(f"case2-step{step}", new)

    qd = quotient_data(ueq)
    for step, (lS, ls) in enumerate(schedule.steps, start=1):
        s = math.exp(ls)
        prec = prec_for(s)
        slots = [(i, j) for i in range(m) for j in range(2)]
        probs = [case1_ellipsoid(ueq, lS, s, ij, E_R, prec) for ij in slots]
        record_case1(step, lS, ls, s, slots, _run_parallel(probs, cap, threads))
        if qd.rank > 0:
            probs2 = [case2_ellipsoid(ueq, lS, s, i, E_R, prec) for i in range(m)]
            record_case2(step, lS, ls, _run_parallel(probs2, cap, threads))
    final = len(schedule.steps) + 1
    lS = schedule.final_log_S
    record_case1(final, lS, None, None, [None], [_enumerate(case1_ellipsoid(ueq, lS, None, None, E_R, 60), cap)])
    if qd.rank > 0 and case2_final:
        record_case2(final, lS, None, [_enumerate(case2_ellipsoid(ueq, lS, None, None, E_R, 60), cap)])
    # residual scans for the quotient values
    report.residual_values = len(t_values)
    scanned = 0
    for t in t_values:
        n_sc, surv = residual_scan(ueq, t, E_R, plan)
        scanned += n_sc
        candidates.update(surv)
    report.residual_scanned = scanned
    for a in sorted(candidates):
        for sol in verify_candidate(ueq, a, "enumeration"):
            sols.add(sol)
    # sieve soundness on verified solutions
    if plan.primes and sols.solutions:
        V = np.array([s.exponents for s in sols.solutions], dtype=np.int64)
        rej = 0
        for sol, row in zip(sols.solutions, V):
            if not sieve_mod_p(plan, row[None, :], signs=sol.signs)[0]:
                rej += 1
        report.false_rejections = rej
    return sols


def brute_force_solutions(ueq: UnitEquation, E: int) -> set[tuple[int, ...]]:
    """Reference: every exponent vector in [-E, E]^n tested directly."""
    out = set()
    for a in itertools.product(range(-E, E + 1), repeat=ueq.n_exp):
        for signs in ueq.sign_choices:
            if ueq.exact_check(a, signs):
                out.add(tuple(a))
                break
    return out


def solve_unit_equation(
    ueq: UnitEquation,
    s_values: Sequence[float] | None = None,
    sieve_primes: Sequence[int] | None = None,
    H_schedule: Sequence[int] | None = None,
    E_R: int | None = None,
    cap: int = DEFAULT_POINT_CAP,
    threads: int = 1,
    stop_after: str | None = None,
    checkpoint=None,
) -> UnitSolveReport:
    """Baker bound, reduction, enumeration and verification in one call.

    A preset ``E_R`` skips the Baker and reduction stages."""
    rep = UnitSolveReport()
    if E_R is None:
        rep.baker = baker_stage(ueq)
        if stop_after == "baker":
            return rep
        E_R, rep.reductions = reduction_stage(ueq, rep.baker, H_schedule)
    rep.E_R = E_R
    if stop_after == "reduce":
        return rep
    rep.log_S0 = initial_log_S(ueq, E_R)
    if s_values:
        rep.schedule = EnumerationSchedule.from_s_values(rep.log_S0, s_values)
    else:
        rep.schedule = EnumerationSchedule.automatic(rep.log_S0)
    primes = list(sieve_primes) if sieve_primes is not None else []
    plan = build_sieve_plan(ueq, primes)
    rep.sieve_stats = {"primes": plan.prime_list}
    run_schedule(ueq, E_R, rep.schedule, plan, cap=cap, threads=threads, report=rep, checkpoint=checkpoint)
    return rep


def default_threads() -> int:
    env = os.environ.get("RELTHUE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1
