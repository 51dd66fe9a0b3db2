"""Integer lattice machinery: exact LLL, the bound-reduction step and
Fincke-Pohst enumeration of integer points in (weighted, translated)
ellipsoids."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import CardinalityCapError, PrecisionError

DEFAULT_POINT_CAP = 5_000_000


# ---------------------------------------------------------------------------
# LLL


@dataclass
class IntegerLattice:
    """Lattice spanned by integer basis vectors (stored as rows here, i.e. the
    columns of the usual basis matrix)."""

    basis: list[list[int]]

    @property
    def rank(self) -> int:
        return len(self.basis)

    @property
    def dim(self) -> int:
        return len(self.basis[0]) if self.basis else 0

    def gram(self) -> list[list[int]]:
        return [[_dot(u, v) for v in self.basis] for u in self.basis]

    @classmethod
    def from_columns(cls, cols: Sequence[Sequence[int]]) -> "IntegerLattice":
        return cls([list(map(int, c)) for c in cols])


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _round_div(a: int, b: int) -> int:
    """Nearest integer to a/b for b > 0 (ties toward +inf)."""
    return (2 * a + b) // (2 * b)


def lll_reduce(lattice: IntegerLattice | Sequence[Sequence[int]], delta=Fraction(3, 4)):
    """Exact integral LLL (Cohen, Alg. 2.6.7).

    Returns ``(reduced, transform)`` where ``reduced`` is an IntegerLattice and
    ``transform`` the unimodular integer matrix with
    ``reduced.basis[i] = sum_j transform[i][j] * lattice.basis[j]``.
    """
    if not isinstance(lattice, IntegerLattice):
        lattice = IntegerLattice([list(map(int, v)) for v in lattice])
    delta = Fraction(delta).limit_denominator(10**6)
    if not Fraction(1, 4) < delta <= 1:
        raise ValueError("delta must lie in (1/4, 1]")
    dn, dd = delta.numerator, delta.denominator
    b = [list(v) for v in lattice.basis]
    n = len(b)
    h = [[int(i == j) for j in range(n)] for i in range(n)]
    if n == 0:
        return IntegerLattice([]), h
    d = [0] * (n + 1)  # d[0] = 1, d[i+1] = Gram determinant of the first i+1 vectors
    lam = [[0] * n for _ in range(n)]
    d[0] = 1
    d[1] = _dot(b[0], b[0])
    if d[1] == 0:
        raise ValueError("basis vectors are linearly dependent")

    def red(k, l):
        if 2 * abs(lam[k][l]) > d[l + 1]:
            q = _round_div(lam[k][l], d[l + 1])
            bk, bl = b[k], b[l]
            for t in range(len(bk)):
                bk[t] -= q * bl[t]
            hk, hl = h[k], h[l]
            for t in range(n):
                hk[t] -= q * hl[t]
            lam[k][l] -= q * d[l + 1]
            for i in range(l):
                lam[k][i] -= q * lam[l][i]

    def swap(k, kmax):
        b[k], b[k - 1] = b[k - 1], b[k]
        h[k], h[k - 1] = h[k - 1], h[k]
        for j in range(k - 1):
            lam[k][j], lam[k - 1][j] = lam[k - 1][j], lam[k][j]
        lm = lam[k][k - 1]
        bb = (d[k - 1] * d[k + 1] + lm * lm) // d[k]
        for i in range(k + 1, kmax + 1):
            t = lam[i][k]
            lam[i][k] = (d[k + 1] * lam[i][k - 1] - lm * t) // d[k]
            lam[i][k - 1] = (bb * t + lm * lam[i][k]) // d[k + 1]
        d[k] = bb

    k, kmax = 1, 0
    while k < n:
        if k > kmax:
            kmax = k
            for j in range(k + 1):
                u = _dot(b[k], b[j])
                for i in range(j):
                    u = (d[i + 1] * u - lam[k][i] * lam[j][i]) // d[i]
                if j < k:
                    lam[k][j] = u
                else:
                    d[k + 1] = u
                    if u == 0:
                        raise ValueError("basis vectors are linearly dependent")
        red(k, k - 1)
        lm = lam[k][k - 1]
        if dd * d[k + 1] * d[k - 1] < dn * d[k] * d[k] - dd * lm * lm:
            swap(k, kmax)
            k = max(1, k - 1)
        else:
            for l in range(k - 2, -1, -1):
                red(k, l)
            k += 1
    return IntegerLattice(b), h


def lll_constant(delta=Fraction(3, 4)) -> float:
    """``alpha`` with ``|b1|^2 <= alpha^(n-1) * lambda_1^2``."""
    return 1.0 / (float(delta) - 0.25)


# ---------------------------------------------------------------------------
# Bound reduction


@dataclass
class ReductionStep:
    D0: int
    H: int
    precision: int
    n: int
    b1_norm_sq: int
    T: float
    passed: bool
    new_bound: int | None

    def as_row(self) -> dict:
        return {
            "D0": self.D0,
            "log10_H": round(math.log10(self.H), 3),
            "precision": self.precision,
            "n": self.n,
            "log10_b1": round(0.5 * math.log10(self.b1_norm_sq), 3) if self.b1_norm_sq > 0 else None,
            "T_over_D0": self.T / self.D0 if self.D0 else None,
            "passed": self.passed,
            "new_bound": self.new_bound,
        }


def reduction_step(
    zetas: Sequence,
    c1,
    c2,
    c3,
    D0: int,
    H: int,
    precision: int,
    delta=Fraction(3, 4),
) -> ReductionStep:
    """One application of the LLL bound-reduction lemma.

    ``zetas`` are the (real) coefficients of a linear form known to satisfy
    ``|sum d_i zeta_i| < c1 * exp(-c2 * D - c3)`` with ``D = max |d_i| <= D0``.
    The real parts are scaled by H and rounded; the rounding error is charged
    against the norm test (``T`` below), so the test is a little stricter than
    the textbook one and sound for the integer lattice actually reduced.
    """
    n = len(zetas)
    with mpmath.workdps(precision):
        row = [int(mpmath.nint(mpmath.mpf(H) * mpmath.re(z))) for z in zetas]
        imag = [int(mpmath.nint(mpmath.mpf(H) * mpmath.im(z))) for z in zetas]
    use_imag = any(imag)
    basis = []
    for i in range(n):
        v = [int(i == j) for j in range(n)] + [row[i]]
        if use_imag:
            v.append(imag[i])
        basis.append(v)
    try:
        reduced, _ = lll_reduce(IntegerLattice(basis), delta)
    except ValueError as exc:
        raise PrecisionError(f"degenerate reduction lattice: {exc}") from exc
    b1 = reduced.basis[0]
    b1sq = _dot(b1, b1)
    alpha = Fraction(1) / (Fraction(delta).limit_denominator(10**6) - Fraction(1, 4))
    # every nonzero lattice vector v has |v|^2 >= |b1|^2 / alpha^(n-1)
    lower = Fraction(b1sq) / alpha ** (n - 1)
    slack = lower - n * D0 * D0
    n_round = 2 if use_imag else 1
    if slack <= 0:
        T = -1.0
    else:
        T = math.sqrt(float(slack)) - n_round * n * D0 / 2 * (math.sqrt(2) if use_imag else 1)
    passed = T >= D0
    new = None
    if passed:
        with mpmath.workdps(50):
            val = (mpmath.log(H) + mpmath.log(c1) - c3 - mpmath.log(D0)) / c2
            new = max(0, int(mpmath.floor(val)))
    return ReductionStep(D0, H, precision, n, b1sq, T, passed, new)


def precision_for(H: int) -> int:
    """Working digits for a reduction at scale H (about 1.8 * log10 H)."""
    lh = math.log10(H) if H > 1 else 1
    return max(40, int(math.ceil(1.8 * lh)) + 10)


@dataclass
class ReductionResult:
    bound: int
    steps: list[ReductionStep] = field(default_factory=list)

    rounds: int = 0


def reduce_to_fixpoint(
    zetas_at,
    c1,
    c2,
    c3,
    E_B: int,
    H_schedule: Sequence[int] | None = None,
    H_factor: int = 100,
    max_tries: int = 10,
    max_rounds: int = 12,
    min_improvement: float = 0.01,
    delta=Fraction(3, 4),
    refine: int = 3,
) -> ReductionResult:
    """Iterate :func:`reduction_step` until the bound stops improving.

    ``zetas_at(precision)`` returns the form coefficients at that many
    digits.  With an explicit ``H_schedule`` exactly those rounds are run
    (each one retried with larger H on failure); otherwise H starts at
    D0**n for every round.  After the first success following a failure,
    ``refine`` bisection steps on log H look for a smaller passing H (a
    smaller H gives a smaller new bound).
    """
    D0 = int(E_B)
    res = ReductionResult(D0)
    n = None
    rounds = 0
    while rounds < max_rounds:
        if H_schedule is not None and rounds >= len(H_schedule):
            break
        cache = {}
        if n is None:
            n = len(zetas_at(40))
        H = int(H_schedule[rounds]) if H_schedule is not None else max(D0, 2) ** n
        step = None
        for _ in range(max_tries):
            prec = precision_for(H)
            if prec not in cache:
                cache[prec] = zetas_at(prec)
            step = reduction_step(cache[prec], c1, c2, c3, D0, H, prec, delta)
            res.steps.append(step)
            if step.passed:
                break
            H *= H_factor
        if step is None or not step.passed:
            if rounds == 0:
                raise PrecisionError("reduction made no progress at the maximal H")
            break
        if refine and H_schedule is None and len(res.steps) >= 2 and not res.steps[-2].passed:
            # bisect log H between the last failure and the first success
            lo, hi = math.log10(H // H_factor), math.log10(H)
            for _ in range(refine):
                mid = (lo + hi) / 2
                Hm = int(mpmath.nint(mpmath.power(10, mpmath.mpf(mid))))
                prec = precision_for(Hm)
                if prec not in cache:
                    cache[prec] = zetas_at(prec)
                trial = reduction_step(cache[prec], c1, c2, c3, D0, Hm, prec, delta)
                res.steps.append(trial)
                if trial.passed:
                    hi = mid
                    if trial.new_bound < step.new_bound:
                        step = trial
                else:
                    lo = mid
        rounds += 1
        res.rounds = rounds
        new = step.new_bound
        if new >= D0:
            break
        improved = (D0 - new) / D0
        D0 = new
        if improved < min_improvement:
            break
    res.bound = D0
    return res


# ---------------------------------------------------------------------------
# Fincke-Pohst


@dataclass
class EllipsoidProblem:
    """Integer vectors x with ``sum_r (w_r * (g_r + sum_c G[r][c] x_c))^2 <= radius_sq``.

    ``generators`` is row-major (rows = coordinates of the weighted space,
    columns = integer variables).  ``box`` optionally restricts each variable
    to ``[lo, hi]``.
    """

    offset: list
    generators: list[list]
    weights: list
    radius_sq: float
    box: list[tuple[int, int]] | None = None
    label: str = ""

    @property
    def dim(self) -> int:
        return len(self.generators[0]) if self.generators else 0

    def value(self, x: Sequence[int], prec: int = 60):
        with mpmath.workdps(prec):
            tot = mpmath.mpf(0)
            for r, row in enumerate(self.generators):
                s = mpmath.mpf(self.offset[r]) + mpmath.fsum(mpmath.mpf(row[c]) * x[c] for c in range(len(x)))
                tot += (mpmath.mpf(self.weights[r]) * s) ** 2
            return tot


@dataclass
class EnumerationStats:
    points: int = 0
    nodes: int = 0
    backend: str = ""
    fallback_box_scan: bool = False


def _mp_matrix_cols(B, d):
    return [[B[r][c] for r in range(len(B))] for c in range(d)]


def fincke_pohst(
    problem: EllipsoidProblem,
    cap: int = DEFAULT_POINT_CAP,
    prec: int | None = None,
    stats: EnumerationStats | None = None,
) -> list[tuple[int, ...]]:
    """All integer points of an ellipsoid (within the box), sorted
    lexicographically.  LLL-preprocessed Fincke-Pohst."""
    stats = stats if stats is not None else EnumerationStats()
    d = problem.dim
    k = len(problem.generators)
    if d == 0:
        return [()] if problem.value(()) <= problem.radius_sq else []
    wmax = max(abs(float(w)) for w in problem.weights)
    wmin = min(abs(float(w)) for w in problem.weights if float(w) != 0)
    if prec is None:
        prec = 40 + int(math.log10(max(wmax / wmin, 10.0))) * 2
    with mpmath.workdps(prec):
        W = [mpmath.mpf(w) for w in problem.weights]
        B = [[W[r] * mpmath.mpf(problem.generators[r][c]) for c in range(d)] for r in range(k)]
        cvec = [W[r] * mpmath.mpf(problem.offset[r]) for r in range(k)]
        cols = _mp_matrix_cols(B, d)
        norms = [mpmath.sqrt(mpmath.fsum(v * v for v in col)) for col in cols]
        if min(norms) == 0:
            return _box_scan(problem, cap, stats, prec)
        # integer approximation for LLL preprocessing; the scale resolves the
        # lightest nonzero row
        rnorms = [mpmath.sqrt(mpmath.fsum(v * v for v in row)) for row in B]
        rmin = min(v for v in rnorms if v > 0)
        shift = 60 - int(mpmath.floor(mpmath.log(min(rmin, min(norms)), 2)))
        scale = mpmath.mpf(2) ** shift
        icols = [[int(mpmath.nint(v * scale)) for v in col] for col in cols]
        try:
            _, U = lll_reduce(IntegerLattice(icols))
        except ValueError:
            return _box_scan(problem, cap, stats, prec)
        # reduced real basis: column i = sum_j U[i][j] * col_j
        rcols = [[mpmath.fsum(U[i][j] * cols[j][r] for j in range(d)) for r in range(k)] for i in range(d)]
        G = mpmath.matrix(d, d)
        for i in range(d):
            for j in range(i, d):
                G[i, j] = G[j, i] = mpmath.fsum(a * b for a, b in zip(rcols[i], rcols[j]))
        try:
            Rm = mpmath.cholesky(G).T  # upper triangular, G = Rm^T Rm
        except (ZeroDivisionError, ValueError):
            return _box_scan(problem, cap, stats, prec)
        rhs = mpmath.matrix([-mpmath.fsum(a * b for a, b in zip(rcols[i], cvec)) for i in range(d)])
        ystar = mpmath.lu_solve(G, rhs)
        resid = [cvec[r] + mpmath.fsum(ystar[i] * rcols[i][r] for i in range(d)) for r in range(k)]
        r0 = mpmath.fsum(v * v for v in resid)
        budget = mpmath.mpf(problem.radius_sq) - r0
        if budget < -mpmath.mpf(10) ** (-(prec // 2)):
            stats.backend = "empty"
            return []
        budget = max(budget, mpmath.mpf(0))
        q = [Rm[i, i] ** 2 for i in range(d)]
        if min(q) <= mpmath.mpf(10) ** (-(prec - 10)) * max(q):
            return _box_scan(problem, cap, stats, prec)
        mu = [[Rm[i, j] / Rm[i, i] if j > i else mpmath.mpf(0) for j in range(d)] for i in range(d)]
        slack = budget * mpmath.mpf(10) ** -12 + mpmath.mpf(10) ** -15
        budget_s = budget + slack
        # decide whether double precision is safe for the tree search
        eps = 2.0**-52
        spans = [float(mpmath.sqrt(budget_s / q[j])) + 1 for j in range(d)]
        err = 0.0
        for i in range(d):
            s = abs(float(ystar[i])) + sum(abs(float(mu[i][j])) * (abs(float(ystar[j])) + spans[j]) for j in range(i + 1, d))
            err = max(err, 8 * eps * s * math.sqrt(float(q[i])))
        use_float = err < 1e-7 * math.sqrt(float(budget_s) + 1e-300) or err < 1e-9
        if use_float:
            stats.backend = "float"
            conv = float
            qs = [float(x) for x in q]
            mus = [[float(x) for x in row] for row in mu]
            ys = [float(x) for x in ystar]
            Tmax = float(budget_s) * (1 + 1e-9) + 1e-12
        else:
            stats.backend = f"mp{prec}"
            conv = mpmath.mpf
            qs, mus, ys, Tmax = q, mu, [ystar[i] for i in range(d)], budget_s
        raw = _fp_search(d, qs, mus, ys, Tmax, cap, stats, conv)
    out = []
    for y in raw:
        x = tuple(sum(U[i][j] * y[i] for i in range(d)) for j in range(d))
        if problem.box is not None and any(not (lo <= xj <= hi) for xj, (lo, hi) in zip(x, problem.box)):
            continue
        out.append(x)
    out.sort()
    stats.points = len(out)
    return out


def _fp_search(d, q, mu, ystar, T, cap, stats, conv):
    sqrt = math.sqrt if conv is float else mpmath.sqrt
    ceil = math.ceil if conv is float else (lambda v: int(mpmath.ceil(v)))
    floor = math.floor if conv is float else (lambda v: int(mpmath.floor(v)))
    y = [0] * d
    found = []
    # explicit stack over levels, from d-1 down to 0
    centers = [conv(0)] * d
    budgets = [conv(0)] * d
    bounds = [0] * d
    i = d - 1
    budgets[i] = T
    centers[i] = ystar[i]
    r = sqrt(budgets[i] / q[i]) if budgets[i] > 0 else conv(0)
    y[i] = ceil(centers[i] - r)
    bounds[i] = floor(centers[i] + r)
    while True:
        if y[i] > bounds[i]:
            i += 1
            if i >= d:
                break
            y[i] += 1
            continue
        stats.nodes += 1
        diff = y[i] - centers[i]
        rem = budgets[i] - q[i] * diff * diff
        if rem < 0:
            # outside the slice at this level; move on
            y[i] += 1
            continue
        if i == 0:
            found.append(tuple(y))
            if len(found) > cap:
                raise CardinalityCapError(f"ellipsoid has more than {cap} points")
            y[i] += 1
            continue
        j = i - 1
        budgets[j] = rem
        c = ystar[j]
        for t in range(i, d):
            c -= mu[j][t] * (y[t] - ystar[t])
        centers[j] = c
        r = sqrt(rem / q[j]) if rem > 0 else conv(0)
        y[j] = ceil(c - r)
        bounds[j] = floor(c + r)
        i = j
    return found


def _box_scan(problem: EllipsoidProblem, cap, stats, prec):
    stats.fallback_box_scan = True
    stats.backend = "box"
    if problem.box is None:
        raise CardinalityCapError("degenerate ellipsoid without an exponent box")
    total = 1
    for lo, hi in problem.box:
        total *= hi - lo + 1
    if total > cap:
        raise CardinalityCapError(f"degenerate ellipsoid: box of {total} points exceeds cap {cap}")
    out = []
    R = mpmath.mpf(problem.radius_sq) * (1 + mpmath.mpf(10) ** -12)
    for x in itertools.product(*[range(lo, hi + 1) for lo, hi in problem.box]):
        if problem.value(x, prec) <= R:
            out.append(tuple(x))
    stats.points = len(out)
    return out


def brute_force_ellipsoid(problem: EllipsoidProblem, box: Sequence[tuple[int, int]], prec: int = 50):
    """Reference enumeration over an explicit box (test oracle)."""
    out = []
    for x in itertools.product(*[range(lo, hi + 1) for lo, hi in box]):
        if problem.box is not None and any(not (lo <= xj <= hi) for xj, (lo, hi) in zip(x, problem.box)):
            continue
        if problem.value(x, prec) <= problem.radius_sq:
            out.append(tuple(x))
    return out
