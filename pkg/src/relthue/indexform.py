"""Index form machinery for a quartic extension K = M(xi).

With f(x) = x^4 + a1 x^3 + a2 x^2 + a3 x + a4 the minimal polynomial of xi
over M, an element alpha = (A + X xi + Y xi^2 + Z xi^3)/d generates a
relative power integral basis exactly when (U, V) = (Q1(X,Y,Z), Q2(X,Y,Z))
satisfies N_{M/Q}(F(U, V)) = d^{6m} / i0.  This module builds F, Q1 and Q2,
parametrizes the conic Q0 = 0, produces the quartic Thue equations in (P, Q),
maps their solutions back to generators, and computes absolute indices.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from . import forms as bf
from . import polys
from .errors import VerificationError
from .order import OrderContext, OrderElement, divide_exact, norm
from .thue import QuarticThueInstance, ThueSolution, unit_ratio
from .units import embed_base


@dataclass
class RelativeQuarticData:
    M: OrderContext
    a: tuple[OrderElement, OrderElement, OrderElement, OrderElement]  # a1..a4
    d: int = 1
    i0: int = 1

    @property
    def m(self) -> int:
        return self.M.degree

    @property
    def rhs_norm(self) -> int:
        num = self.d ** (6 * self.m)
        if num % self.i0:
            raise VerificationError("i0 does not divide d^(6m)")
        return num // self.i0

    @classmethod
    def from_descending(cls, M, coeffs, d=1, i0=1):
        """Accept (a1, a2, a3, a4) with f = x^4 + a1 x^3 + a2 x^2 + a3 x + a4."""
        return cls(M, tuple(coeffs), d, i0)

    @classmethod
    def from_ascending(cls, M, coeffs, d=1, i0=1):
        """Accept (a0, a1, a2, a3) with f = x^4 + a3 x^3 + a2 x^2 + a1 x + a0."""
        a0, a1, a2, a3 = coeffs
        return cls(M, (a3, a2, a1, a0), d, i0)


@dataclass
class IndexForms:
    F: list[OrderElement]  # U^3, U^2 V, U V^2, V^3
    Q1: list[OrderElement]  # X^2, XY, Y^2, XZ, YZ, Z^2
    Q2: list[OrderElement]


def build_forms(data: RelativeQuarticData) -> IndexForms:
    a1, a2, a3, a4 = data.a
    M = data.M
    one, zero = M.one, M.zero
    F = [one, -a2, a1 * a3 - a4 * 4, a2 * a4 * 4 - a3 * a3 - a1 * a1 * a4]
    Q1 = [one, -a1, a2, a1 * a1 - a2 * 2, a3 - a1 * a2, a2 * a2 - a1 * a3 + a4]
    Q2 = [zero, zero, one, -one, -a1, a2]
    return IndexForms(F, Q1, Q2)


# ---------------------------------------------------------------------------
# parametrization of Q0 = 0


@dataclass
class ParametrizationData:
    Q0: list[OrderElement]
    zero: tuple[OrderElement, OrderElement, OrderElement]
    fX: list[OrderElement]
    fY: list[OrderElement]
    fZ: list[OrderElement]
    pivot: int

    def images(self, P: OrderElement, Q: OrderElement) -> tuple[OrderElement, ...]:
        return tuple(bf.bf_eval(f, P, Q) for f in (self.fX, self.fY, self.fZ))

    def identity_holds(self) -> bool:
        """Q0(fX, fY, fZ) vanishes identically in P, Q."""
        return bf.bf_is_zero(bf.tq_substitute(self.Q0, self.fX, self.fY, self.fZ))


def conic_form(U: OrderElement, V: OrderElement, forms: IndexForms) -> list[OrderElement]:
    """Q0 = V Q1 - U Q2, which vanishes wherever Q1 = U and Q2 = V."""
    return bf.tq_combine(V, forms.Q1, -U, forms.Q2)


def _small_elements(M: OrderContext, b: int):
    rng = range(-b, b + 1)
    for c in itertools.product(rng, repeat=M.degree):
        yield M.element(c)


def find_conic_zero(Q0: Sequence[OrderElement], cap: int = 64, max_points: int = 2 * 10**6):
    """Nontrivial zero of Q0 with small coordinates: rational integers in a
    growing box first, then small elements of the order.  A zero with Z != 0
    is preferred within each box."""
    M = Q0[0].ctx
    b = 1
    while b <= cap:
        if (2 * b + 1) ** 3 > max_points:
            break
        best = None
        rng = range(-b, b + 1)
        for x, y, z in itertools.product(rng, repeat=3):
            if (x, y, z) == (0, 0, 0):
                continue
            v = (M.from_int(x), M.from_int(y), M.from_int(z))
            if bf.tq_eval(Q0, *v).is_zero():
                key = (z == 0, abs(x) + abs(y) + abs(z), (x, y, z))
                if best is None or key < best[0]:
                    best = (key, v)
        if best is not None:
            return best[1]
        b *= 2
    # small algebraic coordinates
    b = 1
    while b <= cap:
        pool = list(_small_elements(M, b))
        if len(pool) ** 3 > max_points:
            break
        for v in itertools.product(pool, repeat=3):
            if all(x.is_zero() for x in v):
                continue
            if bf.tq_eval(Q0, *v).is_zero():
                return v
        b *= 2
    return None


def parametrize(U: OrderElement, V: OrderElement, forms: IndexForms, zero=None, cap: int = 64) -> ParametrizationData:
    """Quadratic forms fX, fY, fZ with kappa (X, Y, Z) = f(P, Q) on Q0 = 0.

    Writing a point as R v0 + w with w supported off the pivot coordinate of
    v0 gives R B(v0, w) + Q0(w) = 0; clearing R yields
    f = -Q0(w) v0 + B(v0, w) w.
    """
    if U.is_zero() and V.is_zero():
        raise ValueError("(U, V) must be nonzero")
    Q0 = conic_form(U, V, forms)
    if bf.tq_eval(Q0, *([U.ctx.zero] * 3)).is_zero() and all(c.is_zero() for c in Q0):
        raise VerificationError("conic form vanishes identically")
    v0 = tuple(zero) if zero is not None else find_conic_zero(Q0, cap)
    if v0 is None:
        raise VerificationError("no nontrivial zero of the conic within the search cap; supply one in the field spec")
    if not bf.tq_eval(Q0, *v0).is_zero():
        raise VerificationError("supplied point is not on the conic")
    M = U.ctx
    pivot = next(i for i in range(3) if not v0[i].is_zero())
    if _leading_sign(v0[pivot]) < 0:
        v0 = tuple(-x for x in v0)
    others = [i for i in range(3) if i != pivot]
    one, zero_el = M.one, M.zero
    # w as binary linear forms: coordinates others[0] -> P, others[1] -> Q
    w = [[zero_el, zero_el] for _ in range(3)]
    w[others[0]] = [one, zero_el]
    w[others[1]] = [zero_el, one]
    # Q0(w) as a binary quadratic, B(v0, w) as a binary linear form
    q0w = bf.tq_substitute(Q0, *w)
    lin = bf.bf_zero(M, 1)
    e = [[one if k == t else zero_el for k in range(3)] for t in range(3)]
    for t in range(3):
        Bt = bf.tq_bilinear(Q0, v0, e[t])
        lin = bf.bf_add(lin, bf.bf_scale(w[t], Bt))
    fs = []
    for t in range(3):
        f = bf.bf_add(bf.bf_scale(q0w, -v0[t]), bf.bf_mul(lin, w[t]))
        fs.append(f)
    pd = ParametrizationData(Q0, v0, fs[0], fs[1], fs[2], pivot)
    if not pd.identity_holds():
        raise VerificationError("parametrization identity failed")
    return pd


def _leading_sign(x: OrderElement) -> int:
    c = next((v for v in x.coords if v), 0)
    return (c > 0) - (c < 0)


@dataclass
class QuarticCandidate:
    form: list[OrderElement]
    rhs_base: OrderElement
    label: str
    degenerate: bool


def quartic_instances(pdata: ParametrizationData, forms: IndexForms, U: OrderElement, V: OrderElement,
                      precision: int = 40) -> list[QuarticCandidate]:
    """F1 = Q1(f) = kappa^2 U and F2 = Q2(f) = kappa^2 V, with a flag for
    degenerate forms (vanishing, zero right side, or repeated/real roots)."""
    out = []
    for label, q, rhs in (("F1", forms.Q1, U), ("F2", forms.Q2, V)):
        f = bf.tq_substitute(q, pdata.fX, pdata.fY, pdata.fZ)
        degen = bf.bf_is_zero(f) or rhs.is_zero() or f[0].is_zero()
        if not degen:
            try:
                inst = QuarticThueInstance(U.ctx, f, [rhs], precision=precision)
                degen = not inst.is_totally_complex() or not _distinct_roots(inst)
            except VerificationError:
                degen = True
        out.append(QuarticCandidate(f, rhs, label, degen))
    return out


def _distinct_roots(inst: QuarticThueInstance) -> bool:
    tol = 10 ** (-(inst.precision // 3))
    for rs in inst.roots:
        for a, b in itertools.combinations(rs, 2):
            if abs(a - b) < tol:
                return False
    return True


def select_instance(cands: Sequence[QuarticCandidate]) -> QuarticCandidate:
    for c in cands:
        if not c.degenerate:
            return c
    raise VerificationError("both quartic forms are degenerate")


# ---------------------------------------------------------------------------
# generators


@dataclass
class GeneratorFamily:
    """alpha = (A + eps (X xi + Y xi^2 + Z xi^3)) / d with A free and eps a unit."""

    X: OrderElement
    Y: OrderElement
    Z: OrderElement
    U: OrderElement
    V: OrderElement
    P: OrderElement | None = None
    Q: OrderElement | None = None
    norm_value: int = 0

    def triple(self) -> tuple[OrderElement, OrderElement, OrderElement]:
        return (self.X, self.Y, self.Z)

    def as_dict(self) -> dict:
        out = {k: list(getattr(self, k).coords) for k in ("X", "Y", "Z", "U", "V")}
        if self.P is not None:
            out["P"] = list(self.P.coords)
            out["Q"] = list(self.Q.coords)
        out["norm_F"] = self.norm_value
        return out


def norm_condition(data: RelativeQuarticData, forms: IndexForms, X, Y, Z) -> tuple[OrderElement, OrderElement, int]:
    U = bf.tq_eval(forms.Q1, X, Y, Z)
    V = bf.tq_eval(forms.Q2, X, Y, Z)
    return U, V, norm(bf.bf_eval(forms.F, U, V))


def assemble_generators(solutions: Sequence[ThueSolution], pdata: ParametrizationData, data: RelativeQuarticData,
                        forms: IndexForms, kappas: Sequence[OrderElement] | None = None) -> list[GeneratorFamily]:
    """Map (P, Q) back to (X, Y, Z), clear kappa, keep triples meeting the norm
    condition, and deduplicate up to unit factors of M."""
    M = data.M
    kappas = list(kappas) if kappas else [M.one]
    target = data.rhs_norm
    fams: list[GeneratorFamily] = []
    for s in solutions:
        img = pdata.images(s.X, s.Y)
        if all(c.is_zero() for c in img):
            continue
        for kap in kappas:
            trip = [divide_exact(c, kap) for c in img]
            if any(t is None for t in trip):
                continue
            U, V, nv = norm_condition(data, forms, *trip)
            if abs(nv) != target:
                continue
            lead = next(c for c in trip if not c.is_zero())
            if _leading_sign(lead) < 0:
                trip = [-c for c in trip]
            fam = GeneratorFamily(trip[0], trip[1], trip[2], U, V, s.X, s.Y, nv)
            if not any(unit_ratio(fam.triple(), g.triple()) is not None for g in fams):
                fams.append(fam)
    fams.sort(key=lambda g: (g.X.coords, g.Y.coords, g.Z.coords))
    return fams


# ---------------------------------------------------------------------------
# absolute index


def char_poly(zeta: OrderElement) -> list[int]:
    """N_{K/Q}(x - zeta) as ascending integer coefficients."""
    K = zeta.ctx
    n = K.degree
    xs = list(range(n + 1))
    ys = [norm(K.from_int(x) - zeta) for x in xs]
    c = polys.interpolate_integer(xs, ys)
    if any(v.denominator != 1 for v in c):
        raise VerificationError("characteristic polynomial is not integral")
    return [int(v) for v in c]


def element_discriminant(zeta: OrderElement) -> int:
    return polys.discriminant(char_poly(zeta))


def absolute_index(zeta: OrderElement, D_K: int) -> int:
    """I(zeta) = sqrt(|D(zeta)| / |D_K|); 0 when zeta does not generate K."""
    D = element_discriminant(zeta)
    if D == 0:
        return 0
    q, r = divmod(abs(D), abs(D_K))
    I = math.isqrt(q)
    if r or I * I != q:
        raise VerificationError("discriminant quotient is not a perfect square")
    return I


def log_index_numeric(zeta: OrderElement, D_K: int, prec: int = 60) -> float:
    with mpmath.workdps(prec):
        c = zeta.conjugates(prec)
        s = mpmath.fsum(mpmath.log(abs(a - b)) for a, b in itertools.combinations(c, 2))
        return float(s - mpmath.log(abs(D_K)) / 2)


@dataclass
class SearchHit:
    z: tuple[int, int]
    k: tuple[int, ...]
    zeta: OrderElement
    index: int


@dataclass
class AbsoluteSearchSpec:
    K: OrderContext
    base_image: OrderElement  # generator of M written in K
    M: OrderContext
    units: list[OrderElement]  # units of M
    D_K: int
    xi: OrderElement | None = None  # relative generator, default the K generator


def _screen_chunk(args):
    (mu_c, units_c, xi_c, z_range, k1_values, other_k, thr_log, logDK2) = args
    mu_c = np.asarray(mu_c)
    n = mu_c.shape[0]
    zr = np.arange(-z_range, z_range + 1)
    Z1, Z2 = np.meshgrid(zr, zr, indexing="ij")
    Z1 = Z1.ravel().astype(float)
    Z2 = Z2.ravel().astype(float)
    base = Z1[:, None] * mu_c[None, :] + Z2[:, None] * (mu_c**2)[None, :]
    base_mag = np.abs(Z1)[:, None] * np.abs(mu_c)[None, :] + np.abs(Z2)[:, None] * np.abs(mu_c**2)[None, :]
    iu, ju = np.triu_indices(n, 1)
    same = np.abs(mu_c[iu] - mu_c[ju]) < 1e-8 * (1 + np.abs(mu_c[iu]))
    lu = np.log(np.abs(np.asarray(units_c)))  # (r, n) log|eps|
    args_u = np.angle(np.asarray(units_c))
    out = []
    eps_rel = 1e-13
    for k1 in k1_values:
        for rest in other_k:
            ks = (k1,) + tuple(rest)
            ln = np.zeros(n)
            ph = np.zeros(n)
            for t, kk in enumerate(ks):
                ln += kk * lu[t]
                ph += kk * args_u[t]
            w = np.exp(ln + 1j * ph) * xi_c
            # pairs over the same conjugate of mu differ only in the w part,
            # which is computed without cancellation
            const = np.log(np.abs(w[iu[same]] - w[ju[same]])).sum() - logDK2
            zeta = base + w[None, :]
            err = eps_rel * (base_mag + np.abs(w)[None, :]) + 1e-300
            a, b = iu[~same], ju[~same]
            diff = np.abs(zeta[:, a] - zeta[:, b])
            e2 = err[:, a] + err[:, b]
            lower = np.log(np.maximum(diff - e2, 1e-300))
            score = lower.sum(axis=1) + const
            for idx in np.nonzero(score <= thr_log)[0]:
                out.append((int(Z1[idx]), int(Z2[idx]), ks))
    return out


def absolute_search(spec: AbsoluteSearchSpec, z_range: int = 25, k_range: int = 25, threshold: float = 1e15,
                    threads: int = 1, k_values=None) -> tuple[list[SearchHit], dict]:
    """All zeta = z1 mu + z2 mu^2 + prod eps^k * xi in the box with index below
    ``threshold``; returns (hits, statistics)."""
    K, M = spec.K, spec.M
    xi = spec.xi or K.theta
    r = len(spec.units)
    with mpmath.workdps(K.precision):
        mu_mp = spec.base_image.conjugates()
        mu_c = np.array([complex(v) for v in mu_mp])
        units_c = [np.array([complex(polys.peval(u.coords, v)) for v in mu_mp]) for u in spec.units]
        xi_c = np.array([complex(v) for v in xi.conjugates()])
    logDK2 = math.log(abs(spec.D_K)) / 2
    thr_log = math.log(threshold) + 1e-6
    kv = list(k_values) if k_values is not None else list(range(-k_range, k_range + 1))
    if r == 0:
        # no units: a single chunk with a dummy unit of exponent 0
        chunks = [(mu_c, [np.ones_like(mu_c)], xi_c, z_range, [0], [()], thr_log, logDK2)]
    else:
        other = list(itertools.product(kv, repeat=r - 1))
        chunks = [(mu_c, units_c, xi_c, z_range, [k1], other, thr_log, logDK2) for k1 in kv]
    cands: list = []
    if threads > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            for res in ex.map(_screen_chunk, chunks):
                cands.extend(res)
    else:
        for ch in chunks:
            cands.extend(_screen_chunk(ch))
    if r == 0:
        cands = [(z1, z2, ()) for z1, z2, _ in cands]
    # exact verification
    mu_K = spec.base_image
    mu2 = mu_K * mu_K
    units_K = [embed_base(M, K, mu_K, u) for u in spec.units]
    inv_K = {}
    hits = []
    for z1, z2, ks in sorted(cands):
        w = xi
        for t, kk in enumerate(ks):
            if kk > 0:
                w = w * units_K[t] ** kk
            elif kk < 0:
                if t not in inv_K:
                    inv_K[t] = divide_exact(K.one, units_K[t])
                w = w * inv_K[t] ** (-kk)
        zeta = K.from_int(z1) * mu_K + K.from_int(z2) * mu2 + w
        I = absolute_index(zeta, spec.D_K)
        if 0 < I < threshold:
            hits.append(SearchHit((z1, z2), tuple(ks), zeta, I))
    stats = {
        "box_points": (2 * z_range + 1) ** 2 * len(kv) ** r,
        "screened_candidates": len(cands),
        "hits": len(hits),
    }
    return hits, stats

