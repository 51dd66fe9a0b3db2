"""Unit groups of the base field M and a quadratic extension G = M(gamma).

Embeddings of G are indexed by pairs (i, j): ``i`` runs over the embeddings
of M and ``j`` in {0, 1} over the two extensions of the i-th one (ascending
root order of G within each pair).  The relative conjugation sigma swaps
j = 0 and j = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .errors import PrecisionError, VerificationError
from .order import OrderContext, OrderElement, divide_exact, solve_coordinates

ExponentVector = tuple[int, ...]


def compute_pairing(M: OrderContext, G: OrderContext, base_image: OrderElement) -> list[tuple[int, int]]:
    """Pair the embeddings of G over those of M.

    ``base_image`` is the generator of M written in G.  Returns for each
    i the two G-embedding indices (ascending) lying above the i-th
    embedding of M.
    """
    if G.degree != 2 * M.degree:
        raise VerificationError("extension must be quadratic over the base field")
    prec = G.precision
    with mpmath.workdps(prec):
        vals = base_image.conjugates()
        tol = mpmath.mpf(10) ** (-(prec // 2))
        groups: list[list[int]] = [[] for _ in range(M.degree)]
        for k, v in enumerate(vals):
            d = [abs(v - M.embeddings[i]) for i in range(M.degree)]
            best = min(range(M.degree), key=lambda i: d[i])
            if d[best] > tol:
                raise VerificationError("generator image does not match a base conjugate")
            others = [d[i] for i in range(M.degree) if i != best]
            if others and min(others) <= tol:
                raise PrecisionError("ambiguous base pairing at working precision")
            groups[best].append(k)
    if any(len(g) != 2 for g in groups):
        raise VerificationError("each base embedding must have exactly two extensions")
    return [tuple(sorted(g)) for g in groups]


def embed_base(M: OrderContext, G: OrderContext, base_image: OrderElement, x: OrderElement) -> OrderElement:
    """Image in G of an element of M (exact Horner evaluation)."""
    acc = G.zero
    for c in reversed(x.coords):
        acc = acc * base_image + G.from_int(c)
    return acc


def _apply_poly_element(coords: Sequence[int], t: OrderElement) -> OrderElement:
    G = t.ctx
    acc = G.zero
    for c in reversed(coords):
        acc = acc * t + G.from_int(c)
    return acc


@dataclass
class UnitSystem:
    """Fundamental units of G with the relative conjugation action.

    ``units`` are elements of G.  ``conj_matrix[l][k]`` is the exponent of
    unit l in sigma(unit k), and ``conj_signs[k]`` the torsion sign:
    sigma(u_k) = conj_signs[k] * prod_l u_l ** conj_matrix[l][k].
    ``base_count`` leading units lie in M (they are fixed by sigma); the
    rest are relative units.
    """

    M: OrderContext
    G: OrderContext
    base_image: OrderElement
    units: list[OrderElement]
    conj_matrix: list[list[int]]
    conj_signs: list[int]
    base_count: int = 0
    base_units_M: list[OrderElement] = field(default_factory=list)
    pairing: list[tuple[int, int]] = field(default_factory=list)
    sigma_theta: OrderElement | None = None
    _inverse_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self.pairing:
            self.pairing = compute_pairing(self.M, self.G, self.base_image)
        if self.sigma_theta is None:
            self.sigma_theta = find_sigma_theta(self.G, self.pairing)

    @property
    def rank(self) -> int:
        return len(self.units)

    @property
    def m(self) -> int:
        return self.M.degree

    def sigma(self, x: OrderElement) -> OrderElement:
        """Relative conjugate of an element of G (exact)."""
        return _apply_poly_element(x.coords, self.sigma_theta)

    def inverse_unit(self, k: int) -> OrderElement:
        if k not in self._inverse_cache:
            inv = divide_exact(self.G.one, self.units[k])
            if inv is None:
                raise VerificationError(f"unit {k} is not invertible in the order")
            self._inverse_cache[k] = inv
        return self._inverse_cache[k]

    def row_index(self, i: int, j: int) -> int:
        return self.pairing[i][j]


def find_sigma_theta(G: OrderContext, pairing: Sequence[tuple[int, int]]) -> OrderElement:
    """The element sigma(theta) of G, found by rounding and verified exactly."""
    n = G.degree
    with mpmath.workdps(G.precision):
        vals = [None] * n
        for a, b in pairing:
            vals[a] = G.embeddings[b]
            vals[b] = G.embeddings[a]
    st = solve_coordinates(G, vals)
    if st is None:
        raise VerificationError("relative conjugation does not map the order to itself")
    # exact checks: sigma(theta) is a root of f, and sigma is an involution
    if not _apply_poly_element(G.coeffs, st).is_zero():
        raise VerificationError("sigma(theta) is not a root of the defining polynomial")
    if _apply_poly_element(st.coords, st) != G.theta:
        raise VerificationError("sigma is not an involution")
    return st


def log_embedding_matrix(us: UnitSystem, precision: int | None = None) -> list[list]:
    """Entry [(i, j)][k] = log|u_k^{(ij)}|, rows ordered (1,1),(1,2),(2,1),..."""
    prec = precision or us.G.precision
    G = us.G.at_precision(prec)
    with mpmath.workdps(prec):
        conj = [[polys_eval(u.coords, r) for r in G.embeddings] for u in us.units]
        guard = mpmath.mpf(10) ** (-(prec // 2))
        rows = []
        for i in range(us.m):
            for j in range(2):
                k_emb = us.pairing[i][j]
                row = []
                for u in range(us.rank):
                    v = abs(conj[u][k_emb])
                    if v < guard:
                        raise PrecisionError("unit conjugate below underflow guard")
                    row.append(mpmath.log(v))
                rows.append(row)
    return rows


def polys_eval(coords, x):
    acc = 0
    for c in reversed(coords):
        acc = acc * x + c
    return acc


def log_matrix_np(us: UnitSystem) -> np.ndarray:
    return np.array([[float(v) for v in row] for row in log_embedding_matrix(us)])


def relative_conjugate(us: UnitSystem, v: Sequence[int]) -> tuple[int, ExponentVector]:
    """Exponents and torsion sign of sigma(prod u_k^{v_k})."""
    C = us.conj_matrix
    n = us.rank
    w = tuple(sum(C[l][k] * v[k] for k in range(n)) for l in range(n))
    sign = 1
    for k in range(n):
        if us.conj_signs[k] < 0 and v[k] % 2:
            sign = -sign
    return sign, w


def unit_value(us: UnitSystem, v: Sequence[int], ij: tuple[int, int], precision: int | None = None):
    """prod u_k^{(ij)} ** v_k at working precision."""
    prec = precision or us.G.precision
    G = us.G.at_precision(prec)
    idx = us.pairing[ij[0]][ij[1]]
    with mpmath.workdps(prec):
        r = G.embeddings[idx]
        acc = mpmath.mpf(1)
        for k, e in enumerate(v):
            if e:
                acc *= polys_eval(us.units[k].coords, r) ** e
        return acc


def exponent_vector_to_element(
    us: UnitSystem, v: Sequence[int], sign: int = 1, coord_cap: int = 10**200
) -> OrderElement:
    """Exact power product ``sign * prod u_k ** v_k`` in G."""
    acc = us.G.from_int(sign)
    for k, e in enumerate(v):
        if e == 0:
            continue
        base = us.units[k] if e > 0 else us.inverse_unit(k)
        acc = acc * base ** abs(e)
        if max(abs(c) for c in acc.coords) > coord_cap:
            raise OverflowError("power product exceeds the coordinate cap; verify numerically only")
    return acc


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str = ""


def verify_unit_system(us: UnitSystem) -> list[CheckResult]:
    """Run every structural check on a unit system; never raises."""
    out: list[CheckResult] = []
    G = us.G
    # generator image
    try:
        img_ok = _apply_poly_element(us.M.coeffs, us.base_image).is_zero()
    except Exception as exc:  # pragma: no cover - defensive
        img_ok, detail = False, str(exc)
    else:
        detail = ""
    out.append(CheckResult("base generator image is a root of the base polynomial", img_ok, detail))
    if not G.is_totally_real:
        out.append(CheckResult("extension totally real (torsion +-1)", False, "complex embeddings present"))
    # norms
    for k, u in enumerate(us.units):
        nm = u.norm()
        out.append(CheckResult(f"unit {k + 1} has norm +-1", abs(nm) == 1, f"norm {nm}"))
    # rank
    try:
        L = log_matrix_np(us)
        sv = np.linalg.svd(L, compute_uv=False)
        tol = 10 ** (-(G.precision // 4))
        rk = int(np.sum(sv > max(tol, 1e-10) * max(1.0, sv[0])))
        out.append(CheckResult("log matrix has full rank", rk == us.rank, f"rank {rk} of {us.rank}"))
    except PrecisionError as exc:
        out.append(CheckResult("log matrix has full rank", False, str(exc)))
    # conjugation action, exact
    n = us.rank
    shape_ok = len(us.conj_matrix) == n and all(len(r) == n for r in us.conj_matrix) and len(us.conj_signs) == n
    out.append(CheckResult("conjugation matrix shape", shape_ok))
    if not shape_ok:
        return out
    for k in range(n):
        col = [us.conj_matrix[l][k] for l in range(n)]
        try:
            lhs = us.sigma(us.units[k])
            rhs = exponent_vector_to_element(us, col, us.conj_signs[k])
            ok = lhs == rhs
        except Exception:
            ok = False
        out.append(CheckResult(f"sigma(unit {k + 1}) matches conjugation action", ok))
    # involution
    inv_ok = True
    for k in range(n):
        e = tuple(int(i == k) for i in range(n))
        s1, w = relative_conjugate(us, e)
        s2, w2 = relative_conjugate(us, w)
        if w2 != e or s1 * s2 != 1:
            inv_ok = False
    out.append(CheckResult("conjugation action is an involution", inv_ok))
    # base units
    for k in range(us.base_count):
        ok = us.sigma(us.units[k]) == us.units[k]
        out.append(CheckResult(f"unit {k + 1} lies in the base field", ok))
    for k, u in enumerate(us.base_units_M):
        out.append(CheckResult(f"base unit {k + 1} of M has norm +-1", abs(u.norm()) == 1))
    return out


def failures(report: Sequence[CheckResult]) -> list[CheckResult]:
    return [c for c in report if not c.ok]
