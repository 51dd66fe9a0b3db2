"""Independent reference implementations and random instance generators."""

from __future__ import annotations

import itertools

import numpy as np

from relthue import forms as bf
from relthue.lattice import EllipsoidProblem, lll_reduce
from relthue.order import divide_exact, make_context
from relthue.thue import QuarticThueInstance
from relthue.units import UnitSystem, exponent_vector_to_element
from relthue.unitsolve import build_case_c_equation

# ---------------------------------------------------------------------------
# lattices


def random_lattice(rng: np.random.Generator, n: int, spread: int = 30) -> list[list[int]]:
    while True:
        B = rng.integers(-spread, spread + 1, size=(n, n))
        if rng.random() < 0.3:
            # skewed: one long vector close to a multiple of another
            B[-1] = B[0] * int(rng.integers(50, 500)) + rng.integers(-2, 3, size=n)
        if round(abs(np.linalg.det(B))) != 0:
            return B.tolist()


def shortest_vector_sq(basis: list[list[int]]) -> int:
    """Exact squared length of a shortest nonzero vector.

    Coefficients are enumerated over a box proven to contain every vector no
    longer than the shortest basis vector of an LLL basis: x = v B^-1, so
    |x_i| <= |v| * |column i of B^-1|.
    """
    red, _ = lll_reduce(basis)
    B = np.array(red.basis, dtype=object)
    Bf = np.array(red.basis, dtype=float)
    best = min(int(np.dot(b, b)) for b in B)
    Binv = np.linalg.inv(Bf)
    half = [int(np.floor(np.sqrt(best) * np.linalg.norm(Binv[:, i]) + 1e-6)) for i in range(len(B))]
    rngs = [range(-h, h + 1) for h in half]
    Bi = np.array(red.basis, dtype=np.int64)
    X = np.array(list(itertools.product(*rngs)), dtype=np.int64)
    V = X @ Bi
    sq = np.einsum("ij,ij->i", V, V)
    sq = sq[sq > 0]
    return int(min(best, sq.min())) if sq.size else best


# ---------------------------------------------------------------------------
# ellipsoids


def random_ellipsoid(rng: np.random.Generator, max_points: int = 10**6):
    while True:
        d = int(rng.integers(1, 6))
        k = d + int(rng.integers(0, 3))
        G = rng.uniform(-3, 3, size=(k, d))
        off = rng.uniform(-5, 5, size=k)
        w = rng.uniform(0.2, 3, size=k)
        R = float(rng.uniform(0.5, 20))
        h = int(rng.integers(2, 8))
        if (2 * h + 1) ** d <= max_points:
            box = [(-h, h)] * d
            return EllipsoidProblem(off.tolist(), G.tolist(), w.tolist(), R, box=box), box


def ellipsoid_oracle(problem: EllipsoidProblem, box, band: float = 1e-9):
    """(inside, ambiguous): box points strictly inside, and points within a
    relative ``band`` of the boundary where double precision cannot decide."""
    X = np.array(list(itertools.product(*[range(lo, hi + 1) for lo, hi in box])), dtype=float)
    G = np.array(problem.generators, dtype=float)
    val = ((np.array(problem.offset)[None, :] + X @ G.T) * np.array(problem.weights)[None, :]) ** 2
    q = val.sum(axis=1)
    R = problem.radius_sq
    inside = {tuple(int(c) for c in x) for x in X[q <= R * (1 - band)]}
    amb = {tuple(int(c) for c in x) for x in X[np.abs(q - R) <= R * band]}
    return inside, amb


# ---------------------------------------------------------------------------
# unit equations


def quartic_unit_system() -> UnitSystem:
    """Rank three: G = Q(theta), theta^4 - 6 theta^2 + 7 = 0, over M = Q(theta^2).

    u1 = 2 - theta^2 lies in M; sigma(2 + theta) = u1^-1 (2 + theta)^-1 and
    sigma(2 + theta^3) = u1^5 (2 + theta^3)^-1.
    """
    M = make_context("x**2-6*x+7")
    G = make_context("x**4-6*x**2+7")
    units = [G.element(c) for c in [(2, 0, -1, 0), (2, 1, 0, 0), (2, 0, 0, 1)]]
    C = [[1, -1, 5], [0, -1, 0], [0, 0, -1]]
    return UnitSystem(M, G, G.element((0, 0, 1, 0)), units, C, [1, 1, 1], base_count=1,
                      base_units_M=[M.element((2, -1))])


def quadratic_unit_system() -> UnitSystem:
    """Rank one: G = Q(sqrt 3) over Q with unit 2 + sqrt 3."""
    M = make_context("x")
    G = make_context("x**2-3")
    return UnitSystem(M, G, G.zero, [G.element((2, 1))], [[-1]], [1])


def planted_unit_equation(us: UnitSystem, a0, beta_coords=None):
    """Equation (A/2) X + sigma((A/2) X) = 1 with A = beta / X0, where
    beta + sigma(beta) = 2; the exponent vector a0 of X0 is a solution."""
    G = us.G
    beta = G.one + (G.theta if beta_coords is None else G.element(beta_coords))
    X0 = exponent_vector_to_element(us, a0, 1)
    A = divide_exact(beta, X0)
    return build_case_c_equation(us, A, G.from_int(2), label=f"planted {tuple(a0)}")


# ---------------------------------------------------------------------------
# quartic Thue instances


def _positive_element(rng, M, lo=1, hi=6):
    """A random element of M that is positive at every embedding."""
    while True:
        c = [int(rng.integers(lo, hi))] + [int(rng.integers(-1, 2)) for _ in range(M.degree - 1)]
        e = M.element(c)
        if all(float(v) > 0.3 for v in e.conjugates_np().real):
            return e


def planted_quartic(rng: np.random.Generator, M, coord: int = 2):
    """Monic totally complex quartic form (P^2 + b P Q + c Q^2)(P^2 + e P Q + g Q^2)
    and a planted pair (X0, Y0) with Y0 != 0."""
    while True:
        b = M.element([int(rng.integers(-2, 3))] + [0] * (M.degree - 1))
        e = M.element([int(rng.integers(-2, 3))] + [0] * (M.degree - 1))
        c = _positive_element(rng, M) + b * b
        g = _positive_element(rng, M) + e * e
        f = bf.bf_mul([M.one, b, c], [M.one, e, g])
        X0 = M.element([int(rng.integers(-coord, coord + 1)) for _ in range(M.degree)])
        Y0 = M.element([int(rng.integers(-coord, coord + 1)) for _ in range(M.degree)])
        if Y0.is_zero():
            continue
        nu = bf.bf_eval(f, X0, Y0)
        if nu.is_zero():
            continue
        inst = QuarticThueInstance(M, f, [nu])
        if inst.is_totally_complex():
            return inst, X0, Y0, nu
