import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy

from relthue.errors import CardinalityCapError
from relthue.lattice import (
    EllipsoidProblem,
    EnumerationStats,
    IntegerLattice,
    fincke_pohst,
    lll_constant,
    lll_reduce,
    reduce_to_fixpoint,
    reduction_step,
)

from .oracles import ellipsoid_oracle, random_ellipsoid, random_lattice, shortest_vector_sq


def test_identity_is_fixed():
    I = [[int(i == j) for j in range(4)] for i in range(4)]
    red, T = lll_reduce(I)
    assert red.basis == I and T == I


def test_skewed_plane_lattice():
    red, _ = lll_reduce([[1, 0], [10**9, 1]])
    assert min(sum(c * c for c in b) for b in red.basis) == 1
    assert sum(c * c for c in red.basis[0]) == 1


def test_dependent_vectors_rejected():
    with pytest.raises(ValueError):
        lll_reduce([[1, 2], [2, 4]])


def _size_reduced_and_lovasz(basis, delta=Fraction(3, 4)):
    B = sympy.Matrix(basis)
    n = B.rows
    bstar = []
    mu = [[sympy.Rational(0)] * n for _ in range(n)]
    for i in range(n):
        v = B.row(i)
        for j in range(i):
            mu[i][j] = B.row(i).dot(bstar[j]) / bstar[j].dot(bstar[j])
            v = v - mu[i][j] * bstar[j]
        bstar.append(v)
    ok = all(abs(mu[i][j]) <= sympy.Rational(1, 2) for i in range(n) for j in range(i))
    for k in range(1, n):
        lhs = bstar[k].dot(bstar[k])
        rhs = (sympy.Rational(delta.numerator, delta.denominator) - mu[k][k - 1] ** 2) * bstar[k - 1].dot(bstar[k - 1])
        ok &= lhs >= rhs
    return ok


def test_lll_output_properties_and_transform():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(2, 6))
        B = random_lattice(rng, n)
        red, T = lll_reduce(B)
        assert (sympy.Matrix(T) * sympy.Matrix(B)) == sympy.Matrix(red.basis)
        assert abs(sympy.Matrix(T).det()) == 1
        assert _size_reduced_and_lovasz(red.basis)


def test_lll_first_vector_quality_small_sample():
    rng = np.random.default_rng(11)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        B = random_lattice(rng, n)
        red, _ = lll_reduce(B)
        b1 = sum(c * c for c in red.basis[0])
        assert b1 <= lll_constant() ** (n - 1) * shortest_vector_sq(B)


def test_fincke_pohst_unit_ball():
    p = EllipsoidProblem([0, 0, 0], [[1, 0, 0], [0, 1, 0], [0, 0, 1]], [1, 1, 1], 1)
    got = fincke_pohst(p)
    assert len(got) == 7
    assert got == sorted(got)


def test_fincke_pohst_matches_box_oracle_small_sample():
    rng = np.random.default_rng(3)
    for _ in range(20):
        p, box = random_ellipsoid(rng, max_points=20000)
        inside, amb = ellipsoid_oracle(p, box)
        got = set(fincke_pohst(p))
        assert inside <= got
        assert got - inside <= amb


def test_fincke_pohst_orthogonal_closed_form():
    # weights 1, generators orthogonal: points of Z^2 with x^2 + 4 y^2 <= 9
    p = EllipsoidProblem([0, 0], [[1, 0], [0, 2]], [1, 1], 9)
    want = {(x, y) for x in range(-3, 4) for y in range(-2, 3) if x * x + 4 * y * y <= 9}
    assert set(fincke_pohst(p)) == want


def test_fincke_pohst_cap():
    p = EllipsoidProblem([0, 0], [[1, 0], [0, 1]], [1, 1], 10**4)
    with pytest.raises(CardinalityCapError):
        fincke_pohst(p, cap=100)


def test_degenerate_ellipsoid_falls_back_to_box():
    # one row, two variables: the form is only semidefinite
    p = EllipsoidProblem([0.5], [[1.0, 1.0]], [1.0], 1.0, box=[(-3, 3), (-3, 3)])
    st = EnumerationStats()
    got = set(fincke_pohst(p, stats=st))
    want = {(x, y) for x in range(-3, 4) for y in range(-3, 4) if (0.5 + x + y) ** 2 <= 1}
    assert got == want


def _random_form(n, seed):
    """Square roots of distinct primes with random signs: no small integer relation."""
    rng = np.random.default_rng(seed)
    primes = [int(p) for p in rng.choice(list(sympy.primerange(2, 200)), size=n, replace=False)]
    with mpmath.workdps(200):
        return [(-1) ** int(rng.integers(2)) * mpmath.sqrt(p) for p in primes]


def _planted_form(n, seed):
    """Generic form whose value at d = (1, -2, 3, ...) is 0.01, so d satisfies
    |form(d)| < exp(-D) with D = n."""
    z = _random_form(n - 1, seed)
    d = [(-1) ** i * (i + 1) for i in range(n)]
    with mpmath.workdps(200):
        tail = (mpmath.mpf("0.01") - mpmath.fsum(di * zi for di, zi in zip(d[:-1], z))) / d[-1]
    return z + [tail], d


def test_reduction_step_passes_with_huge_H():
    z = _random_form(3, 0)
    st = reduction_step(z, 1.0, 1.0, 0.0, 10, 10**12, 200)
    assert st.passed
    assert st.new_bound == math.floor(math.log(10**12) - math.log(10))


def test_reduction_step_signals_small_H():
    z = _random_form(3, 1)
    st = reduction_step(z, 1.0, 1.0, 0.0, 10**6, 10, 60)
    assert not st.passed and st.new_bound is None


@pytest.mark.parametrize("seed", range(5))
def test_reduction_soundness_on_planted_solution(seed):
    z, d = _planted_form(3, seed)
    with mpmath.workdps(60):
        assert abs(mpmath.fsum(a * b for a, b in zip(d, z))) < mpmath.exp(-max(abs(x) for x in d))
    res = reduce_to_fixpoint(lambda prec: z, 1.0, 1.0, 0.0, 10**20)
    assert max(abs(x) for x in d) <= res.bound < 10**20
    for st in res.steps:
        if st.passed:
            assert st.T >= st.D0


def test_reduce_already_small_bound():
    z = _random_form(3, 4)
    res = reduce_to_fixpoint(lambda prec: z, 1.0, 1.0, 0.0, 10)
    assert res.bound <= 10


def test_integer_lattice_shape():
    L = IntegerLattice([[1, 2, 3], [0, 1, 4]])
    assert L.rank == 2 and L.dim == 3
    assert L.gram() == [[14, 14], [14, 17]]
