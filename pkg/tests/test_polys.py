from fractions import Fraction

import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from relthue import polys

x = sympy.Symbol("x")
small_poly = st.lists(st.integers(-9, 9), min_size=2, max_size=6).filter(lambda p: p[-1] != 0)


def _sym(p):
    return sympy.Poly(list(reversed(p)), x)


def _companion_resultant(f, g):
    """lc(f)^deg(g) * det g(C) with C the companion matrix of f / lc(f)."""
    n = len(f) - 1
    lc = sympy.Rational(f[-1])
    C = sympy.zeros(n, n)
    for i in range(1, n):
        C[i, i - 1] = 1
    for i in range(n):
        C[i, n - 1] = -sympy.Rational(f[i]) / lc
    gC = sympy.zeros(n, n)
    for c in reversed(g):
        gC = gC * C + c * sympy.eye(n)
    return lc ** (len(g) - 1) * gC.det()


@settings(max_examples=60, deadline=None)
@given(small_poly, small_poly)
def test_resultant_matches_companion_oracle(f, g):
    assert polys.resultant(f, g) == _companion_resultant(f, g)


def test_resultant_antisymmetry_sign():
    # Res(x + 1, x^3) = (-1)^3; swapping picks up (-1)^(1*3)
    assert polys.resultant([1, 1], [0, 0, 0, 1]) == -1
    assert polys.resultant([0, 0, 0, 1], [1, 1]) == 1


@settings(max_examples=60, deadline=None)
@given(small_poly)
def test_discriminant_matches_sympy(f):
    assert polys.discriminant(f) == int(sympy.discriminant(_sym(f)))


def test_discriminant_of_example_duodecic():
    f = [7, 0, 0, 0, 15, 0, 0, 0, 8, 0, 0, 0, 1]
    assert polys.discriminant(f) == 2**24 * 7**3 * 19**8


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=5))
def test_interpolation_round_trip(coeffs):
    xs = list(range(len(coeffs)))
    ys = [polys.peval(coeffs, t) for t in xs]
    got = polys.interpolate_integer(xs, ys)
    assert got == [Fraction(c) for c in coeffs]


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(-6, 6), min_size=3, max_size=3), min_size=3, max_size=3))
def test_bareiss_det_matches_sympy(m):
    assert polys.bareiss_det(m) == int(sympy.Matrix(m).det())


@settings(max_examples=40, deadline=None)
@given(st.lists(st.lists(st.integers(-6, 6), min_size=4, max_size=4), min_size=3, max_size=3))
def test_hnf_columns_unimodular(mat):
    H, W, rank = polys.hnf_columns(mat)
    assert (sympy.Matrix(mat) * sympy.Matrix(W)) == sympy.Matrix(H)
    assert abs(sympy.Matrix(W).det()) == 1
    assert rank == sympy.Matrix(mat).rank()
