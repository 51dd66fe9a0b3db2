import itertools

import mpmath
import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from relthue import forms as bf
from relthue.indexform import (
    AbsoluteSearchSpec,
    RelativeQuarticData,
    absolute_index,
    absolute_search,
    assemble_generators,
    build_forms,
    char_poly,
    conic_form,
    element_discriminant,
    find_conic_zero,
    norm_condition,
    log_index_numeric,
    parametrize,
    quartic_instances,
    select_instance,
)
from relthue.order import make_context
from relthue.thue import QuarticThueInstance, quartic_small_solutions, unit_normalize_rhs

from .conftest import CUBIC, D_K

M3 = make_context(CUBIC)
small = st.integers(-3, 3)
m3_el = st.tuples(small, small, small).map(M3.element)


def _example_data(M):
    return RelativeQuarticData(M, (M.zero, M.zero, M.zero, M.theta))


def test_example_forms(M):
    fm = build_forms(_example_data(M))
    mu = M.theta
    assert fm.F == [M.one, M.zero, M.from_int(-4) * mu, M.zero]
    assert fm.Q1 == [M.one, M.zero, M.zero, M.zero, M.zero, mu]
    assert fm.Q2 == [M.zero, M.zero, M.one, -M.one, M.zero, M.zero]


def test_coefficient_conventions_agree(M):
    a = (M.from_int(1), M.theta, M.from_int(-2), M.theta + M.from_int(3))
    d1 = RelativeQuarticData.from_descending(M, a)
    d2 = RelativeQuarticData.from_ascending(M, tuple(reversed(a)))
    assert d1.a == d2.a


@settings(max_examples=25, deadline=None)
@given(m3_el, m3_el, m3_el, m3_el, small, small, small)
def test_index_form_factorization_numeric_oracle(a1, a2, a3, a4, X, Y, Z):
    """prod_{i<j} (alpha_i - alpha_j) / (xi_i - xi_j) = F(Q1, Q2) at each real
    embedding, for alpha = X xi + Y xi^2 + Z xi^3."""
    data = RelativeQuarticData(M3, (a1, a2, a3, a4))
    fm = build_forms(data)
    Xe, Ye, Ze = (M3.from_int(v) for v in (X, Y, Z))
    U, V, _ = norm_condition(data, fm, Xe, Ye, Ze)
    lhs_el = bf.bf_eval(fm.F, U, V)
    with mpmath.workdps(60):
        for e in range(3):
            r = M3.embeddings[e]
            coeffs = [1] + [sum(c * r**k for k, c in enumerate(a.coords)) for a in (a1, a2, a3, a4)]
            xis = mpmath.polyroots(coeffs, maxsteps=500, extraprec=400)
            if min(abs(p - q) for p, q in itertools.combinations(xis, 2)) < 1e-20:
                continue
            al = [X * x + Y * x**2 + Z * x**3 for x in xis]
            ratio = mpmath.fprod((al[i] - al[j]) / (xis[i] - xis[j]) for i, j in itertools.combinations(range(4), 2))
            want = sum(c * r**k for k, c in enumerate(lhs_el.coords))
            # the ratio is symmetric in the roots; the identity holds up to sign
            assert min(abs(ratio - want), abs(ratio + want)) <= 1e-30 * (1 + abs(want))


def test_example_conic_and_parametrization(M):
    fm = build_forms(_example_data(M))
    Q0 = conic_form(M.one, M.zero, fm)
    assert Q0 == [M.zero, M.zero, -M.one, M.one, M.zero, M.zero]
    zero = find_conic_zero(Q0)
    assert bf.tq_eval(Q0, *zero).is_zero()
    assert not all(c.is_zero() for c in zero)
    pd = parametrize(M.one, M.zero, fm)
    assert pd.identity_holds()
    P, Q = M.element((2, -1, 0)), M.element((1, 1, 1))
    assert bf.tq_eval(Q0, *pd.images(P, Q)).is_zero()


@pytest.mark.parametrize("xyz", [((1, 0, 0), (1, 0, 0), (0, 0, 0)), ((2, 1, 0), (0, 1, 0), (1, 0, 0)),
                                 ((0, 1, 0), (1, -1, 0), (0, 0, 1))])
def test_parametrization_identity_for_other_conics(M, xyz):
    """(U, V) taken as Q1, Q2 at a known point, which is then a zero of the conic."""
    fm = build_forms(_example_data(M))
    pt = tuple(M.element(c) for c in xyz)
    U, V = bf.tq_eval(fm.Q1, *pt), bf.tq_eval(fm.Q2, *pt)
    assert bf.tq_eval(conic_form(U, V, fm), *pt).is_zero()
    pd = parametrize(U, V, fm, zero=pt)
    assert pd.identity_holds()
    for P, Q in [(M.one, M.zero), (M.theta, M.one - M.theta)]:
        assert bf.tq_eval(pd.Q0, *pd.images(P, Q)).is_zero()


def test_example_quartic_selection_and_generator(M):
    data = _example_data(M)
    fm = build_forms(data)
    pd = parametrize(M.one, M.zero, fm)
    cands = quartic_instances(pd, fm, M.one, M.zero)
    assert [c.label for c in cands] == ["F1", "F2"]
    assert cands[0].form == [M.one, M.zero, M.zero, M.zero, M.theta] and not cands[0].degenerate
    assert cands[1].degenerate
    sel = select_instance(cands)
    reps = unit_normalize_rhs(sel.rhs_base, [M.theta - 1, M.theta - 2])
    inst = QuarticThueInstance(M, sel.form, [r[0] for r in reps])
    fams = assemble_generators(quartic_small_solutions(inst), pd, data, fm)
    assert len(fams) == 1
    assert fams[0].triple() == (M.one, M.zero, M.zero)
    assert abs(fams[0].norm_value) == data.rhs_norm == 1


def test_index_of_theta_and_discriminant_identity(K):
    assert K.discriminant == D_K
    assert absolute_index(K.theta, D_K) == 1
    z = K.element((1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0))
    I = absolute_index(z, D_K)
    assert I * I * D_K == abs(element_discriminant(z))


def test_char_poly_matches_sympy_resultant(K):
    t, x = sympy.symbols("t x")
    z = K.element((2, 0, -1, 0, 1, 0, 0, 0, 0, 0, 0, 0))
    f = t**12 + 8 * t**8 + 15 * t**4 + 7
    zt = sum(c * t**k for k, c in enumerate(z.coords))
    want = sympy.Poly(sympy.resultant(f, x - zt, t), x)
    want = [int(c) for c in reversed(want.all_coeffs())]
    if want[-1] < 0:
        want = [-c for c in want]
    assert char_poly(z) == want


def test_non_generator_has_index_zero(K):
    mu = K.element((0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0))
    assert absolute_index(mu, D_K) == 0


def test_numeric_log_index(K):
    assert log_index_numeric(K.theta, D_K) == pytest.approx(0.0, abs=1e-8)


def test_small_absolute_search(K, M):
    mu_K = K.element((0, 0, 0, 0, -1, 0, 0, 0, 0, 0, 0, 0))
    spec = AbsoluteSearchSpec(K, mu_K, M, [M.theta - 1, M.theta - 2], D_K)
    hits, stats = absolute_search(spec, 2, 1, 1e15)
    assert sorted(h.index for h in hits) == [1, 65329214857201]
    for h in hits:
        assert h.index**2 * D_K == abs(element_discriminant(h.zeta))
    assert stats["screened_candidates"] >= len(hits)


def test_log_index_screen_is_a_lower_bound(K, M):
    """The exact index of random elements is never below the screening value."""
    rng = np.random.default_rng(2)
    for _ in range(5):
        z = K.element(tuple(int(v) for v in rng.integers(-2, 3, size=12)))
        I = absolute_index(z, D_K)
        if I:
            assert np.log(float(I)) >= log_index_numeric(z, D_K) - 1e-6
