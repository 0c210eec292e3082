from fractions import Fraction as F

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dict_add, dict_mul
from strategies import exponents, series
from puiseux_perron.errors import DimensionMismatch, SingularLeadingTerm, TruncationError, ZeroMatrix
from puiseux_perron.parsing import parse_document, parse_entry
from puiseux_perron.series import (
    INF,
    PuiseuxMatrix,
    PuiseuxSeries,
    add,
    diag_conjugate,
    invert,
    leading_term,
    mat_mul,
    mat_vec,
    mul,
    solve_linear,
    vector_val,
)
from puiseux_perron.eigen import residual_valuation
from puiseux_perron.wdigraph import SimilarityTransform, adjacency_graph, similarity_translate

S = parse_entry


def M(text):
    return parse_document(text).matrix


# --- valuation ---------------------------------------------------------------


def test_valuation_examples():
    assert S("1 - t").val == 0
    assert S("t^(3/2) + t^2").val == F(3, 2)
    assert S("0").val == INF and S("0").is_zero


def test_zero_valuation_is_a_sentinel_not_a_number():
    assert PuiseuxSeries.zero().val is INF


# --- add / mul / invert ----------------------------------------------------


def test_add_examples():
    r = add(S("1 + t"), S("1 - t"))
    assert r.terms == ((0, 2.0),)
    assert r.trunc == INF
    assert add(S("1 + t"), S("-1 + t^(1/2)")).terms == ((F(1, 2), 1.0), (1, 1.0))
    x = S("2 - 3*t^(5/3)")
    assert add(x, PuiseuxSeries.zero()) == x


def test_add_truncation_is_the_minimum():
    r = add(S("1 + t + o(t^2)"), S("1 + o(t^(3/2))"))
    assert r.trunc == F(3, 2)


def test_mul_examples():
    assert mul(S("1 + t"), S("1 - t")).terms == ((0, 1.0), (2, -1.0))
    assert mul(S("t^(1/2)"), S("t^(1/2)")).terms == ((1, 1.0),)
    x = S("3 - t^(2/3)")
    assert mul(x, PuiseuxSeries.constant(1.0)) == x


def test_mul_truncation_rule():
    x = S("1 + t + o(t^2)")
    y = S("t + o(t^3)")
    r = mul(x, y)
    assert r.trunc == min(x.trunc + y.val, y.trunc + x.val) == 3
    assert r.terms == ((1, 1.0), (2, 1.0))


def test_invert_examples():
    assert invert(S("1 - t"), 2).allclose(S("1 + t + t^2"), atol=1e-15)
    assert invert(PuiseuxSeries.constant(2.0), 5).terms == ((0, 0.5),)
    x = S("t^(1/2) + t^(3/2)")
    y = invert(x, 1)
    assert y.val == F(-1, 2)
    assert y.allclose(S("t^(-1/2) - t^(1/2)"), atol=1e-15)
    prod = mul(x, y) - 1
    assert all(e > 1 for e, _ in prod.terms)


def test_invert_zero_raises():
    with pytest.raises(ZeroDivisionError):
        invert(PuiseuxSeries.zero(), 1)


def test_coefficient_beyond_truncation_is_an_error():
    x = S("1 + t + o(t^2)")
    assert x.coeff(F(3, 2)) == 0.0
    with pytest.raises(TruncationError):
        x.coeff(3)


@given(series(), series())
def test_mul_matches_exact_convolution(x, y):
    expect = dict_mul(dict(x.terms), dict(y.terms))
    got = dict(mul(x, y).terms)
    assert set(got) == set(expect)
    assert all(got[e] == pytest.approx(expect[e], abs=1e-12) for e in expect)


@given(series(), series())
def test_add_matches_exact_sum(x, y):
    assert dict(add(x, y).terms) == dict_add(dict(x.terms), dict(y.terms))


@given(series(), series())
def test_valuation_laws(x, y):
    assert mul(x, y).val == x.val + y.val
    assert add(x, y).val >= min(x.val, y.val)


@settings(max_examples=1000)
@given(series(), st.sampled_from([F(1), F(3, 2), F(2), F(5, 2)]))
def test_invert_then_multiply_gives_one(x, order):
    y = invert(x, order)
    r = mul(x, y) - 1
    # mod terms of exponent > order, x*y is exactly 1
    scale = max(1.0, x.max_abs * y.max_abs)
    assert all(abs(c) <= 1e-9 * scale for e, c in r.terms if e <= order)
    assert r.trunc >= order


# --- matrices -----------------------------------------------------------------


def test_mat_mul_examples():
    a = M("[[1 - t, t^(1/2)], [2, 3 + t]]")
    assert mat_mul(a, PuiseuxMatrix.identity(2)).entries == a.entries
    assert mat_mul(M("[[t]]"), M("[[t]]")).entries[0][0].terms == ((2, 1.0),)
    with pytest.raises(DimensionMismatch):
        mat_mul(a, PuiseuxMatrix.from_real(np.ones((3, 3))))


def test_intro_matrix_times_reference_vector():
    y = M("[[1 - t, 1 + t], [1 + t^2, 1 - t]]")
    lam = S("2 - 1/2*t + 3/8*t^2 + o(t^2)")
    v = (S("1 + 1/2*t - 5/8*t^2 + o(t^2)"), S("1 + o(t^2)"))
    yv = mat_vec(y, v)
    lv = tuple(mul(lam, x) for x in v)
    diff = [add(a, -b) for a, b in zip(yv, lv)]
    assert all(not any(abs(c) > 1e-12 for e, c in d.terms if e <= 2) for d in diff)
    assert residual_valuation(y, lam, v) > 2


def test_leading_term_examples():
    assert (leading_term(M("[[1 - t, 1 + t], [1 + t^2, 1 - t]]")) == np.ones((2, 2))).all()
    assert (leading_term(M("[[t]]")) == [[1.0]]).all()
    assert (leading_term(M("[[2 + t, t^2], [-t, 2 + 2*t]]")) == 2 * np.eye(2)).all()
    with pytest.raises(ZeroMatrix):
        leading_term(M("[[0, 0], [0, 0]]"))


def test_diag_conjugate_identity_shift():
    y = M("[[1, 1 - t, t], [t, 2, 2*t^2], [2*t, t^2, 2 + t]]")
    assert diag_conjugate(y, [0, 0, 0]).entries == y.entries


def test_diag_conjugate_reproduces_the_conjugated_pencil_matrix():
    y = M("[[1, 1 - t, t], [t, 2, 2*t^2], [2*t, t^2, 2 + t]]")
    z = M("[[1, t^(1/2) - t^(3/2), t], [t^(1/2), 2, 2*t^(3/2)], [2*t, t^(5/2), 2 + t]]")
    assert diag_conjugate(y, [0, F(1, 2), 0]).entries == z.entries


@st.composite
def matrix_and_shifts(draw):
    n = draw(st.integers(1, 5))
    rows = [[draw(series(max_terms=2)) if draw(st.booleans()) else PuiseuxSeries.zero() for _ in range(n)]
            for _ in range(n)]
    r = [draw(exponents) - 3 for _ in range(n)]
    return PuiseuxMatrix(rows), r


@given(matrix_and_shifts())
def test_diag_conjugate_matches_similarity_translation(case):
    y, r = case
    g = adjacency_graph(y)
    expect = similarity_translate(g, SimilarityTransform({i + 1: r[i] for i in range(y.n)}))
    assert adjacency_graph(diag_conjugate(y, r)).arcs == expect.arcs


def _sympy_matrix(y, s, q):
    return sympy.Matrix(y.n, y.n, lambda i, j: sum(
        sympy.Rational(int(c)) * s ** int(e * q) for e, c in y.entries[i][j].terms))


@settings(max_examples=40)
@given(matrix_and_shifts())
def test_diag_conjugate_preserves_characteristic_polynomial(case):
    y, r = case
    z = diag_conjugate(y, r)
    q = 12
    s, lam = sympy.symbols("s lam")
    # shifts may be negative; multiply through by a common power of s
    pad = max(0, -min(int(x.val * q) for row in z for x in row if not x.is_zero) if not z.is_zero else 0)
    py = (_sympy_matrix(y, s, q) - lam * sympy.eye(y.n)).det()
    zs = sympy.Matrix(y.n, y.n, lambda i, j: sum(
        sympy.Rational(int(c)) * s ** (int(e * q) + pad) for e, c in z.entries[i][j].terms))
    pz = (zs - lam * s ** pad * sympy.eye(y.n)).det()
    assert sympy.expand(pz - s ** (pad * y.n) * py) == 0


# --- solve_linear -------------------------------------------------------------


def test_solve_linear_identity():
    b = (S("1 + t"), S("t^(1/2)"), S("0"))
    x = solve_linear(PuiseuxMatrix.identity(3), b, 3)
    assert all(u.allclose(v, atol=1e-15) for u, v in zip(x, b))


def test_solve_linear_resolvent_of_the_dominant_regime():
    # a = 3, f = h = 1, d = g = 1, e = k = 1: (a - W) x = (d t^(9/4), g t^(1/4)).
    # Leading terms from the closed form (aI - [[0,f],[h,0]])^{-1} (0, g)
    # = (fg, ag)/(a^2 - fh) = (1/8, 3/8); a truncated Neumann series
    # stops at (1/9, 1/3).
    a_minus_w = M("[[3 - t^3, -1], [-1, 3 - t]]")
    x = solve_linear(a_minus_w, (S("t^(9/4)"), S("t^(1/4)")), F(1, 4))
    assert [u.val for u in x] == [F(1, 4), F(1, 4)]
    assert x[0].leading_coeff == pytest.approx(1 / 8, abs=1e-12)
    assert x[1].leading_coeff == pytest.approx(3 / 8, abs=1e-12)
    ref = np.linalg.solve([[3.0, -1.0], [-1.0, 3.0]], [0.0, 1.0])
    assert np.allclose([u.leading_coeff for u in x], ref, atol=1e-12)


def test_solve_linear_singular_leading_term():
    with pytest.raises(SingularLeadingTerm):
        solve_linear(M("[[1, 1], [1, 1]]"), (S("1"), S("2")), 1)


@st.composite
def well_conditioned_systems(draw):
    n = draw(st.integers(1, 4))
    seed = draw(st.integers(0, 10**6))
    rng = np.random.default_rng(seed)
    a0 = rng.integers(-3, 4, size=(n, n)) + 6 * np.eye(n)
    a1 = rng.integers(-3, 4, size=(n, n))
    a = PuiseuxMatrix.from_coefficients({0: a0, F(1, 2): a1})
    b = [PuiseuxSeries([(F(int(rng.integers(0, 4)), 2), float(rng.integers(1, 5)))]) for _ in range(n)]
    return a, b


@given(well_conditioned_systems(), st.sampled_from([F(1), F(2), F(5, 2)]))
def test_solve_linear_multiply_back(system, order):
    a, b = system
    x = solve_linear(a, b, order)
    res = [add(u, -w) for u, w in zip(mat_vec(a, x), b)]
    scale = max(1.0, max(w.max_abs for w in b))
    for r in res:
        assert r.trunc >= order
        assert all(abs(c) <= 1e-9 * scale for e, c in r.terms if e <= order)


@st.composite
def nonnegative_real_matrices(draw):
    n = draw(st.integers(1, 6))
    seed = draw(st.integers(0, 10**6))
    rng = np.random.default_rng(seed)
    return rng.random((n, n)) * (rng.random((n, n)) < 0.6) * draw(st.floats(0.1, 10))


def _spectral_radius_power(x, iters=2000):
    v = np.ones(x.shape[0])
    rho = 0.0
    for _ in range(iters):
        w = x @ v + v
        rho = np.abs(w).max()
        v = w / rho
    return max(rho - 1.0, 0.0)


@given(nonnegative_real_matrices(), st.floats(1.01, 3.0))
def test_resolvent_of_nonnegative_matrix_is_nonnegative(x, factor):
    rho = max(_spectral_radius_power(x), max(abs(np.linalg.eigvals(x))))
    mu = factor * rho + 1e-3
    a = PuiseuxMatrix.from_real(mu * np.eye(len(x)) - x)
    for k in range(len(x)):
        e = [PuiseuxSeries.constant(1.0 if i == k else 0.0) for i in range(len(x))]
        sol = solve_linear(a, e, 0)
        assert all(s.is_zero or s.leading_coeff >= -1e-9 for s in sol)
        assert vector_val(sol) == 0
