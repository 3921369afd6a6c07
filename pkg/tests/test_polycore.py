import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aglerkit.exact import GaussianRational
from aglerkit.polycore import (HomogeneousPolynomial, MixedDegreeError, ParseError,
                               VariableIndexError, basis, closed_form_kvh, dehomogenize, dim,
                               format_poly, hat, homogenize, inner_product, kernel_polynomial,
                               kvh_polynomial, monomial, parse_poly, random_polynomial)

KV_TEXT = "z1^2+z2^2+z3^2-2 z1 z2-2 z1 z3-2 z2 z3"


def test_basis_order_grlex():
    assert basis(3, 2) == ((2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2))


@pytest.mark.parametrize("d", range(1, 7))
@pytest.mark.parametrize("k", range(0, 9))
def test_basis_size(d, k):
    assert len(basis(d, k)) == dim(d, k) == math.comb(k + d - 1, d - 1)


def test_parse_kv():
    p = parse_poly(KV_TEXT, 3)
    assert len(p.coeffs) == 6 and p.n == 2 and p.exact
    assert p == kvh_polynomial(3, -2)


def test_parse_monomial_and_errors():
    p = parse_poly("z1^3", 1)
    assert p.coeffs == {(3,): 1}
    with pytest.raises(MixedDegreeError):
        parse_poly("z1 + z2^2", 2)
    with pytest.raises(VariableIndexError):
        parse_poly("z4", 3)
    with pytest.raises(ParseError):
        parse_poly("z1 +* z2", 2)


def test_parse_coefficient_forms():
    p = parse_poly("(1/2-3i) z1 z2 + 2.5 z1^2 - i z2^2 + 1e-1*z1*z2", 2)
    assert p.coefficient((1, 1)) == GaussianRational(F(1, 2) + F(1, 10), -3)
    assert p.coefficient((2, 0)) == F(5, 2)
    assert p.coefficient((0, 2)) == GaussianRational(0, -1)
    q = parse_poly("0.5 z1", 1, mode="float")
    assert not q.exact and q.coefficient((1,)) == 0.5


def test_inner_products():
    kv = kvh_polynomial(3, -2)
    assert inner_product(kv, kvh_polynomial(3, F(-1, 2))) == 6
    assert inner_product(kv, kvh_polynomial(3, -1)) == 9
    assert inner_product(monomial((1, 0)), monomial((0, 1))) == 0


def test_hat():
    kv = kvh_polynomial(3, -2)
    assert hat(kv) == kv
    iz = HomogeneousPolynomial(1, 1, {(1,): GaussianRational(0, 1)})
    assert hat(iz).coefficient((1,)) == GaussianRational(0, -1)


def test_kvh_members():
    assert kvh_polynomial(3, 0) == parse_poly("z1^2 + z2^2 + z3^2", 3)
    assert kvh_polynomial(3, F(-1, 2)) == parse_poly(
        "z1^2+z2^2+z3^2-1/2 z1 z2-1/2 z2 z3-1/2 z1 z3", 3)


def test_kernel_polynomial():
    k = kernel_polynomial(2, 1)
    assert k == parse_poly("z1 + z2", 2) and k.norm2_sq() == 2
    k = kernel_polynomial(3, 2)
    assert len(k.coeffs) == 6 and k.norm2_sq() == 6
    for d in range(1, 5):
        for n in range(5):
            assert kernel_polynomial(d, n).norm2() == pytest.approx(math.sqrt(math.comb(n + d - 1, d - 1)))


def test_homogenize():
    p = homogenize({(0,): 1, (1,): 1}, 1)
    assert p == parse_poly("z1 + z2", 2)
    kv = kvh_polynomial(3, -2)
    h = homogenize(dict(kv.coeffs), 2)
    assert h.d == 4 and all(a[0] == 0 for a in h.coeffs)
    assert dehomogenize(h) == dict(kv.coeffs)


def test_closed_form_kvh_values():
    assert closed_form_kvh(3, -2) == pytest.approx((6, 3))
    assert closed_form_kvh(3, -0.5)[1] == pytest.approx(1)
    assert closed_form_kvh(3, -1)[1] == pytest.approx(5 / 3)


@pytest.mark.parametrize("d", [2, 4])
@pytest.mark.parametrize("t", [-2, -1, -0.5, 0, 0.5, 1, 2, 1 + 1j])
def test_even_d_closed_form_attained_at_sign_points(d, t):
    p = kvh_polynomial(d, complex(t)).to_float()
    pts = [np.ones(d), np.array([(-1) ** j for j in range(d)], dtype=float)]
    best = max(abs(p(*z)) for z in pts)
    assert best == pytest.approx(closed_form_kvh(d, t)[0], abs=1e-12)


# -- properties -----------------------------------------------------------------------------

def _complex_poly(d, n, seed):
    return random_polynomial(d, n, seed)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.integers(0, 10**6))
def test_inner_product_is_hermitian_positive(d, n, seed):
    p = _complex_poly(d, n, seed)
    q = _complex_poly(d, n, seed + 1)
    r = _complex_poly(d, n, seed + 2)
    a, b = 0.3 - 1.2j, 2.0 + 0.5j
    assert inner_product(p, p).real > 0
    assert abs(inner_product(p, p).imag) < 1e-12
    lhs = inner_product(p * a + q * b, r)
    rhs = a * inner_product(p, r) + b * inner_product(q, r)
    assert abs(lhs - rhs) < 1e-9
    assert abs(inner_product(p, q) - np.conj(inner_product(q, p))) < 1e-12
    assert inner_product(p - p, p - p) == 0


rational_coef = st.builds(lambda a, b: GaussianRational(a, b).simplify(),
                          st.fractions(-9, 9, max_denominator=7), st.fractions(-9, 9, max_denominator=7))


@st.composite
def exact_polys(draw):
    d = draw(st.integers(1, 4))
    n = draw(st.integers(0, 4))
    mons = basis(d, n)
    picks = draw(st.lists(st.sampled_from(mons), max_size=len(mons), unique=True))
    return HomogeneousPolynomial(d, n, {a: draw(rational_coef) for a in picks}, exact=True)


@settings(max_examples=150, deadline=None)
@given(exact_polys())
def test_format_parse_round_trip_exact(p):
    q = parse_poly(format_poly(p), p.d, n=p.n)
    assert q == p


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.integers(0, 10**6))
def test_format_parse_round_trip_float(d, n, seed):
    p = _complex_poly(d, n, seed)
    q = parse_poly(format_poly(p), d, mode="float", n=n)
    assert q == p


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 4), st.integers(0, 4), st.integers(0, 10**6))
def test_hat_involution_and_vector_round_trip(d, n, seed):
    p = _complex_poly(d, n, seed)
    assert hat(hat(p)) == p
    assert HomogeneousPolynomial.from_vector(d, n, p.vector()) == p


def test_json_round_trip():
    p = parse_poly("(1/2+i) z1 z2 - 3 z2^2", 2)
    assert HomogeneousPolynomial.from_json_dict(p.to_json_dict()) == p
    f = random_polynomial(3, 2, 1)
    assert HomogeneousPolynomial.from_json_dict(f.to_json_dict()) == f


def test_mixing_exact_and_float_refused():
    with pytest.raises(TypeError):
        HomogeneousPolynomial(1, 1, {(1,): 0.5}, exact=True)
    with pytest.raises(TypeError):
        kvh_polynomial(3, -2) + random_polynomial(3, 2, 0)
