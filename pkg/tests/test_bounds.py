import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aglerkit.bounds import (Method5Violation, all_bounds, best_bound, method1, method2, method3,
                             method4, method5_verify)
from aglerkit.exact import exact_matrix
from aglerkit.fixtures import crabb_davie_polynomial
from aglerkit.linops import constant_C
from aglerkit.norms import dual_sa_norm
from aglerkit.polycore import HomogeneousPolynomial, dim, kernel_polynomial, kvh_polynomial, random_polynomial

HOLBROOK_Q = kvh_polynomial(3, F(-1, 2))


def test_holbrook_methods_1_2():
    m1 = [method1(HOLBROOK_Q, k) for k in range(2)]
    m2 = [method2(HOLBROOK_Q, k) for k in range(2)]
    assert [b.value_sq for b in m1] == [F(15, 4), F(9, 4)]
    assert [b.value_sq for b in m2] == [F(3, 2), F(3, 2)]
    assert min(b.value for b in m1) == pytest.approx(1.5)
    assert min(b.value_sq for b in m2) == F(3, 2)
    assert all(b.exact and b.verify(HOLBROOK_Q) for b in m1 + m2)


def test_holbrook_methods_3_4():
    m3 = method3(HOLBROOK_Q)
    assert m3.exact and m3.value_sq == 1
    assert method4(HOLBROOK_Q, 0).value_sq == 1
    assert method4(HOLBROOK_Q, 1).value_sq == F(3, 2)
    b = best_bound(HOLBROOK_Q)
    assert b.method in (3, 4) and b.value == pytest.approx(1, abs=1e-12)
    assert all(x.verify(HOLBROOK_Q) for x in all_bounds(HOLBROOK_Q))


def test_one_variable_monomial():
    q = HomogeneousPolynomial(1, 4, {(4,): 1})
    for k in range(4):
        assert method1(q, k).value_sq == 1 and method2(q, k).value_sq == 1
        assert method4(q, k).value_sq == 1
    assert method3(q).value_sq == 1


def test_kernel_polynomials():
    for n in range(1, 5):
        K = kernel_polynomial(3, n)
        assert method3(K).value == pytest.approx(1, abs=1e-12)
        assert method4(K, 0).value == pytest.approx(1, abs=1e-12)


def test_vk_and_crabb_davie_best():
    q = kvh_polynomial(3, -1)
    b = best_bound(q)
    assert b.value <= math.sqrt(3) + 1e-12
    assert method2(q, 1).value_sq == 3
    assert best_bound(crabb_davie_polynomial()).value == pytest.approx(1, abs=1e-12)


def test_method4_top_level_equals_method2():
    for seed in range(5):
        q = random_polynomial(3, 3, seed)
        assert method4(q, 2).value == pytest.approx(method2(q, 2).value, rel=1e-12)


def _pi_weights(q):
    n = q.n
    pi = [1.0] * (n + 1)
    for j in range(n - 1, -1, -1):
        pi[j] = pi[j + 1] * constant_C(q, j) ** 2
    return pi


def test_method5_reproduces_method3_exact():
    n = HOLBROOK_Q.n
    pi = [F(1, 1)] * (n + 1)
    pi[1] = F(2, 3)
    pi[0] = F(2, 3) * F(2, 5)
    E = [exact_matrix(np.eye(dim(3, m), dtype=int)) * pi[n - m] for m in range(n + 1)]
    r = method5_verify(HOLBROOK_Q, E)
    assert not isinstance(r, Method5Violation)
    assert r.exact and r.value_sq == 1 == method3(HOLBROOK_Q).value_sq
    assert r.verify(HOLBROOK_Q)


def test_method5_reproduces_method3_float():
    q = random_polynomial(3, 3, 1)
    pi = _pi_weights(q)
    E = [np.eye(dim(3, m)) * pi[q.n - m] for m in range(q.n + 1)]
    r = method5_verify(q, E)
    assert r.value == pytest.approx(method3(q).value, rel=1e-9)
    assert r.verify(q)


def test_method5_identity_weights():
    q = random_polynomial(3, 2, 2)
    E = [np.eye(dim(3, m)) for m in range(q.n + 1)]
    r = method5_verify(q, E)
    assert r.value_sq == pytest.approx(method1(q, 0).value_sq, rel=1e-12)
    assert r.verify(q)


def test_method5_violation():
    n = HOLBROOK_Q.n
    E = [exact_matrix(np.eye(dim(3, m), dtype=int)) for m in range(n + 1)]
    # <E_n q, q> = 15/16 drops below ||M_{z_1}^* q||^2 = 9/8
    E[n] = E[n] * F(1, 4)
    r = method5_verify(HOLBROOK_Q, E)
    assert isinstance(r, Method5Violation) and not r.ok
    assert all(m == n - 1 for m, _, _ in r.violations)
    with pytest.raises(ValueError):
        method5_verify(HOLBROOK_Q, E[:-1])
    bad0 = list(E)
    bad0[0] = exact_matrix([[2]])
    with pytest.raises(ValueError):
        method5_verify(HOLBROOK_Q, bad0)


def test_level_out_of_range():
    with pytest.raises(ValueError):
        method1(HOLBROOK_Q, 2)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_bound_invariants(d, n, seed):
    q = random_polynomial(d, n, seed)
    for k in range(n):
        assert method2(q, k).value <= method1(q, k).value + 1e-10
    assert method3(q).value <= q.norm2() + 1e-10
    for b in all_bounds(q):
        assert b.verify(q)


@settings(max_examples=8, deadline=None)
@given(st.integers(2, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_bounds_dominate_dual_norm(d, n, seed):
    q = random_polynomial(d, n, seed)
    assert dual_sa_norm(q).value <= best_bound(q).value + 1e-6
