import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aglerkit import norms
from aglerkit.fixtures import kaijser_varopoulos
from aglerkit.norms import (NormResult, SolverFailure, dual_sa_norm, evaluate_on_tuple, ratio,
                            sa_norm, sampled_lower_bound, sup_norm, triple_norm_1, triple_norm_2,
                            weak_product_dual, weak_product_norm, z_weak_product_norm,
                            z_weak_product_primal)
from aglerkit.polycore import (HomogeneousPolynomial, closed_form_kvh, homogenize, inner_product,
                               kernel_polynomial, kvh_polynomial, monomial, parse_poly,
                               random_polynomial)

KV = kaijser_varopoulos()


def test_kv_sa_norm():
    r = sa_norm(KV)
    assert r.kind == "sdp-optimal"
    assert r.value == pytest.approx(6, abs=1e-7)


def test_kv_sa_norm_certified():
    r = sa_norm(KV, certify=True)
    assert r.kind == "certified-lower"
    assert r.value <= 6 + 1e-12 and r.value == pytest.approx(6, abs=1e-6)


@pytest.mark.parametrize("alpha", [(2,), (1, 1), (0, 3), (1, 1, 1), (2, 0, 1)])
def test_monomials_have_norm_one(alpha):
    p = monomial(alpha)
    assert sa_norm(p).value == pytest.approx(1, abs=1e-7)
    assert sup_norm(p).value == pytest.approx(1, abs=1e-12)
    assert ratio(p) == pytest.approx(1, abs=1e-7)


@pytest.mark.parametrize("t", [-2, -1, F(-1, 2), 1, 2j])
def test_kvh_sa_closed_form(t):
    p = kvh_polynomial(3, t)
    assert sa_norm(p).value == pytest.approx(closed_form_kvh(3, complex(t))[0], abs=1e-4)


def test_dual_norm_examples():
    assert dual_sa_norm(kvh_polynomial(3, F(-1, 2))).value == pytest.approx(1, abs=1e-6)
    assert dual_sa_norm(kvh_polynomial(3, -1)).value == pytest.approx(5 / 3, abs=1e-6)
    for n in range(1, 5):
        assert dual_sa_norm(kernel_polynomial(3, n)).value == pytest.approx(1, abs=1e-5)


def test_dual_certified_upper():
    q = kvh_polynomial(3, F(-1, 2))
    r = dual_sa_norm(q, certify=True)
    assert r.kind == "certified-upper"
    assert r.value >= 1 - 1e-12 and r.value == pytest.approx(1, abs=1e-6)


@settings(max_examples=12, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_dual_at_least_max_coefficient(d, n, seed):
    q = random_polynomial(d, n, seed)
    assert dual_sa_norm(q).value >= max(abs(complex(c)) for c in q.coeffs.values()) - 1e-7


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_absolute_homogeneity(d, n, seed):
    p = random_polynomial(d, n, seed)
    c = 0.7 - 1.9j
    assert sa_norm(p * c).value == pytest.approx(abs(c) * sa_norm(p).value, rel=1e-6)
    assert dual_sa_norm(p * c).value == pytest.approx(abs(c) * dual_sa_norm(p).value, rel=1e-6)


@settings(max_examples=10, deadline=None)
@given(st.integers(2, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_duality_and_extracted_optimiser(d, n, seed):
    rng = np.random.default_rng(seed)
    p = random_polynomial(d, n, rng)
    r = sa_norm(p)
    s = r.value
    for _ in range(3):
        q = random_polynomial(d, n, rng)
        assert s >= abs(inner_product(p, q)) / dual_sa_norm(q).value - 1e-6
    # q = L_n p / s satisfies ||q||_* <= 1 and <p, q> = s
    Ln = np.asarray(r.certificate.blocks[-1])
    q = HomogeneousPolynomial.from_vector(d, n, Ln @ p.vector() / s)
    assert abs(inner_product(p, q)) == pytest.approx(s, rel=1e-6)
    assert s == pytest.approx(abs(inner_product(p, q)) / dual_sa_norm(q).value, rel=10 * 1e-6)


def test_weak_product_k0_is_l2():
    p = random_polynomial(3, 3, 11)
    assert weak_product_norm(p, 0).value == pytest.approx(p.norm2(), abs=1e-8)
    assert weak_product_norm(p, 3).value == pytest.approx(p.norm2(), abs=1e-8)


def test_weak_product_primal_dual_agree():
    for seed in range(4):
        p = random_polynomial(3, 3, seed)
        for k in range(4):
            r = weak_product_norm(p, k)
            assert r.details["dual_value"] == pytest.approx(r.value, abs=1e-7)
    p = random_polynomial(2, 3, 9)
    for k in range(3):
        assert z_weak_product_norm(p, k).value == pytest.approx(z_weak_product_primal(p, k).value, abs=1e-7)


def test_weak_product_of_single_product():
    rng = np.random.default_rng(4)
    for _ in range(5):
        # f in z1, z2 and g = c z3: the representing matrix is forced rank one
        f = HomogeneousPolynomial.from_vector(3, 1, [*rng.standard_normal(2), 0.0])
        g = HomogeneousPolynomial.from_vector(3, 1, [0.0, 0.0, complex(rng.standard_normal())])
        assert weak_product_norm(f * g, 1).value == pytest.approx(f.norm2() * g.norm2(), abs=1e-7)
    f = random_polynomial(3, 1, 1)
    g = random_polynomial(3, 1, 2)
    assert weak_product_norm(f * g, 1).value <= f.norm2() * g.norm2() + 1e-7


def test_z_alpha_times_q():
    rng = np.random.default_rng(3)
    for _ in range(4):
        q = random_polynomial(3, 1, rng)
        p = monomial((1, 1, 0)).to_float() * q
        assert triple_norm_1(p).value == pytest.approx(q.norm2(), abs=1e-6)


def test_triple_norm_chain_small():
    for seed in range(3):
        p = random_polynomial(3, 3, seed)
        t1, t2, sa = triple_norm_1(p).value, triple_norm_2(p, cross_check=True).value, sa_norm(p).value
        assert p.norm2() <= t1 + 1e-7 <= t2 + 2e-7 <= sa + 3e-7
        assert t2 <= math.sqrt(3) * t1 + 1e-6
        assert t1 <= math.sqrt(math.comb(4, 2)) * p.norm2() + 1e-6


def test_triple_norms_degree_zero():
    c = HomogeneousPolynomial(2, 0, {(0, 0): 3 - 4j})
    assert triple_norm_1(c).value == triple_norm_2(c).value == 5
    assert sa_norm(c).value == dual_sa_norm(c).value == 5


def test_sup_norm_kv():
    r = sup_norm(KV)
    assert r.kind == "grid-estimate"
    assert r.value == pytest.approx(5, abs=1e-6)
    assert ratio(KV) == pytest.approx(6 / 5, abs=1e-6)


@pytest.mark.parametrize("t", [-2, -1, 0.5, 2, 1 + 1j])
def test_even_d_kvh_sup_equals_sa(t):
    p = kvh_polynomial(2, t)
    assert sup_norm(p).value == pytest.approx(sa_norm(p).value, abs=1e-6)


def test_sup_norm_random_sampling_fallback():
    p = random_polynomial(4, 2, 0)
    grid = sup_norm(p, grid_per_dim=32)
    sampled = sup_norm(p, grid_per_dim=64, max_points=2**12)
    assert sampled.details["sampling"] == "random"
    assert sampled.value == pytest.approx(grid.value, rel=1e-6)


def test_low_dimension_ratio_one():
    rng = np.random.default_rng(8)
    for d in (1, 2):
        for _ in range(3):
            p = random_polynomial(d, int(rng.integers(1, 4)), rng)
            assert ratio(p) == pytest.approx(1, abs=1e-4)


def test_sampled_lower_bound_sound():
    r = sampled_lower_bound(KV, trials=2000, seed=1)
    assert r.kind == "sampled-lower" and 0 < r.value <= 6 + 1e-6
    for s in range(3):
        assert sampled_lower_bound(KV, trials=500, seed=s, strategy="sum").value <= 6 + 1e-6
    p = HomogeneousPolynomial(1, 3, {(3,): 1})
    assert sampled_lower_bound(p, trials=300).value <= 1 + 1e-9


@settings(max_examples=8, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 10**6))
def test_sampled_lower_bound_below_sa(d, n, seed):
    p = random_polynomial(d, n, seed)
    assert sampled_lower_bound(p, trials=300, seed=seed).value <= sa_norm(p).value + 1e-6


def test_evaluate_on_tuple_checks():
    A = np.array([[0, 1], [0, 0]], dtype=float)
    assert evaluate_on_tuple(parse_poly("z1 z2", 2), [A, A]) == 0
    with pytest.raises(ValueError):
        evaluate_on_tuple(parse_poly("z1 z2", 2), [A, A.T])
    with pytest.raises(ValueError):
        evaluate_on_tuple(parse_poly("z1 z2", 2), [A])


def test_homogenization_dominates_by_sampling():
    # f = 1 + z1 - 2 z1 z2 + z2^2 / 2, checked on random commuting contractions
    f = {(0, 0): 1, (1, 0): 1, (1, 1): -2, (0, 2): F(1, 2)}
    h = homogenize(f, 2)
    bound = sa_norm(h).value
    rng = np.random.default_rng(0)
    for _ in range(200):
        M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        A = M / np.linalg.norm(M, 2)
        T = []
        for _ in range(2):
            a, b = rng.uniform(-1, 1, 2) * np.exp(1j * rng.uniform(0, 2 * np.pi, 2))
            s = abs(a) + abs(b)
            T.append((a * A + b * A @ A) / max(s, 1.0))
        val = np.eye(4) + T[0] - 2 * T[0] @ T[1] + 0.5 * T[1] @ T[1]
        assert np.linalg.norm(val, 2) <= bound + 1e-7


def test_zero_polynomial_rejected():
    with pytest.raises(ValueError):
        sa_norm(HomogeneousPolynomial(2, 2, {}))


def test_norm_result_kind_validated():
    with pytest.raises(ValueError):
        NormResult(1.0, "made-up")


def test_stalling_instance_recovers_by_retry():
    # Clarabel stalls on this instance at tolerances tighter than requested; the
    # retry at the requested tolerances must still return a verified optimum.
    p = HomogeneousPolynomial(2, 2, {(2, 0): -0.441915799497081 + 0.11766038713801888j,
                                     (1, 1): 0.17157341970981155 + 0.8129158988318206j,
                                     (0, 2): -0.8232007424392281 + 0.4952479360551474j})
    r = sa_norm(p)
    assert r.kind == "sdp-optimal"
    assert r.value == pytest.approx(sup_norm(p).value, abs=1e-6)
