import json
import math
from fractions import Fraction as F

import numpy as np
import pytest

from aglerkit.certify import (CERTIFICATE_SCHEMA, CertificateError, GradedOperator,
                              certified_dual_upper_bound, certified_dual_upper_bound_sq,
                              certified_sa_lower_bound, certified_sa_lower_bound_sq,
                              check_cone_membership, check_top_block, outer, repair_certificate)
from aglerkit.exact import GaussianRational, charpoly, exact_matrix, rational_psd
from aglerkit.fixtures import (FIXTURE_NAMES, fixture, fixture_tuple, kaijser_varopoulos,
                               tuple_l_operator)
from aglerkit.norms import evaluate_on_tuple, sa_norm
from aglerkit.polycore import inner_product, kvh_polynomial, random_polynomial


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_fixture_membership_exact_and_float_agree(name):
    L = fixture(name).L
    assert L.exact
    exact = check_cone_membership(L, "exact")
    flt = check_cone_membership(L, "float")
    assert exact.ok and flt.ok
    assert [b.ok for b in exact.blocks] == [b.ok for b in flt.blocks]


def test_vk_fixture():
    fx = fixture("vk")
    assert certified_sa_lower_bound_sq(fx.L, fx.p) == 27
    assert certified_sa_lower_bound(fx.L, fx.p) == pytest.approx(3 * math.sqrt(3))
    assert check_top_block(fx.L, fx.q, scale=fx.top_scale)
    assert fx.expected["sup_norm"] == 5


def test_crabb_davie_fixture():
    fx = fixture("crabb_davie")
    assert certified_sa_lower_bound_sq(fx.L, fx.p) == 16
    assert check_top_block(fx.L, fx.p)
    assert certified_dual_upper_bound_sq(fx.L, fx.p) == 1
    assert fx.p.norm2_sq() == 4


def test_holbrook_fixture():
    fx = fixture("holbrook")
    assert check_top_block(fx.L, fx.q)
    assert certified_dual_upper_bound_sq(fx.L, fx.q) == 1
    # ||p||_SA >= <p, q> / ||q||_* = 6
    assert inner_product(fx.p, fx.q) / certified_dual_upper_bound(fx.L, fx.q) == 6


def test_tto_fixture():
    fx = fixture("tto")
    L = fx.L
    assert L.L0 == 1
    assert L.quadratic(fx.p) == F(144, 5)
    assert rational_psd(L.blocks[2])
    x = F(3, 2)
    # det(xI - L2) = x^3 (x - 3/2)^2 (x - 3)
    cp = charpoly(L.blocks[2])
    expected = [F(0), F(0), F(0), F(-27, 4), F(45, 4), F(-6), F(1)]
    assert cp == expected
    assert not check_top_block(L, fx.q)


def test_scaled_tto_block_dominates_qq_by_rank_two_multiple():
    fx = fixture("tto")
    c = fx.expected["dual_tto_scale"]
    D = exact_matrix(fx.L.blocks[2] * c - outer(fx.q.vector(exact=True), True))
    assert rational_psd(D)
    lam = np.linalg.eigvalsh(np.asarray(D, dtype=float))
    nonzero = lam[np.abs(lam) > 1e-9]
    assert len(nonzero) == 2 and nonzero[0] == pytest.approx(nonzero[1])


def test_membership_violation_reported():
    L = GradedOperator(3, 1, [exact_matrix([[1]]), exact_matrix(np.eye(3, dtype=int) * 2)])
    rep = check_cone_membership(L)
    assert not rep.ok
    assert {(f.k, f.i) for f in rep.failures()} == {(1, 1), (1, 2), (1, 3)}
    with pytest.raises(CertificateError):
        certified_sa_lower_bound(L, kvh_polynomial(3, 0).__class__(3, 1, {(1, 0, 0): 1}))


def test_top_block_scaled_mismatch():
    fx = fixture("crabb_davie")
    doubled = GradedOperator(3, 3, list(fx.L.blocks[:-1]) + [fx.L.blocks[-1] * 2], exact=True)
    assert not check_top_block(doubled, fx.p)
    assert check_top_block(doubled, fx.p, scale=2)


def test_non_hermitian_rejected():
    with pytest.raises(CertificateError):
        GradedOperator(1, 1, [exact_matrix([[1]]), exact_matrix([[GaussianRational(1, 1)]])])
    with pytest.raises(CertificateError):
        GradedOperator(2, 1, [np.eye(1)])


@pytest.mark.parametrize("name", FIXTURE_NAMES)
def test_json_round_trip_exact(name):
    L = fixture(name).L
    text = L.to_json(source=f"fixture:{name}", claims={"x": "1/3"})
    obj = json.loads(text)
    assert obj["schema"] == CERTIFICATE_SCHEMA and obj["mode"] == "exact"
    assert obj["meta"]["source"] == f"fixture:{name}"
    back = GradedOperator.from_json(text)
    assert back.exact
    for A, B in zip(L.blocks, back.blocks):
        assert (A == B).all()
    assert back.to_json(source=f"fixture:{name}", claims={"x": "1/3"}) == text


def test_json_round_trip_complex_and_float():
    i = GaussianRational(0, 1)
    L = GradedOperator(2, 1, [exact_matrix([[2]]), exact_matrix([[1, i / 2], [-i / 2, 1]])])
    back = GradedOperator.from_json(L.to_json())
    assert (back.blocks[1] == L.blocks[1]).all()
    Lf = L.to_float()
    backf = GradedOperator.from_json(Lf.to_json())
    assert np.allclose(backf.blocks[1], Lf.blocks[1])


@pytest.mark.parametrize("name", ["vk", "crabb_davie", "holbrook"])
def test_tuple_route_matches_certificate(name):
    fx = fixture(name)
    T, xi = fixture_tuple(name)
    Lt = tuple_l_operator(T, xi, fx.p.n)
    assert check_cone_membership(Lt, "float").ok
    via_tuple = certified_sa_lower_bound(Lt, fx.p.to_float())
    via_vector = np.linalg.norm(_apply(fx.p, T, xi))
    assert via_tuple == pytest.approx(via_vector, abs=1e-10)
    if name in ("vk", "holbrook"):
        assert evaluate_on_tuple(fx.p, T) == pytest.approx(certified_sa_lower_bound(fx.L, fx.p), abs=1e-10)
    if name == "holbrook":
        assert via_tuple == pytest.approx(6, abs=1e-10)


def _apply(p, T, xi):
    out = np.zeros(len(xi), dtype=complex)
    for alpha, c in p.coeffs.items():
        v = np.asarray(xi, dtype=complex)
        for i in reversed(range(len(T))):
            for _ in range(alpha[i]):
                v = T[i] @ v
        out += complex(c) * v
    return out


def test_crabb_davie_tuple_vector():
    T, xi = fixture_tuple("crabb_davie")
    p = fixture("crabb_davie").p
    v = _apply(p, T, xi)
    assert np.allclose(v, 4 * np.eye(8)[7])
    assert evaluate_on_tuple(p, T) >= 4 - 1e-12
    assert fixture_tuple("tto") is None


def test_repair_certificate_primal():
    p = kaijser_varopoulos()
    r = sa_norm(p)
    E = repair_certificate(r.certificate)
    assert E.exact and check_cone_membership(E, "exact").ok
    bound = certified_sa_lower_bound(E, p)
    assert bound <= 6 + 1e-12 and bound == pytest.approx(6, abs=1e-6)


def test_repair_certificate_dual_pins_top_block():
    from aglerkit.norms import dual_sa_norm
    q = random_polynomial(2, 2, 5)
    r = dual_sa_norm(q)
    E = repair_certificate(r.certificate, q=q)
    assert check_top_block(E, q.to_exact())
    ub = certified_dual_upper_bound(E, q)
    assert ub >= r.value - 1e-6 and ub == pytest.approx(r.value, abs=1e-6)
