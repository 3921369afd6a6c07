from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aglerkit.exact import (GaussianRational, charpoly, column_basis, exact_det, exact_lambda_max,
                            exact_matrix, ldl_pivoted, lambda_max_is, rational_psd, to_exact)

fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)
gaussians = st.builds(GaussianRational, fractions, fractions)


@given(gaussians, gaussians, gaussians)
def test_gaussian_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    assert a.abs2() == (a * a.conjugate())
    if a != 0:
        assert (b / a) * a == b


def test_gaussian_simplifies_to_fraction():
    z = GaussianRational(F(1, 2), 3)
    assert (z * z.conjugate()) == F(37, 4)
    assert to_exact("1/2-3i") == GaussianRational(F(1, 2), -3)
    assert complex(GaussianRational(1, -2)) == 1 - 2j


def test_rational_psd_small_cases():
    assert not rational_psd([[1, 2], [2, 1]])
    assert rational_psd([[1, 1], [1, 1]])
    assert rational_psd([[0, 0], [0, 0]])
    # zero pivot with a nonzero remainder in its row is not PSD
    assert not rational_psd([[0, 1], [1, 0]])
    assert not rational_psd([[0, 0, 1], [0, 1, 0], [1, 0, 0]])
    with pytest.raises(ValueError):
        rational_psd([[1, 2], [0, 1]])


def test_rational_psd_hermitian_complex():
    i = GaussianRational(0, 1)
    assert rational_psd([[1, i], [-i, 1]])
    assert not rational_psd([[1, 2 * i], [-2 * i, 1]])


def test_ldl_rank():
    M = exact_matrix([[4, 2, 0], [2, 1, 0], [0, 0, 3]])
    r = ldl_pivoted(M)
    assert r.psd and r.rank == 2


def _rand_rational_matrix(rng, m):
    kind = rng.integers(3)
    B = rng.integers(-4, 5, size=(m, rng.integers(1, m + 1)))
    if kind == 0:
        M = B @ B.T                                     # PSD, often singular
    elif kind == 1:
        M = B @ B.T - rng.integers(1, 3) * np.eye(m, dtype=int)
    else:
        A = rng.integers(-3, 4, size=(m, m))
        M = A + A.T
    den = int(rng.integers(1, 6))
    return [[F(int(x), den) for x in row] for row in M], M / den


def test_rational_psd_agrees_with_float_eigenvalues_on_1000_matrices():
    rng = np.random.default_rng(0)
    checked = 0
    while checked < 1000:
        m = int(rng.integers(1, 9))
        R, Mf = _rand_rational_matrix(rng, m)
        lam = np.linalg.eigvalsh(Mf)
        margin = np.abs(lam[np.abs(lam) > 1e-12]).min(initial=np.inf)
        if margin <= 1e-8 and np.abs(lam).min() > 1e-12:
            continue
        expected = lam.min() > -1e-9
        assert rational_psd(R) == expected, (R, lam)
        checked += 1


def test_det_and_charpoly():
    M = exact_matrix([[2, 1], [1, 2]])
    assert exact_det(M) == 3
    assert charpoly(M) == [3, -4, 1]
    assert exact_det([[1, 2], [2, 4]]) == 0


def test_column_basis():
    M = exact_matrix([[1, 2, 3], [2, 4, 6]])
    assert column_basis(M) == [0]


def test_exact_lambda_max():
    G = exact_matrix([[F(5, 2), F(1, 2)], [F(1, 2), F(5, 2)]])
    assert lambda_max_is(G, 3)
    assert not lambda_max_is(G, F(29, 10))
    assert exact_lambda_max(G, 3.0000000001) == 3
