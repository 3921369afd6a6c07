import itertools
import math

import pytest

from aglerkit.bounds import method2
from aglerkit.certify import check_cone_membership, check_top_block
from aglerkit.dixon import dixon_construct, dixon_size_bound, greedy_family


def _pairwise_ok(family, t):
    return all(len(set(A) & set(B)) < t for A, B in itertools.combinations(family, 2))


def test_degree_one_case():
    R = dixon_construct(3, 0)
    assert R.family == ((1,), (2,), (3,))
    assert R.N == 3 and R.sa_lower_bound_sq == 9
    assert R.sup_estimate == pytest.approx(3)
    assert R.ratio == pytest.approx(1)


@pytest.mark.parametrize("d", range(3, 10))
def test_desk_scale_r1(d):
    R = dixon_construct(d, 1)
    assert _pairwise_ok(R.family, 2)
    assert all(len(A) == 3 for A in R.family)
    assert R.membership.ok and check_cone_membership(R.L, "exact").ok
    assert check_top_block(R.L, R.p)
    assert R.dual_norm_sq == 1
    assert R.sa_lower_bound_sq == R.N ** 2
    assert R.N >= dixon_size_bound(d, 1)
    assert set(map(abs, R.signs)) == {1}
    assert R.sup_estimate <= R.N + 1e-9


def test_certificate_matches_method2_at_level_r():
    R = dixon_construct(7, 1)
    b = method2(R.p, 1)
    assert b.exact and b.value_sq == 1
    for A, B in zip(b.certificate.blocks, R.L.blocks):
        assert (A == B).all()


def test_greedy_family_is_lexicographic():
    fam = greedy_family(7, 3, 2)
    assert fam[0] == (1, 2, 3) and fam == sorted(fam)
    assert len(fam) == 7


def test_random_strategy_deterministic():
    a = dixon_construct(8, 1, "random", seed=5, trials=40)
    b = dixon_construct(8, 1, "random", seed=5, trials=40)
    assert a.signs == b.signs and a.sup_estimate == b.sup_estimate
    assert a.signs[0] == 1


def test_errors():
    with pytest.raises(ValueError):
        dixon_construct(2, 1)
    with pytest.raises(ValueError):
        dixon_construct(5, 1, "greedy")


def test_size_bound_formula():
    assert dixon_size_bound(9, 1) == pytest.approx(math.comb(9, 3) / (math.comb(9, 1) * math.comb(3, 2)))
